#ifndef CODENAMES_H
#define CODENAMES_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CnStatus {
  CN_STATUS_OK = 0,
  CN_STATUS_NULL_POINTER = 1,
  CN_STATUS_INVALID_UTF8 = 2,
  CN_STATUS_INVALID_ARGUMENT = 3,
  CN_STATUS_IO = 4,
  CN_STATUS_UNKNOWN_REPRESENTATION = 5,
  CN_STATUS_MISSING_RESOURCE = 6,
  CN_STATUS_NO_CANDIDATES = 7,
  CN_STATUS_INTERNAL = 8,
} CnStatus;

typedef enum CnIndex {
  CN_INDEX_EXACT = 0,
  CN_INDEX_HNSW = 1,
} CnIndex;

typedef enum CnScoring {
  CN_SCORING_OURS = 0,
  CN_SCORING_KIM = 1,
} CnScoring;

/**
 * A board of blue and red words.
 */
typedef struct CnBoard CnBoard;

/**
 * The chosen clue with its intended words and score terms.
 */
typedef struct CnClueResult CnClueResult;

/**
 * Loaded representations and resources.
 */
typedef struct CnEngine CnEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread; do not free.
 */
const char *cn_last_error_message(void);

/**
 * Library version, static.
 */
const char *cn_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string produced by this library and not yet freed.
 */
void cn_string_free(char *s);

/**
 * An engine with default parameters and no representations.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CnStatus cn_engine_new(struct CnEngine **out);

/**
 * An engine built from a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CnStatus cn_engine_from_config(const char *path, struct CnEngine **out);

/**
 * # Safety
 * `engine` must be null or a handle from this library, freed at most once.
 */
void cn_engine_free(struct CnEngine *engine);

/**
 * Adds an embedding representation read from a text vector file.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum CnStatus cn_engine_add_embeddings(struct CnEngine *engine,
                                       const char *name,
                                       const char *path,
                                       enum CnIndex index);

/**
 * Adds a graph representation backed by a fixture graph file.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum CnStatus cn_engine_add_graph_fixture(struct CnEngine *engine,
                                          const char *name,
                                          const char *path);

/**
 * Loads the document-frequency table and dictionary embeddings DETECT needs.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum CnStatus cn_engine_set_detect(struct CnEngine *engine,
                                   const char *docfreq_path,
                                   const char *dict_path);

/**
 * Parses a board from `blue: a, b` / `red: c, d` text.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` valid.
 */
enum CnStatus cn_board_parse(const char *text, struct CnBoard **out);

/**
 * Samples a board from a newline-separated word list.
 *
 * # Safety
 * `wordlist` must be NUL-terminated and `out` valid.
 */
enum CnStatus cn_board_generate(const char *wordlist,
                                size_t per_team,
                                uint64_t seed,
                                struct CnBoard **out);

/**
 * The board in its text form.
 *
 * # Safety
 * `board` must be a live handle and `out` valid.
 */
enum CnStatus cn_board_to_text(const struct CnBoard *board, char **out);

/**
 * # Safety
 * `board` must be null or a handle from this library, freed at most once.
 */
void cn_board_free(struct CnBoard *board);

/**
 * Picks a clue for `board`.
 *
 * # Safety
 * Handles must be live, `representation` NUL-terminated and `out` valid.
 */
enum CnStatus cn_engine_clue(const struct CnEngine *engine,
                             const struct CnBoard *board,
                             const char *representation,
                             enum CnScoring scoring,
                             bool detect,
                             struct CnClueResult **out);

/**
 * The clue word.
 *
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum CnStatus cn_clue_result_clue(const struct CnClueResult *result, char **out);

/**
 * The total score of the chosen clue.
 *
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum CnStatus cn_clue_result_score(const struct CnClueResult *result, double *out);

/**
 * Number of intended words.
 *
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum CnStatus cn_clue_result_intended_count(const struct CnClueResult *result, size_t *out);

/**
 * Intended word `i`, in sorted order.
 *
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum CnStatus cn_clue_result_intended(const struct CnClueResult *result, size_t i, char **out);

/**
 * The full result, including the score breakdown, as JSON.
 *
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum CnStatus cn_clue_result_to_json(const struct CnClueResult *result, char **out);

/**
 * # Safety
 * `result` must be null or a handle from this library, freed at most once.
 */
void cn_clue_result_free(struct CnClueResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODENAMES_H */
