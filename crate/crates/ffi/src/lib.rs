//! C ABI over the clue-giving engine.
//!
//! Every fallible function returns a [`CnStatus`] and writes its result
//! through an out pointer. On failure the message is kept per thread and can
//! be read with [`cn_last_error_message`]. Handles are opaque and must be
//! released with their matching `_free` function. Strings returned through
//! out pointers are owned by the caller and released with [`cn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use codenames_core::babelnet::{FixtureGraph, RelationMap};
use codenames_core::board::{generate_board, parse_board};
use codenames_core::corpusfreq::DocFreqTable;
use codenames_core::embeddings::{load_embeddings_file, HnswParams, IndexMode, NeighborIndex};
use codenames_core::engine::Engine;
use codenames_core::eval::TrialConfig;
use codenames_core::{Board, ClueResult, ScoringFn, ScoringParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    UnknownRepresentation = 5,
    MissingResource = 6,
    NoCandidates = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnScoring {
    Ours = 0,
    Kim = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnIndex {
    Exact = 0,
    Hnsw = 1,
}

/// Loaded representations and resources.
pub struct CnEngine(Engine);

/// A board of blue and red words.
pub struct CnBoard(Board);

/// The chosen clue with its intended words and score terms.
pub struct CnClueResult(ClueResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CnStatus, String);

impl Failure {
    fn new(status: CnStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

impl From<codenames_core::engine::EngineError> for Failure {
    fn from(e: codenames_core::engine::EngineError) -> Self {
        use codenames_core::engine::EngineError as E;
        use codenames_core::ClueError;
        let status = match &e {
            E::UnknownRepresentation(_) => CnStatus::UnknownRepresentation,
            E::MissingResource(_) | E::Clue(ClueError::MissingDetectResources) => CnStatus::MissingResource,
            E::Clue(ClueError::NoCandidates) => CnStatus::NoCandidates,
            E::Clue(ClueError::UnknownBoardWord(_)) | E::Board(_) | E::Config(_) => CnStatus::InvalidArgument,
            E::Io(_) => CnStatus::Io,
            _ => CnStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Runs `f`, turning errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CnStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CnStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CnStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CnStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(CnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(CnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(CnStatus::NullPointer, "out pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(CnStatus::NullPointer, "out pointer is null"));
    }
    let c = CString::new(s).map_err(|e| Failure::new(CnStatus::Internal, e))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread; do not free.
#[no_mangle]
pub extern "C" fn cn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn cn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string produced by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// An engine with default parameters and no representations.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_new(out: *mut *mut CnEngine) -> CnStatus {
    guard(|| put(out, CnEngine(Engine::new(ScoringParams::default()))))
}

/// An engine built from a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_from_config(path: *const c_char, out: *mut *mut CnEngine) -> CnStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let cfg = codenames_core::config::EngineConfig::load(&path).map_err(|e| Failure::new(CnStatus::InvalidArgument, e))?;
        let engine = Engine::from_config(&cfg)?;
        put(out, CnEngine(engine))
    })
}

/// # Safety
/// `engine` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_free(engine: *mut CnEngine) {
    free_box(engine)
}

/// Adds an embedding representation read from a text vector file.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_add_embeddings(
    engine: *mut CnEngine,
    name: *const c_char,
    path: *const c_char,
    index: CnIndex,
) -> CnStatus {
    guard(|| {
        let engine = handle_mut(engine, "engine")?;
        let name = str_arg(name, "name")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let store = load_embeddings_file(&path, name).map_err(|e| Failure::new(CnStatus::Io, e))?;
        let mode = match index {
            CnIndex::Exact => IndexMode::Exact,
            CnIndex::Hnsw => IndexMode::Hnsw,
        };
        let idx = NeighborIndex::build(&store, mode, HnswParams::default());
        engine.0.add_embedding(name, store, idx, None);
        Ok(())
    })
}

/// Adds a graph representation backed by a fixture graph file.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_add_graph_fixture(
    engine: *mut CnEngine,
    name: *const c_char,
    path: *const c_char,
) -> CnStatus {
    guard(|| {
        let engine = handle_mut(engine, "engine")?;
        let name = str_arg(name, "name")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let graph = FixtureGraph::load(&path, &RelationMap::default()).map_err(|e| Failure::new(CnStatus::Io, e))?;
        engine.0.add_graph(name, None, Some(graph), None);
        Ok(())
    })
}

/// Loads the document-frequency table and dictionary embeddings DETECT needs.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_set_detect(
    engine: *mut CnEngine,
    docfreq_path: *const c_char,
    dict_path: *const c_char,
) -> CnStatus {
    guard(|| {
        let engine = handle_mut(engine, "engine")?;
        let df = DocFreqTable::load(&PathBuf::from(str_arg(docfreq_path, "docfreq_path")?))
            .map_err(|e| Failure::new(CnStatus::Io, e))?;
        let dict = load_embeddings_file(&PathBuf::from(str_arg(dict_path, "dict_path")?), "dict")
            .map_err(|e| Failure::new(CnStatus::Io, e))?;
        engine.0.set_detect(df, dict);
        Ok(())
    })
}

/// Parses a board from `blue: a, b` / `red: c, d` text.
///
/// # Safety
/// `text` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_board_parse(text: *const c_char, out: *mut *mut CnBoard) -> CnStatus {
    guard(|| {
        let board = parse_board(str_arg(text, "text")?).map_err(|e| Failure::new(CnStatus::InvalidArgument, e))?;
        put(out, CnBoard(board))
    })
}

/// Samples a board from a newline-separated word list.
///
/// # Safety
/// `wordlist` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_board_generate(
    wordlist: *const c_char,
    per_team: usize,
    seed: u64,
    out: *mut *mut CnBoard,
) -> CnStatus {
    guard(|| {
        let words = codenames_core::engine::load_wordlist(str_arg(wordlist, "wordlist")?)
            .map_err(|e| Failure::new(CnStatus::InvalidArgument, e))?;
        let board = generate_board(&words, per_team, seed).map_err(|e| Failure::new(CnStatus::InvalidArgument, e))?;
        put(out, CnBoard(board))
    })
}

/// The board in its text form.
///
/// # Safety
/// `board` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_board_to_text(board: *const CnBoard, out: *mut *mut c_char) -> CnStatus {
    guard(|| put_string(out, &handle(board, "board")?.0.to_text()))
}

/// # Safety
/// `board` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn cn_board_free(board: *mut CnBoard) {
    free_box(board)
}

/// Picks a clue for `board`.
///
/// # Safety
/// Handles must be live, `representation` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_engine_clue(
    engine: *const CnEngine,
    board: *const CnBoard,
    representation: *const c_char,
    scoring: CnScoring,
    detect: bool,
    out: *mut *mut CnClueResult,
) -> CnStatus {
    guard(|| {
        let engine = handle(engine, "engine")?;
        let board = handle(board, "board")?;
        let scoring_fn = match scoring {
            CnScoring::Ours => ScoringFn::Ours,
            CnScoring::Kim => ScoringFn::Kim,
        };
        let config = TrialConfig::new(str_arg(representation, "representation")?, scoring_fn, detect);
        let result = engine.0.clue(&board.0, &config)?;
        put(out, CnClueResult(result))
    })
}

/// The clue word.
///
/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_clue(result: *const CnClueResult, out: *mut *mut c_char) -> CnStatus {
    guard(|| put_string(out, handle(result, "result")?.0.clue.as_str()))
}

/// The total score of the chosen clue.
///
/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_score(result: *const CnClueResult, out: *mut f64) -> CnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        if out.is_null() {
            return Err(Failure::new(CnStatus::NullPointer, "out pointer is null"));
        }
        *out = r.0.score;
        Ok(())
    })
}

/// Number of intended words.
///
/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_intended_count(result: *const CnClueResult, out: *mut usize) -> CnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        if out.is_null() {
            return Err(Failure::new(CnStatus::NullPointer, "out pointer is null"));
        }
        *out = r.0.intended.len();
        Ok(())
    })
}

/// Intended word `i`, in sorted order.
///
/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_intended(result: *const CnClueResult, i: usize, out: *mut *mut c_char) -> CnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let w = r
            .0
            .intended
            .words()
            .get(i)
            .ok_or_else(|| Failure::new(CnStatus::InvalidArgument, format!("index {i} out of range")))?;
        put_string(out, w.as_str())
    })
}

/// The full result, including the score breakdown, as JSON.
///
/// # Safety
/// `result` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_to_json(result: *const CnClueResult, out: *mut *mut c_char) -> CnStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let json = serde_json::to_string(&r.0).map_err(|e| Failure::new(CnStatus::Internal, e))?;
        put_string(out, &json)
    })
}

/// # Safety
/// `result` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn cn_clue_result_free(result: *mut CnClueResult) {
    free_box(result)
}
