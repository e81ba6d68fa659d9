use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use codenames_ffi::*;

fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> Option<String> {
    let p = cn_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    cn_string_free(s);
    out
}

unsafe fn musical_engine() -> *mut CnEngine {
    let mut engine = ptr::null_mut();
    assert_eq!(cn_engine_new(&mut engine), CnStatus::Ok);
    let path = c(core_fixture("musical_graph.jsonl").to_str().unwrap());
    assert_eq!(cn_engine_add_graph_fixture(engine, c("babelnet").as_ptr(), path.as_ptr()), CnStatus::Ok);
    engine
}

unsafe fn musical_board() -> *mut CnBoard {
    let text = std::fs::read_to_string(core_fixture("musical_board.txt")).unwrap();
    let mut board = ptr::null_mut();
    assert_eq!(cn_board_parse(c(&text).as_ptr(), &mut board), CnStatus::Ok);
    board
}

#[test]
fn clue_through_the_c_abi() {
    unsafe {
        let engine = musical_engine();
        let board = musical_board();
        let mut result = ptr::null_mut();
        let status = cn_engine_clue(engine, board, c("babelnet").as_ptr(), CnScoring::Ours, false, &mut result);
        assert_eq!(status, CnStatus::Ok, "{:?}", last_error());
        assert!(last_error().is_none());

        let mut clue = ptr::null_mut();
        assert_eq!(cn_clue_result_clue(result, &mut clue), CnStatus::Ok);
        assert_eq!(take(clue), "musical");
        let mut n = 0usize;
        assert_eq!(cn_clue_result_intended_count(result, &mut n), CnStatus::Ok);
        assert_eq!(n, 2);
        let words: Vec<String> = (0..n)
            .map(|i| {
                let mut w = ptr::null_mut();
                assert_eq!(cn_clue_result_intended(result, i, &mut w), CnStatus::Ok);
                take(w)
            })
            .collect();
        assert_eq!(words, ["opera", "scale"]);
        let mut score = 0.0;
        assert_eq!(cn_clue_result_score(result, &mut score), CnStatus::Ok);
        assert!((score - (1.0 + 1.0 / 2.1)).abs() < 1e-12);
        let mut json = ptr::null_mut();
        assert_eq!(cn_clue_result_to_json(result, &mut json), CnStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["clue"], "musical");

        let mut out_of_range = ptr::null_mut();
        assert_eq!(cn_clue_result_intended(result, 5, &mut out_of_range), CnStatus::InvalidArgument);
        assert!(out_of_range.is_null());

        cn_clue_result_free(result);
        cn_board_free(board);
        cn_engine_free(engine);
    }
}

#[test]
fn errors_set_status_and_thread_local_message() {
    unsafe {
        let engine = musical_engine();
        let board = musical_board();
        let mut result = ptr::null_mut();
        let status = cn_engine_clue(engine, board, c("glove").as_ptr(), CnScoring::Kim, false, &mut result);
        assert_eq!(status, CnStatus::UnknownRepresentation);
        assert!(result.is_null());
        assert!(last_error().unwrap().contains("glove"));

        // The message is per thread.
        let other = std::thread::spawn(last_error).join().unwrap();
        assert!(other.is_none());

        let status = cn_engine_clue(engine, board, c("babelnet").as_ptr(), CnScoring::Ours, true, &mut result);
        assert_eq!(status, CnStatus::MissingResource);

        // A successful call clears it.
        let mut text = ptr::null_mut();
        assert_eq!(cn_board_to_text(board, &mut text), CnStatus::Ok);
        assert!(last_error().is_none());
        assert!(take(text).contains("blue:"));

        cn_board_free(board);
        cn_engine_free(engine);
    }
}

#[test]
fn null_and_bad_input_are_rejected() {
    unsafe {
        assert_eq!(cn_engine_new(ptr::null_mut()), CnStatus::NullPointer);
        let mut board = ptr::null_mut();
        assert_eq!(cn_board_parse(ptr::null(), &mut board), CnStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(cn_board_parse(bad.as_ptr().cast(), &mut board), CnStatus::InvalidUtf8);
        assert_eq!(cn_board_parse(c("blue: a\nred: a").as_ptr(), &mut board), CnStatus::InvalidArgument);
        assert!(board.is_null());
        let mut result = ptr::null_mut();
        assert_eq!(
            cn_engine_clue(ptr::null(), ptr::null(), c("x").as_ptr(), CnScoring::Ours, false, &mut result),
            CnStatus::NullPointer
        );
        let mut engine = ptr::null_mut();
        assert_eq!(cn_engine_new(&mut engine), CnStatus::Ok);
        assert_eq!(
            cn_engine_add_embeddings(engine, c("w").as_ptr(), c("/nonexistent.txt").as_ptr(), CnIndex::Exact),
            CnStatus::Io
        );
        cn_engine_free(engine);
        // Freeing null is a no-op.
        cn_engine_free(ptr::null_mut());
        cn_board_free(ptr::null_mut());
        cn_clue_result_free(ptr::null_mut());
        cn_string_free(ptr::null_mut());
    }
}

#[test]
fn boards_generate_deterministically() {
    unsafe {
        let words = std::fs::read_to_string(core_fixture("wordlist.txt")).unwrap();
        let gen = |seed| {
            let mut b = ptr::null_mut();
            assert_eq!(cn_board_generate(c(&words).as_ptr(), 5, seed, &mut b), CnStatus::Ok);
            let mut t = ptr::null_mut();
            assert_eq!(cn_board_to_text(b, &mut t), CnStatus::Ok);
            cn_board_free(b);
            take(t)
        };
        assert_eq!(gen(4), gen(4));
        assert_ne!(gen(4), gen(5));
        let mut b = ptr::null_mut();
        assert_eq!(cn_board_generate(c("one\ntwo").as_ptr(), 5, 0, &mut b), CnStatus::InvalidArgument);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(cn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/codenames.h")).unwrap();
    for f in ["cn_engine_new", "cn_engine_clue", "cn_last_error_message", "cn_string_free", "cn_clue_result_free"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    // The test binary lives in <target>/<profile>/deps; the shared library one level up.
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libcodenames_ffi.so").exists() || lib_dir.join("libcodenames_ffi.dylib").exists());

    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "codenames.h"

static const char *BOARD = "blue: scale, opera, glass, capital\nred: paste, air, cold, lemon\n";

int main(int argc, char **argv) {
    CnEngine *e = NULL;
    CnBoard *b = NULL;
    CnClueResult *r = NULL;
    char *clue = NULL;
    if (argc < 2) return 10;
    if (cn_engine_new(&e) != CN_STATUS_OK) return 11;
    if (cn_engine_add_graph_fixture(e, "babelnet", argv[1]) != CN_STATUS_OK) return 12;
    if (cn_board_parse(BOARD, &b) != CN_STATUS_OK) return 13;
    if (cn_engine_clue(e, b, "nope", CN_SCORING_OURS, false, &r) != CN_STATUS_UNKNOWN_REPRESENTATION) return 14;
    if (cn_last_error_message() == NULL) return 15;
    if (cn_engine_clue(e, b, "babelnet", CN_SCORING_OURS, false, &r) != CN_STATUS_OK) return 16;
    if (cn_clue_result_clue(r, &clue) != CN_STATUS_OK) return 17;
    printf("%s\n", clue);
    cn_string_free(clue);
    cn_clue_result_free(r);
    cn_board_free(b);
    cn_engine_free(e);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .arg("-o")
        .arg(&exe)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lcodenames_ffi")
        .status()
        .expect("a C compiler is needed to check the header");
    assert!(status.success());
    let out = std::process::Command::new(&exe)
        .arg(core_fixture("musical_graph.jsonl"))
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "musical\n");
}
