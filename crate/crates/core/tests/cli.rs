mod common;

use std::path::Path;
use std::process::Command;

use codenames_core::board::parse_boards;
use codenames_core::cli::run;
use codenames_core::corpusfreq::DocFreqTable;
use codenames_core::embeddings::load_embeddings_file;
use codenames_core::eval::MetricsReport;
use codenames_core::{ScoringFn, ScoringParams};
use common::{fixture, oracle_embedding, wordlist, world, write_store};

fn codenames(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("codenames").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Embeddings, dict, docfreq and word list on disk.
fn resources(dir: &Path) {
    let words = wordlist();
    let w = world(&words, 300, 16, 12, 77);
    write_store(&w.store, &dir.join("vectors.txt"));
    write_store(&w.dict, &dir.join("dict.txt"));
    w.df.save(&dir.join("df.tsv")).unwrap();
    std::fs::copy(fixture("wordlist.txt"), dir.join("words.txt")).unwrap();
}

fn resource_args(dir: &Path) -> Vec<String> {
    vec![
        format!("--embeddings=synthetic={}", p(&dir.join("vectors.txt"))),
        format!("--dict={}", p(&dir.join("dict.txt"))),
        format!("--docfreq={}", p(&dir.join("df.tsv"))),
        format!("--wordlist={}", p(&dir.join("words.txt"))),
    ]
}

#[test]
fn board_gen_is_seeded() {
    let wl = fixture("wordlist.txt");
    let args = ["board", "gen", "--n", "3", "--per-team", "4", "--seed", "9", "--wordlist", p(&wl)];
    let (code, a, err) = codenames(&args);
    assert_eq!(code, 0, "{err}");
    let (_, b, _) = codenames(&args);
    assert_eq!(a, b);
    let boards = parse_boards(&a).unwrap();
    assert_eq!(boards.len(), 3);
    assert!(boards.iter().all(|b| b.blue().len() == 4 && b.red().len() == 4));
    assert_eq!(boards[0].seed(), Some(9));
    let (_, other, _) = codenames(&["board", "gen", "--n", "3", "--per-team", "4", "--seed", "10", "--wordlist", p(&wl)]);
    assert_ne!(a, other);
}

#[test]
fn clue_matches_the_reference_scorer() {
    let dir = tempfile::tempdir().unwrap();
    resources(dir.path());
    let wl = dir.path().join("words.txt");
    let (code, boards, _) = codenames(&["board", "gen", "--n", "3", "--per-team", "5", "--seed", "3", "--wordlist", p(&wl)]);
    assert_eq!(code, 0);
    let board_file = dir.path().join("boards.txt");
    std::fs::write(&board_file, &boards).unwrap();

    let store = load_embeddings_file(&dir.path().join("vectors.txt"), "synthetic").unwrap();
    let dict = load_embeddings_file(&dir.path().join("dict.txt"), "dict").unwrap();
    let df = DocFreqTable::load(&dir.path().join("df.tsv")).unwrap();
    let params = ScoringParams::default();
    for (scoring, detect) in [("ours", "off"), ("kim", "on")] {
        let mut args = resource_args(dir.path());
        args.extend(["clue", "--board", p(&board_file), "--rep", "synthetic", "--scoring", scoring, "--detect", detect, "--json"].map(String::from));
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, out, err) = codenames(&argv);
        assert_eq!(code, 0, "{err}");
        let results: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
        assert_eq!(results.len(), 3);
        for (board, got) in parse_boards(&boards).unwrap().iter().zip(&results) {
            let sf: ScoringFn = scoring.parse().unwrap();
            let want = oracle_embedding(&store, board, &params, sf, (detect == "on").then_some((&df, &dict))).unwrap();
            assert_eq!(got["clue"], want.clue);
            assert_eq!(got["intended"]["words"], serde_json::json!(want.pair));
            assert!((got["score"].as_f64().unwrap() - want.score).abs() < 1e-12);
        }
    }
}

#[test]
fn clue_text_output_shows_the_breakdown() {
    let board = fixture("musical_board.txt");
    let graph = fixture("musical_graph.jsonl");
    let (code, out, err) = codenames(&[
        "clue",
        "--graph-fixture",
        &format!("babelnet={}", p(&graph)),
        "--board",
        p(&board),
        "--rep",
        "babelnet",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("clue: musical\nintended: opera, scale\n"), "{out}");
    assert!(out.contains("breakdown: base="));
}

#[test]
fn simulate_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    resources(dir.path());
    let record = dir.path().join("run");
    let mut args = resource_args(dir.path());
    args.extend(
        ["simulate", "--rep", "synthetic", "--detect", "on", "--boards", "4", "--seed", "1", "--json", "--record", p(&record)]
            .map(String::from),
    );
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, out, err) = codenames(&argv);
    assert_eq!(code, 0, "{err}");
    let simulated: MetricsReport = serde_json::from_str(&out).unwrap();
    assert_eq!(simulated.configs[0].n, 4);

    let (code, out, err) = codenames(&["eval", "report", "--session", p(&record), "--bot", "--json"]);
    assert_eq!(code, 0, "{err}");
    let reported: MetricsReport = serde_json::from_str(&out).unwrap();
    assert_eq!(reported, simulated);

    let (code, table, _) = codenames(&["eval", "report", "--session", p(&record)]);
    assert_eq!(code, 0);
    assert!(table.contains("synthetic"), "{table}");
}

#[test]
fn eval_report_on_golden_fixture() {
    let out_file = tempfile::NamedTempFile::new().unwrap();
    let (code, stdout, err) = codenames(&[
        "eval",
        "report",
        "--trials",
        p(&fixture("golden_trials.jsonl")),
        "--responses",
        p(&fixture("golden_responses.jsonl")),
        "--json",
        "--out",
        p(out_file.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.is_empty());
    let report: MetricsReport = serde_json::from_str(&std::fs::read_to_string(out_file.path()).unwrap()).unwrap();
    assert_eq!(report.configs.len(), 4);
    assert_eq!(report.comparisons.len(), 4);
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, err) = codenames(&["clue"]);
    assert_eq!(code, 2);
    assert!(err.contains("--board"), "{err}");
    let (code, _, _) = codenames(&["clue", "--board", "x", "--rep", "a", "--detect", "maybe"]);
    assert_eq!(code, 2);
    let (code, out, _) = codenames(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Usage:"), "{out}");
}

#[test]
fn runtime_errors_exit_one() {
    let (code, _, err) = codenames(&["clue", "--board", "/nonexistent/board.txt", "--rep", "synthetic"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
    let (code, _, err) = codenames(&["clue", "--board", p(&fixture("musical_board.txt")), "--rep", "nope"]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"), "{err}");
}

#[test]
fn babelnet_fetch_without_a_key_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(["babelnet", "fetch", "--words", p(&fixture("musical_board.txt")), "--cache", p(dir.path())])
        .env_remove("BABELNET_KEY")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("BABELNET_KEY"), "{err}");
}

#[test]
fn babelnet_fetch_from_fixture_fills_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let board = fixture("musical_board.txt");
    let graph = fixture("musical_graph.jsonl");
    let args = ["babelnet", "fetch", "--words", p(&board), "--cache", p(dir.path()), "--fixture", p(&graph)];
    let (code, out, err) = codenames(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 8);
    let (_, again, _) = codenames(&args);
    assert!(again.lines().all(|l| l.ends_with(": cached")), "{again}");

    let (code, clue, err) = codenames(&[
        "clue",
        "--graph-cache",
        &format!("babelnet={}", p(dir.path())),
        "--board",
        p(&board),
        "--rep",
        "babelnet",
        "--json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&clue).unwrap();
    assert_eq!(v["clue"], "musical");
}

#[test]
fn binary_prints_version() {
    let out = Command::new(env!("CARGO_BIN_EXE_codenames")).arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("codenames "));
}
