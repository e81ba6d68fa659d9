mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use codenames_core::embeddings::{HnswParams, IndexMode, NeighborIndex};
use codenames_core::engine::Engine;
use codenames_core::eval::{aggregate, join_responses, EvaluationKind, MetricsReport, Trial, TrialResponse};
use codenames_core::service::{router, AppState, SessionStore};
use codenames_core::ScoringParams;
use common::{wordlist, world};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn engine() -> Engine {
    let words = wordlist();
    let w = world(&words, 200, 16, 12, 11);
    let mut engine = Engine::new(ScoringParams::default());
    let idx = NeighborIndex::build(&w.store, IndexMode::Exact, HnswParams::default());
    engine.add_embedding("synthetic", w.store, idx, None);
    engine.set_detect(w.df, w.dict);
    engine.wordlist = words;
    engine
}

struct Harness {
    app: Router,
    engine: Arc<Engine>,
    dir: tempfile::TempDir,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(engine());
    let store = Arc::new(SessionStore::open(dir.path()).unwrap());
    let app = router(
        AppState {
            engine: engine.clone(),
            store,
        },
        None,
    );
    Harness { app, engine, dir }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

fn session_body(boards: usize) -> Value {
    json!({
        "boardCount": boards,
        "configSet": [
            {"representation": "synthetic", "scoringFn": "ours", "detect": false},
            {"representation": "synthetic", "scoringFn": "kim", "detect": true},
        ],
        "seed": 5,
    })
}

async fn create(h: &Harness, boards: usize) -> String {
    let (status, body) = call(&h.app, "POST", "/api/sessions", Some(session_body(boards))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["trialCount"], boards * 2);
    body["sessionId"].as_str().unwrap().to_string()
}

fn stored_trials(h: &Harness, id: &str) -> Vec<Trial> {
    codenames_core::eval::load_jsonl(&h.dir.path().join(id).join("trials.jsonl")).unwrap()
}

fn answer(words: &[Value], trial_id: &str, offset: usize) -> Value {
    json!({
        "trialId": trial_id,
        "rank1": words[offset % words.len()],
        "rank2": words[(offset + 1) % words.len()],
        "rank3": words[(offset + 2) % words.len()],
        "responderId": "tester",
    })
}

#[tokio::test]
async fn health_lists_representations() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["representations"], json!(["synthetic"]));
    assert_eq!(body["detectAvailable"], true);
    assert_eq!(body["schemaVersion"], 1);
}

#[tokio::test]
async fn next_hides_colors_and_intended_words() {
    let h = harness();
    let id = create(&h, 2).await;
    let (status, body) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    let mut keys: Vec<&str> = body.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["clue", "index", "schemaVersion", "total", "trialId", "words"]);
    assert_eq!(body["words"].as_array().unwrap().len(), 20);
    let text = body.to_string();
    for forbidden in ["blue", "red", "intended", "scoring", "representation", "detect"] {
        assert!(!text.contains(forbidden), "{forbidden} leaked: {text}");
    }
    // Display order is shuffled, not sorted or blue-first.
    let trial = &stored_trials(&h, &id)[0];
    let words: Vec<String> = body["words"].as_array().unwrap().iter().map(|w| w.as_str().unwrap().to_string()).collect();
    let sorted: Vec<String> = trial.board.words().iter().map(|w| w.to_string()).collect();
    assert_ne!(words, sorted);
}

#[tokio::test]
async fn next_is_idempotent_until_answered() {
    let h = harness();
    let id = create(&h, 1).await;
    let uri = format!("/api/sessions/{id}/next");
    let (_, a) = call(&h.app, "GET", &uri, None).await;
    let (_, b) = call(&h.app, "GET", &uri, None).await;
    assert_eq!(a, b);
    assert_eq!(a["index"], 0);
}

#[tokio::test]
async fn responses_are_validated() {
    let h = harness();
    let id = create(&h, 1).await;
    let (_, next) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    let words = next["words"].as_array().unwrap().clone();
    let tid = next["trialId"].as_str().unwrap();
    let uri = format!("/api/sessions/{id}/responses");

    let duplicate = json!({"trialId": tid, "rank1": words[0], "rank2": words[0]});
    let off_board = json!({"trialId": tid, "rank1": words[0], "rank2": "zzzzqx"});
    let gap = json!({"trialId": tid, "rank1": words[0], "rank2": words[1], "rank4": words[2]});
    let missing = json!({"trialId": tid, "rank1": words[0]});
    for bad in [duplicate, off_board, gap, missing] {
        let (status, body) = call(&h.app, "POST", &uri, Some(bad.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad} -> {body}");
        assert_eq!(body["code"], "ValidationError");
    }
    // Nothing was recorded.
    let (_, again) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    assert_eq!(again["index"], 0);
}

#[tokio::test]
async fn stale_and_duplicate_submissions_conflict() {
    let h = harness();
    let id = create(&h, 2).await;
    let uri = format!("/api/sessions/{id}/responses");
    let (_, next) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    let words = next["words"].as_array().unwrap().clone();
    let first = answer(&words, next["trialId"].as_str().unwrap(), 0);
    let (status, ack) = call(&h.app, "POST", &uri, Some(first.clone())).await;
    assert_eq!(status, StatusCode::OK, "{ack}");
    assert_eq!(ack["answered"], 1);
    assert_eq!(ack["remaining"], 3);

    let (status, body) = call(&h.app, "POST", &uri, Some(first)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "StaleTrial");

    let future = answer(&words, "t00003", 0);
    let (status, body) = call(&h.app, "POST", &uri, Some(future)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "StaleTrial");
}

#[tokio::test]
async fn unknown_session_and_bad_config() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/api/sessions/nope/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownSession");

    let bad_rep = json!({"boardCount": 1, "configSet": [{"representation": "glove", "scoringFn": "ours", "detect": false}]});
    let (status, body) = call(&h.app, "POST", "/api/sessions", Some(bad_rep)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "InvalidConfig");

    let empty = json!({"boardCount": 0, "configSet": [{"representation": "synthetic", "scoringFn": "ours", "detect": false}]});
    let (status, _) = call(&h.app, "POST", "/api/sessions", Some(empty)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = call(&h.app, "POST", "/api/sessions", Some(json!({"boardCount": "x"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "ValidationError");
}

#[tokio::test]
async fn detect_without_resources_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = engine();
    e.docfreq = None;
    let app = router(
        AppState {
            engine: Arc::new(e),
            store: Arc::new(SessionStore::open(dir.path()).unwrap()),
        },
        None,
    );
    let (status, body) = call(&app, "POST", "/api/sessions", Some(session_body(1))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "InvalidConfig");
}

#[tokio::test]
async fn full_session_results_match_offline_aggregate() {
    let h = harness();
    let id = create(&h, 3).await;
    let uri = format!("/api/sessions/{id}/responses");
    let (_, empty) = call(&h.app, "GET", &format!("/api/sessions/{id}/results"), None).await;
    assert_eq!(empty["configs"], json!([]));

    for k in 0..6 {
        let (status, next) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(next["index"], k);
        let words = next["words"].as_array().unwrap().clone();
        let (status, _) = call(&h.app, "POST", &uri, Some(answer(&words, next["trialId"].as_str().unwrap(), k * 3))).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (status, body) = call(&h.app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "SessionComplete");

    let (status, online) = call(&h.app, "GET", &format!("/api/sessions/{id}/results"), None).await;
    assert_eq!(status, StatusCode::OK);

    let trials = stored_trials(&h, &id);
    let responses: Vec<TrialResponse> =
        codenames_core::eval::load_jsonl(&h.dir.path().join(&id).join("responses.jsonl")).unwrap();
    assert_eq!(responses.len(), 6);
    assert!(responses.iter().all(|r| r.timestamp > 0));
    let offline: MetricsReport = aggregate(&join_responses(&trials, responses).unwrap(), EvaluationKind::Human).unwrap();
    assert_eq!(online.to_string(), serde_json::to_value(&offline).unwrap().to_string());
    assert_eq!(online["configs"].as_array().unwrap().len(), 2);
    assert_eq!(online["configs"][0]["n"], 3);

    // The session survives a restart.
    let store = Arc::new(SessionStore::open(h.dir.path()).unwrap());
    let app = router(AppState { engine: h.engine.clone(), store }, None);
    let (status, reloaded) = call(&app, "GET", &format!("/api/sessions/{id}/results"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(reloaded, online);
}

#[tokio::test]
async fn sessions_with_the_same_seed_hold_the_same_trials() {
    let h = harness();
    let a = create(&h, 2).await;
    let b = create(&h, 2).await;
    assert_ne!(a, b);
    assert_eq!(stored_trials(&h, &a), stored_trials(&h, &b));
}

#[tokio::test]
async fn static_files_are_served_beside_the_api() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>ok</html>").unwrap();
    let h = harness();
    let store = Arc::new(SessionStore::open(h.dir.path()).unwrap());
    let app = router(AppState { engine: h.engine.clone(), store }, Some(dir.path()));
    let (status, body) = call(&app, "GET", "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, Value::String("<html>ok</html>".into()));
    let (status, _) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
}
