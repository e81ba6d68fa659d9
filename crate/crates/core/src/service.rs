//! HTTP evaluation service: sessions of trials served to one responder each.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{board_seed, Engine, EngineError};
use crate::eval::{
    aggregate, append_jsonl, join_responses, load_jsonl, EvalError, EvaluationKind, MetricsReport, PublicTrial, Trial,
    TrialConfig, TrialResponse, SCHEMA_VERSION,
};

/// Upper bound on trials per session.
pub const MAX_TRIALS: usize = 20_000;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} has no unanswered trials")]
    SessionComplete(String),
    #[error("{0}")]
    StaleTrial(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    MissingResource(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::SessionComplete(_) => "SessionComplete",
            ServiceError::StaleTrial(_) => "StaleTrial",
            ServiceError::Validation(_) => "ValidationError",
            ServiceError::InvalidConfig(_) => "InvalidConfig",
            ServiceError::MissingResource(_) => "MissingResource",
            ServiceError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionComplete(_) | ServiceError::StaleTrial(_) => StatusCode::CONFLICT,
            ServiceError::Validation(_) | ServiceError::MissingResource(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::InvalidConfig(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<EngineError> for ServiceError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownRepresentation(_) | EngineError::Board(_) => ServiceError::InvalidConfig(e.to_string()),
            EngineError::Io(_) => ServiceError::Internal(e.to_string()),
            other => ServiceError::MissingResource(other.to_string()),
        }
    }
}

impl From<EvalError> for ServiceError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidResponse(m) => ServiceError::Validation(m),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    pub schema_version: u32,
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            code: self.code().into(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

fn default_per_team() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateSession {
    pub board_count: usize,
    pub config_set: Vec<TrialConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_per_team")]
    pub per_team: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionMeta {
    pub schema_version: u32,
    pub id: String,
    pub created_at: u64,
    pub seed: u64,
    pub per_team: usize,
    pub board_count: usize,
    pub config_set: Vec<TrialConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSummary {
    pub schema_version: u32,
    pub session_id: String,
    pub trial_count: usize,
    pub answered: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NextTrial {
    pub index: usize,
    pub total: usize,
    #[serde(flatten)]
    pub trial: PublicTrial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Ack {
    pub schema_version: u32,
    pub accepted: bool,
    pub answered: usize,
    pub remaining: usize,
}

#[derive(Debug)]
pub struct Session {
    pub meta: SessionMeta,
    pub trials: Vec<Trial>,
    pub responses: Vec<TrialResponse>,
    dir: PathBuf,
}

impl Session {
    pub fn cursor(&self) -> usize {
        self.responses.len()
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            schema_version: SCHEMA_VERSION,
            session_id: self.meta.id.clone(),
            trial_count: self.trials.len(),
            answered: self.cursor(),
        }
    }

    pub fn next(&self) -> Result<NextTrial, ServiceError> {
        let trial = self
            .trials
            .get(self.cursor())
            .ok_or_else(|| ServiceError::SessionComplete(self.meta.id.clone()))?;
        Ok(NextTrial {
            index: self.cursor(),
            total: self.trials.len(),
            trial: trial.public_view(),
        })
    }

    pub fn submit(&mut self, mut response: TrialResponse) -> Result<Ack, ServiceError> {
        let Some(trial) = self.trials.get(self.cursor()) else {
            return Err(ServiceError::SessionComplete(self.meta.id.clone()));
        };
        if response.trial_id != trial.id {
            let answered = self.responses.iter().any(|r| r.trial_id == response.trial_id);
            return Err(ServiceError::StaleTrial(if answered {
                format!("trial {} was already answered", response.trial_id)
            } else {
                format!("trial {} is not the current trial ({})", response.trial_id, trial.id)
            }));
        }
        trial.validate_response(&response)?;
        if response.timestamp == 0 {
            response.timestamp = now_millis();
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join("responses.jsonl"))?;
        append_jsonl(&mut f, &response)?;
        f.flush()?;
        self.responses.push(response);
        Ok(Ack {
            schema_version: SCHEMA_VERSION,
            accepted: true,
            answered: self.cursor(),
            remaining: self.trials.len() - self.cursor(),
        })
    }

    pub fn results(&self) -> Result<MetricsReport, ServiceError> {
        let joined = join_responses(&self.trials, self.responses.clone())?;
        Ok(aggregate(&joined, EvaluationKind::Human)?)
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(1)
}

/// All sessions, each behind its own lock, persisted under one directory.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// Opens `root`, reloading any sessions already stored there.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&root)? {
            let dir = entry?.path();
            if !dir.join("session.json").is_file() {
                continue;
            }
            let session = load_session(&dir)?;
            sessions.insert(session.meta.id.clone(), Arc::new(Mutex::new(session)));
        }
        Ok(Self {
            root,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create(&self, engine: &Engine, request: &CreateSession) -> Result<SessionSummary, ServiceError> {
        let trials = build_trials(engine, request)?;
        let mut sessions = self.sessions.write().expect("session map poisoned");
        let mut n = sessions.len();
        let id = loop {
            let candidate = format!("s{:x}-{n}", request.seed);
            if !sessions.contains_key(&candidate) && !self.root.join(&candidate).exists() {
                break candidate;
            }
            n += 1;
        };
        let meta = SessionMeta {
            schema_version: SCHEMA_VERSION,
            id: id.clone(),
            created_at: now_millis(),
            seed: request.seed,
            per_team: request.per_team,
            board_count: request.board_count,
            config_set: request.config_set.clone(),
        };
        let dir = self.root.join(&id);
        write_session(&dir, &meta, &trials)?;
        let session = Session {
            meta,
            trials,
            responses: Vec::new(),
            dir,
        };
        let summary = session.summary();
        sessions.insert(id, Arc::new(Mutex::new(session)));
        Ok(summary)
    }
}

fn write_session(dir: &Path, meta: &SessionMeta, trials: &[Trial]) -> Result<(), ServiceError> {
    let tmp = dir.with_extension("tmp");
    std::fs::create_dir_all(&tmp)?;
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(tmp.join("trials.jsonl"))?);
        for t in trials {
            append_jsonl(&mut f, t)?;
        }
        f.flush()?;
    }
    std::fs::File::create(tmp.join("responses.jsonl"))?;
    let meta_text = serde_json::to_string_pretty(meta).map_err(|e| ServiceError::Internal(e.to_string()))?;
    std::fs::write(tmp.join("session.json"), meta_text)?;
    std::fs::rename(&tmp, dir)?;
    Ok(())
}

fn load_session(dir: &Path) -> Result<Session, ServiceError> {
    let text = std::fs::read_to_string(dir.join("session.json"))?;
    let meta: SessionMeta = serde_json::from_str(&text).map_err(|e| ServiceError::Internal(e.to_string()))?;
    let trials: Vec<Trial> = load_jsonl(&dir.join("trials.jsonl"))?;
    let responses: Vec<TrialResponse> = load_jsonl(&dir.join("responses.jsonl"))?;
    if responses.len() > trials.len() {
        return Err(ServiceError::Internal(format!("{} has more responses than trials", dir.display())));
    }
    Ok(Session {
        meta,
        trials,
        responses,
        dir: dir.to_path_buf(),
    })
}

/// Runs every config on every board, then shuffles so configs interleave.
pub fn build_trials(engine: &Engine, request: &CreateSession) -> Result<Vec<Trial>, ServiceError> {
    if request.board_count == 0 {
        return Err(ServiceError::InvalidConfig("boardCount must be at least 1".into()));
    }
    if request.config_set.is_empty() {
        return Err(ServiceError::InvalidConfig("configSet is empty".into()));
    }
    if request.board_count.saturating_mul(request.config_set.len()) > MAX_TRIALS {
        return Err(ServiceError::InvalidConfig(format!("more than {MAX_TRIALS} trials requested")));
    }
    for c in &request.config_set {
        engine.check_config(c).map_err(|e| match e {
            EngineError::MissingResource(m) => ServiceError::InvalidConfig(m),
            other => other.into(),
        })?;
    }
    let boards = (0..request.board_count as u64)
        .map(|i| {
            Ok(engine
                .board(request.per_team, request.seed, i)?
                .with_seed(board_seed(request.seed, i)))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let jobs: Vec<(usize, usize)> = (0..boards.len())
        .flat_map(|b| (0..request.config_set.len()).map(move |c| (b, c)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(b, c)| engine.clue(&boards[b], &request.config_set[c]).map(|r| (b, c, r)))
        .collect::<Result<Vec<_>, EngineError>>()?;

    let mut order: Vec<usize> = (0..results.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(request.seed));
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(k, j)| {
            let (b, c, ref result) = results[j];
            let shuffle_seed = board_seed(request.seed ^ 0xd15b_1a7e, k as u64);
            Trial::from_clue(
                format!("t{k:05}"),
                &boards[b],
                result,
                request.config_set[c].clone(),
                shuffle_seed,
            )
        })
        .collect())
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: Arc<SessionStore>,
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Validation(format!("malformed body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionSummary>), ServiceError> {
    let request: CreateSession = parse_body(&body)?;
    let summary = blocking(move || state.store.create(&state.engine, &request)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn next_trial(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<NextTrial>, ServiceError> {
    let session = state.store.get(&id)?;
    let next = session.lock().expect("session poisoned").next()?;
    Ok(Json(next))
}

async fn submit_response(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Ack>, ServiceError> {
    let session = state.store.get(&id)?;
    let response: TrialResponse = parse_body(&body)?;
    let ack = blocking(move || session.lock().expect("session poisoned").submit(response)).await?;
    Ok(Json(ack))
}

async fn session_results(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<MetricsReport>, ServiceError> {
    let session = state.store.get(&id)?;
    let report = session.lock().expect("session poisoned").results()?;
    Ok(Json(report))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
    pub representations: Vec<String>,
    pub detect_available: bool,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        schema_version: SCHEMA_VERSION,
        status: "ok".into(),
        representations: state.engine.representations.keys().cloned().collect(),
        detect_available: state.engine.detect_resources().is_some(),
    })
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/next", get(next_trial))
        .route("/api/sessions/{id}/responses", post(submit_response))
        .route("/api/sessions/{id}/results", get(session_results))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped.
pub async fn serve(state: AppState, port: u16, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir.as_deref())).await
}
