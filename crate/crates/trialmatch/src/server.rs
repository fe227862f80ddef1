//! JSON API over pipeline artifacts, used by the screening interface.
//!
//! Reads are served from artifacts loaded at startup. Screening decisions
//! are appended to a JSONL log by one writer at a time; the log is replayed
//! on startup so duplicate submissions are rejected across restarts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use trialmatch_core::corpus::{PatientNote, TrialRecord};
use trialmatch_core::matching::TrialMatchResult;
use trialmatch_core::ranking::{rank_scored, Feature, TrialScore};
use trialmatch_core::screening::{screening_summary, Decision, DecisionKey, ScreeningAssignment, ScreeningDecision};

use crate::config::Config;
use crate::formats::{read_json, read_jsonl_lenient, read_matches, read_scores, ScoreRecord};
use crate::pipeline::{load_notes, load_trials, MATCHES, SCORES};
use crate::{Error, Result};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

/// Append-only decision store.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    keys: HashSet<DecisionKey>,
    decisions: Vec<ScreeningDecision>,
}

impl DecisionLog {
    /// Replays an existing log. A torn last line is skipped.
    pub fn open(path: &Path) -> Result<Self> {
        let decisions = if path.exists() {
            read_jsonl_lenient::<ScreeningDecision>(path)?.0
        } else {
            Vec::new()
        };
        Ok(DecisionLog {
            path: path.to_path_buf(),
            keys: decisions.iter().map(ScreeningDecision::key).collect(),
            decisions,
        })
    }

    pub fn decisions(&self) -> &[ScreeningDecision] {
        &self.decisions
    }

    /// Returns false, writing nothing, when the key is already recorded.
    fn append(&mut self, d: ScreeningDecision) -> Result<bool> {
        if self.keys.contains(&d.key()) {
            return Ok(false);
        }
        if let Some(dir) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let torn = std::fs::read(&self.path)
            .map(|b| !b.is_empty() && !b.ends_with(b"\n"))
            .unwrap_or(false);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut line = Vec::new();
        if torn {
            line.push(b'\n');
        }
        serde_json::to_writer(&mut line, &d).expect("decisions serialize");
        line.push(b'\n');
        f.write_all(&line).map_err(|e| Error::io(&self.path, e))?;
        f.sync_data().map_err(|e| Error::io(&self.path, e))?;
        self.keys.insert(d.key());
        self.decisions.push(d);
        Ok(true)
    }
}

pub struct ServerState {
    pub cohort: String,
    pub notes: BTreeMap<String, PatientNote>,
    pub trials: BTreeMap<String, TrialRecord>,
    pub matches: HashMap<(String, String), TrialMatchResult>,
    pub scores: BTreeMap<String, Vec<TrialScore>>,
    pub assignment: Option<ScreeningAssignment>,
    pub token: Option<String>,
    pub log: Mutex<DecisionLog>,
}

impl ServerState {
    /// Loads notes and trials (required) and matches, scores and the
    /// screening assignment (each optional) from the configured paths.
    pub fn load(cfg: &Config) -> Result<Self> {
        let notes = load_notes(cfg)?;
        let trials = load_trials(cfg)?;
        let matches_path = cfg.artifact(MATCHES);
        let matches = if matches_path.exists() {
            read_matches(&matches_path)?
        } else {
            Vec::new()
        };
        let scores_path = cfg.artifact(SCORES);
        let scores = if scores_path.exists() {
            read_scores(&scores_path)?.iter().map(TrialScore::from).collect()
        } else {
            Vec::new()
        };
        let assignment_path = cfg.assignment_path();
        let assignment = if assignment_path.exists() {
            Some(read_json(&assignment_path)?)
        } else {
            None
        };
        Ok(Self::new(
            &cfg.cohort,
            notes,
            trials,
            matches,
            scores,
            assignment,
            cfg.server.token.clone(),
            DecisionLog::open(&cfg.decisions_log())?,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cohort: &str,
        notes: Vec<PatientNote>,
        trials: Vec<TrialRecord>,
        matches: Vec<TrialMatchResult>,
        scores: Vec<TrialScore>,
        assignment: Option<ScreeningAssignment>,
        token: Option<String>,
        log: DecisionLog,
    ) -> Self {
        let mut by_patient: BTreeMap<String, Vec<TrialScore>> = BTreeMap::new();
        for s in scores {
            by_patient.entry(s.patient_id.clone()).or_default().push(s);
        }
        ServerState {
            cohort: cohort.to_string(),
            notes: notes.into_iter().map(|n| (n.patient_id.clone(), n)).collect(),
            trials: trials.into_iter().map(|t| (t.nct_id.clone(), t)).collect(),
            matches: matches
                .into_iter()
                .map(|m| ((m.patient_id.clone(), m.nct_id.clone()), m))
                .collect(),
            scores: by_patient,
            assignment,
            token,
            log: Mutex::new(log),
        }
    }
}

type Shared = Arc<ServerState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/cohorts", get(cohorts))
        .route("/patients/:patient_id", get(patient))
        .route("/patients/:patient_id/ranking", get(ranking))
        .route("/trials/:nct_id", get(trial))
        .route("/match/:patient_id/:nct_id", get(pair))
        .route("/assignments/:annotator_id", get(assignment))
        .route("/decisions", post(submit_decision))
        .route("/decisions/export", get(export_decisions))
        .route("/decisions/summary", get(decision_summary))
        .route_layer(middleware::from_fn_with_state(state.clone(), authorize))
        .with_state(state)
}

async fn authorize(State(state): State<Shared>, headers: HeaderMap, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let presented = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or invalid bearer token").into_response();
        }
    }
    next.run(request).await
}

async fn cohorts(State(state): State<Shared>) -> Json<serde_json::Value> {
    Json(json!([{
        "name": state.cohort,
        "patients": state.notes.len(),
        "trials": state.trials.len(),
        "matched_pairs": state.matches.len(),
        "scored_patients": state.scores.len(),
        "has_assignment": state.assignment.is_some(),
    }]))
}

fn find_note<'a>(state: &'a ServerState, id: &str) -> ApiResult<&'a PatientNote> {
    state
        .notes
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown patient {id}")))
}

fn find_trial<'a>(state: &'a ServerState, id: &str) -> ApiResult<&'a TrialRecord> {
    state
        .trials
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown trial {id}")))
}

async fn patient(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let note = find_note(&state, &id)?;
    Ok(Json(json!({
        "patient_id": note.patient_id,
        "text": note.raw_text,
        "sentences": note.sentences,
    })))
}

async fn trial(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<TrialRecord>> {
    Ok(Json(find_trial(&state, &id)?.clone()))
}

#[derive(Debug, Deserialize)]
struct RankingQuery {
    feature: Option<String>,
    top: Option<usize>,
}

#[derive(Debug, Serialize)]
struct RankedTrial {
    rank: usize,
    nct_id: String,
    title: String,
    score: f64,
}

async fn ranking(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RankingQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    find_note(&state, &id)?;
    let feature = match q.feature.as_deref() {
        None => Feature::Combination,
        Some(f) => Feature::from_str(f).map_err(|_| ApiError::bad_request(format!("unknown feature {f}")))?,
    };
    let scored = state.scores.get(&id).map(Vec::as_slice).unwrap_or(&[]);
    let trials: Vec<RankedTrial> = rank_scored(scored, feature)
        .into_iter()
        .take(q.top.unwrap_or(usize::MAX))
        .enumerate()
        .map(|(i, (nct_id, score))| RankedTrial {
            rank: i + 1,
            title: state.trials.get(&nct_id).map(|t| t.title.clone()).unwrap_or_default(),
            nct_id,
            score,
        })
        .collect();
    Ok(Json(json!({
        "patient_id": id,
        "feature": feature.as_str(),
        "trials": trials,
    })))
}

async fn pair(
    State(state): State<Shared>,
    UrlPath((patient_id, nct_id)): UrlPath<(String, String)>,
) -> ApiResult<Json<serde_json::Value>> {
    find_note(&state, &patient_id)?;
    let trial = find_trial(&state, &nct_id)?;
    let key = (patient_id.clone(), nct_id.clone());
    let result = state
        .matches
        .get(&key)
        .ok_or_else(|| ApiError::not_found(format!("no match result for {patient_id} / {nct_id}")))?;
    let score = state
        .scores
        .get(&patient_id)
        .and_then(|v| v.iter().find(|s| s.nct_id == nct_id))
        .map(ScoreRecord::from);
    Ok(Json(json!({
        "match": result,
        "score": score,
        "trial": trial,
    })))
}

async fn assignment(
    State(state): State<Shared>,
    UrlPath(annotator): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let a = state
        .assignment
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no screening assignment loaded"))?;
    let tasks = a
        .tasks_for(&annotator)
        .ok_or_else(|| ApiError::not_found(format!("unknown annotator {annotator}")))?;
    Ok(Json(json!({ "annotator_id": annotator, "tasks": tasks })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionInput {
    patient_id: String,
    nct_id: String,
    decision: Decision,
    assisted: bool,
    elapsed_ms: u64,
    annotator_id: String,
    #[serde(default)]
    timestamp: Option<String>,
}

async fn submit_decision(State(state): State<Shared>, body: Bytes) -> ApiResult<(StatusCode, Json<ScreeningDecision>)> {
    let input: DecisionInput =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid decision: {e}")))?;
    let timestamp = match input.timestamp {
        Some(ts) => {
            chrono::DateTime::parse_from_rfc3339(&ts)
                .map_err(|e| ApiError::bad_request(format!("timestamp is not RFC 3339: {e}")))?;
            ts
        }
        None => chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
    };
    let decision = ScreeningDecision {
        patient_id: input.patient_id,
        nct_id: input.nct_id,
        decision: input.decision,
        assisted: input.assisted,
        elapsed_ms: input.elapsed_ms,
        annotator_id: input.annotator_id,
        timestamp,
    };
    decision.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    find_note(&state, &decision.patient_id)?;
    find_trial(&state, &decision.nct_id)?;
    if let Some(a) = &state.assignment {
        if !a.annotators.contains(&decision.annotator_id) {
            return Err(ApiError::bad_request(format!("annotator {} is not assigned", decision.annotator_id)));
        }
        match a.is_assisted(&decision.patient_id, &decision.nct_id, &decision.annotator_id) {
            None => return Err(ApiError::bad_request("pair is not part of the screening assignment")),
            Some(expected) if expected != decision.assisted => {
                return Err(ApiError::bad_request(format!(
                    "pair is assigned {} for this annotator",
                    if expected { "assisted" } else { "unassisted" }
                )))
            }
            Some(_) => {}
        }
    }
    let mut log = state.log.lock().unwrap_or_else(|e| e.into_inner());
    let recorded = log
        .append(decision.clone())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    if !recorded {
        return Err(ApiError::new(StatusCode::CONFLICT, "decision already recorded"));
    }
    Ok((StatusCode::CREATED, Json(decision)))
}

/// CSV columns of the decision export, in order.
pub const EXPORT_COLUMNS: [&str; 7] = [
    "patient_id",
    "nct_id",
    "decision",
    "assisted",
    "elapsed_ms",
    "annotator_id",
    "timestamp",
];

pub fn decisions_csv(decisions: &[ScreeningDecision]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Config(format!("csv export: {e}"));
    w.write_record(EXPORT_COLUMNS).map_err(to_err)?;
    for d in decisions {
        w.write_record([
            d.patient_id.as_str(),
            d.nct_id.as_str(),
            d.decision.as_str(),
            if d.assisted { "true" } else { "false" },
            &d.elapsed_ms.to_string(),
            d.annotator_id.as_str(),
            d.timestamp.as_str(),
        ])
        .map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv export: {e}")))
}

async fn export_decisions(State(state): State<Shared>) -> ApiResult<Response> {
    let body = {
        let log = state.log.lock().unwrap_or_else(|e| e.into_inner());
        decisions_csv(log.decisions()).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    };
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response())
}

async fn decision_summary(State(state): State<Shared>) -> Json<serde_json::Value> {
    let log = state.log.lock().unwrap_or_else(|e| e.into_inner());
    Json(serde_json::to_value(screening_summary(log.decisions(), None, None)).expect("summary serializes"))
}

/// Binds `cfg.server.bind` and serves until the process is stopped.
pub async fn serve(cfg: &Config) -> Result<()> {
    let state = Arc::new(ServerState::load(cfg)?);
    let listener = tokio::net::TcpListener::bind(&cfg.server.bind)
        .await
        .map_err(|e| Error::Config(format!("cannot bind {}: {e}", cfg.server.bind)))?;
    eprintln!("listening on http://{}", cfg.server.bind);
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::Config(format!("server: {e}")))
}
