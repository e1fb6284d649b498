use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use privcode_core::eval::{self, EvalConfig, EvalError};
use privcode_core::generation::{self, GenerationError, GenerationRequest};
use privcode_core::prompt::{self, HumanChoice, PromptFormat, PromptSpec};
use privcode_core::retriever;
use privcode_core::first_sentence;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{AppState, Candidate, Job, JobStatus, Session};
use crate::DEFAULT_INTERACTIVE_SAMPLES;

type Shared = State<Arc<AppState>>;
type Body<T> = Result<Json<T>, JsonRejection>;

pub async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

fn top_k(state: &AppState, query: &str, k: usize) -> Result<Vec<(String, f64)>, ApiError> {
    if query.trim().is_empty() {
        return Err(ApiError::bad_request("query is empty"));
    }
    if k == 0 {
        return Err(ApiError::bad_request("k must be at least 1"));
    }
    let (params, index) = state
        .retriever
        .as_ref()
        .ok_or_else(|| ApiError::unavailable("retrieval index is not loaded"))?;
    retriever::retrieve(index, params, query, k).map_err(|e| match e {
        retriever::RetrieverError::EmptyIndex => ApiError::unavailable("retrieval index is empty"),
        other => ApiError::internal(other.to_string()),
    })
}

fn candidate(state: &AppState, api_id: &str) -> Candidate {
    match state.catalog.get(api_id) {
        Some(r) => Candidate {
            api_id: r.api_id.clone(),
            name: r.name.clone(),
            first_sentence: first_sentence(&r.description).to_string(),
        },
        None => Candidate {
            api_id: api_id.to_string(),
            name: String::new(),
            first_sentence: String::new(),
        },
    }
}

#[derive(Deserialize)]
pub struct RetrieveRequest {
    query: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    5
}

#[derive(Serialize)]
pub struct RetrieveHit {
    #[serde(flatten)]
    candidate: Candidate,
    score: f64,
}

pub async fn retrieve(State(state): Shared, body: Body<RetrieveRequest>) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let hits: Vec<RetrieveHit> = top_k(&state, &req.query, req.k)?
        .into_iter()
        .map(|(id, score)| RetrieveHit {
            candidate: candidate(&state, &id),
            score,
        })
        .collect();
    Ok(Json(json!({ "results": hits })))
}

#[derive(Deserialize)]
pub struct SessionRequest {
    query: String,
}

fn purge_expired(state: &AppState) {
    let ttl = state.session_ttl;
    state.sessions.lock().unwrap().retain(|_, s| s.born.elapsed() < ttl);
}

pub async fn create_session(
    State(state): Shared,
    body: Body<SessionRequest>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let Json(req) = body?;
    let top5: Vec<Candidate> = top_k(&state, &req.query, prompt::PRESENTED)?
        .into_iter()
        .map(|(id, _)| candidate(&state, &id))
        .collect();
    purge_expired(&state);
    let session = Session::new(uuid::Uuid::new_v4().to_string(), req.query, top5);
    state
        .sessions
        .lock()
        .unwrap()
        .insert(session.session_id.clone(), session.clone());
    Ok((StatusCode::CREATED, Json(session)))
}

pub async fn get_session(State(state): Shared, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    purge_expired(&state);
    state
        .sessions
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

pub async fn submit_choice(
    State(state): Shared,
    Path(id): Path<String>,
    body: Body<HumanChoice>,
) -> Result<Json<Value>, ApiError> {
    let Json(choice) = body?;
    purge_expired(&state);
    let mut sessions = state.sessions.lock().unwrap();
    let session = sessions
        .get_mut(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
    if session.choice.is_some() {
        return Err(ApiError::conflict("a choice was already recorded for this session"));
    }
    let presented: Vec<String> = session.top5.iter().map(|c| c.api_id.clone()).collect();
    let resolved = prompt::resolve_selection(&presented, &choice).map_err(|e| ApiError::bad_request(e.to_string()))?;
    session.choice = Some(choice);
    session.resolved_api_ids = Some(resolved.clone());
    Ok(Json(json!({ "session_id": id, "resolved_api_ids": resolved })))
}

#[derive(Deserialize)]
pub struct GenerateRequest {
    session_id: Option<String>,
    api_ids: Option<Vec<String>>,
    code_context: String,
    #[serde(default = "default_format")]
    format: String,
    n: Option<usize>,
    temperature: Option<f64>,
    top_p: Option<f64>,
    max_new_tokens: Option<usize>,
    stop_markers: Option<Vec<String>>,
    #[serde(default)]
    seed: u64,
}

fn default_format() -> String {
    "b".into()
}

pub async fn generate(State(state): Shared, body: Body<GenerateRequest>) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let format: PromptFormat = req.format.parse().map_err(|e: prompt::PromptError| ApiError::bad_request(e.to_string()))?;
    let api_ids = match (&req.session_id, &req.api_ids) {
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give session_id or api_ids, not both")),
        (None, ids) => ids.clone().unwrap_or_default(),
        (Some(id), None) => {
            purge_expired(&state);
            let sessions = state.sessions.lock().unwrap();
            let s = sessions
                .get(id)
                .ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
            s.resolved_api_ids
                .clone()
                .ok_or_else(|| ApiError::conflict("session has no choice yet"))?
        }
    };
    let apis = prompt::records_for(&state.catalog, &api_ids).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let spec = PromptSpec {
        apis,
        format,
        code_context: req.code_context,
        // Noise only matters when building training prompts.
        noise_rate: 0.0,
        seed: req.seed,
    };
    let assembled = prompt::assemble_prompt(&spec, &state.catalog).map_err(|e| ApiError::bad_request(e.to_string()))?;

    let mut gen = GenerationRequest::new(assembled.text.clone());
    gen.n_samples = req.n.unwrap_or(DEFAULT_INTERACTIVE_SAMPLES);
    if let Some(t) = req.temperature {
        gen.temperature = t;
    }
    if let Some(p) = req.top_p {
        gen.top_p = p;
    }
    if let Some(m) = req.max_new_tokens {
        gen.max_new_tokens = m;
    }
    if let Some(s) = req.stop_markers {
        gen.stop_markers = s;
    }
    gen.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    let model = state
        .model
        .clone()
        .ok_or_else(|| ApiError::unavailable("no completion model configured"))?;
    let completions = tokio::task::spawn_blocking(move || generation::generate(model.as_ref(), &gen))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| match e {
            GenerationError::InvalidRequest(m) => ApiError::bad_request(m),
            other => ApiError::bad_gateway(other.to_string()),
        })?;
    Ok(Json(json!({
        "prompt": assembled.text,
        "api_ids": assembled.api_ids,
        "fallbacks": assembled.fallbacks,
        "completions": completions,
    })))
}

#[derive(Deserialize)]
pub struct EvaluateRequest {
    benchmark_ref: String,
    completions_ref: String,
    #[serde(default = "default_k_set")]
    k_set: Vec<usize>,
    timeout_ms: Option<u64>,
}

fn default_k_set() -> Vec<usize> {
    vec![1, 10]
}

fn load_error(e: EvalError) -> ApiError {
    ApiError::bad_request(e.to_string())
}

pub async fn evaluate(
    State(state): Shared,
    body: Body<EvaluateRequest>,
) -> Result<(StatusCode, Json<Job>), ApiError> {
    let Json(req) = body?;
    let mut paths = Vec::new();
    for r in [&req.benchmark_ref, &req.completions_ref] {
        let p = state
            .data_path(r)
            .ok_or_else(|| ApiError::bad_request(format!("{r:?} must be a relative path inside the data directory")))?;
        if !p.is_file() {
            return Err(ApiError::not_found(format!("artifact {r:?} not found")));
        }
        paths.push(p);
    }
    let problems = eval::load_benchmark(&paths[0]).map_err(load_error)?;
    let completions = eval::load_completions(&paths[1]).map_err(load_error)?;
    if req.k_set.is_empty() || req.k_set.contains(&0) {
        return Err(ApiError::bad_request("k_set must be non-empty and every k at least 1"));
    }
    let mut sandbox = state.sandbox.clone();
    if let Some(t) = req.timeout_ms {
        sandbox.timeout_ms = t;
    }
    let config = EvalConfig {
        k_set: req.k_set,
        sandbox,
        ..EvalConfig::default()
    };

    let job_id = uuid::Uuid::new_v4().to_string();
    // Take the slot now if it is free so the first poll already sees
    // "running".
    let permit = state.eval_slot.clone().try_acquire_owned().ok();
    let job = Job {
        job_id: job_id.clone(),
        status: if permit.is_some() { JobStatus::Running } else { JobStatus::Queued },
        result: None,
        error: None,
    };
    state.jobs.lock().unwrap().insert(job_id.clone(), job.clone());

    let st = state.clone();
    tokio::spawn(async move {
        let _permit = match permit {
            Some(p) => p,
            None => {
                let p = st.eval_slot.clone().acquire_owned().await.expect("semaphore is never closed");
                set_job(&st, &job_id, |j| j.status = JobStatus::Running);
                p
            }
        };
        let outcome = tokio::task::spawn_blocking(move || eval::evaluate(&problems, &completions, &config)).await;
        set_job(&st, &job_id, |j| match outcome {
            Ok(Ok(report)) => {
                j.status = JobStatus::Done;
                j.result = Some(report);
            }
            Ok(Err(e)) => {
                j.status = JobStatus::Failed;
                j.error = Some(e.to_string());
            }
            Err(e) => {
                j.status = JobStatus::Failed;
                j.error = Some(format!("evaluation task panicked: {e}"));
            }
        });
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

fn set_job(state: &AppState, id: &str, f: impl FnOnce(&mut Job)) {
    if let Some(j) = state.jobs.lock().unwrap().get_mut(id) {
        f(j);
    }
}

pub async fn get_job(State(state): Shared, Path(id): Path<String>) -> Result<Json<Job>, ApiError> {
    state
        .jobs
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}
