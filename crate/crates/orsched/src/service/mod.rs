//! HTTP service: a persistent scenario store plus solve and reschedule jobs
//! that run in the background and stream incumbents through polling.
//!
//! | method and path                    | body / response                         |
//! |------------------------------------|-----------------------------------------|
//! | `POST /scenarios`                  | [`ScenarioDraft`] → [`Scenario`]        |
//! | `GET /scenarios`                   | `{"scenarios": [ScenarioSummary]}`      |
//! | `GET /scenarios/{id}`              | [`Scenario`]                            |
//! | `POST /jobs`                       | [`JobRequest`] → [`JobView`]            |
//! | `GET /jobs`                        | `{"jobs": [JobSummary]}`                |
//! | `GET /jobs/{id}?since=k`           | [`JobView`] with incumbents after `k`   |
//! | `GET /jobs/{id}/incumbents/{k}`    | schedule document of incumbent `k`      |
//! | `GET /jobs/{id}/results`           | [`JobResults`]                          |
//! | `DELETE /jobs/{id}`                | cancels; [`JobView`]                    |
//!
//! Errors are `{"error": {"code", "message", "details"?}}`. When a token is
//! configured every route except `GET /health` needs `Authorization: Bearer <token>`.

mod jobs;
mod scenarios;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use orsched_core::generator::ScenarioName;
use orsched_core::{Error, Instance, Schedule, ValidationReport};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::files::FORMAT_VERSION;
use crate::store::{Collection, Store};

pub use jobs::{
    apply_quota, occupancy_series, shared_specialty, ErrorBody, Incumbent, IncumbentView, JobConfig, JobKind,
    JobOutcome, JobRecord, JobRequest, JobResults, JobSource, JobState, JobView, Objective, OccupancyPoint,
    RescheduleSpec, DEFAULT_TIME_LIMIT,
};
pub use scenarios::{preset_id, Scenario, ScenarioDraft, ScenarioSummary, MAX_HORIZON};

/// An error response with a machine-readable code.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_owned(),
            message: message.into(),
            details: None,
        }
    }

    pub fn payload(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid-payload", message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            &format!("{what}-not-found"),
            format!("no {what} {id:?}"),
        )
    }

    pub fn invalid_instance(report: ValidationReport) -> Self {
        Self {
            details: serde_json::to_value(&report).ok(),
            ..Self::new(
                StatusCode::BAD_REQUEST,
                "invalid-instance",
                format!("instance has {} violations", report.violations.len()),
            )
        }
    }

    /// Request-level core errors (bad disruption descriptors and the like).
    pub fn core(e: Error) -> Self {
        let details = match &e {
            Error::InvalidInstance(report) => return Self::invalid_instance(report.clone()),
            Error::ScheduleViolations(v) => serde_json::to_value(v).ok(),
            _ => None,
        };
        Self {
            details,
            ..Self::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
        }
    }

    fn store(e: std::io::Error) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store-error", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(d) = self.details {
            error["details"] = d;
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::payload(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::payload(r.body_text())
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store: PathBuf,
    pub token: Option<String>,
}

/// Shared state behind the router.
#[derive(Debug)]
pub struct AppState {
    store: Store,
    token: Option<String>,
    jobs: Mutex<BTreeMap<String, Arc<jobs::JobHandle>>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl AppState {
    /// Opens the store, adds the A/B/C presets if missing and reloads past
    /// jobs. Jobs that were still running are marked failed.
    pub fn open(store_dir: impl Into<PathBuf>, token: Option<String>) -> std::io::Result<Arc<Self>> {
        let store = Store::open(store_dir)?;
        for name in [ScenarioName::A, ScenarioName::B, ScenarioName::C] {
            let id = preset_id(name);
            if store.get::<Scenario>(Collection::Scenarios, &id)?.is_none() {
                store.put(Collection::Scenarios, &id, &scenarios::preset(name))?;
            }
        }
        let mut jobs = BTreeMap::new();
        for (id, mut record) in store.list::<JobRecord>(Collection::Jobs)? {
            if !record.state.is_terminal() {
                record.state = JobState::Failed;
                record.error = Some(ErrorBody {
                    code: "interrupted".to_owned(),
                    message: "the service stopped while the job was running".to_owned(),
                });
                store.put(Collection::Jobs, &id, &record)?;
            }
            jobs.insert(id, Arc::new(jobs::JobHandle::new(record)));
        }
        Ok(Arc::new(Self {
            store,
            token: token.filter(|t| !t.is_empty()),
            jobs: Mutex::new(jobs),
        }))
    }

    fn job(&self, id: &str) -> Result<Arc<jobs::JobHandle>, ApiError> {
        self.jobs
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("job", id))
    }

    /// Blocks until every job has reached a terminal state.
    pub fn wait_idle(&self) {
        loop {
            let busy = self
                .jobs
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .values()
                .any(|h| !h.lock().state.is_terminal());
            if !busy {
                return;
            }
            std::thread::sleep(std::time::Duration::from_millis(20));
        }
    }
}

impl jobs::Lookup for AppState {
    fn scenario(&self, id: &str) -> Result<Scenario, ApiError> {
        self.store
            .get(Collection::Scenarios, id)
            .map_err(ApiError::store)?
            .ok_or_else(|| ApiError::not_found("scenario", id))
    }

    fn solved_job(&self, id: &str) -> Result<(Instance, u32, Schedule), ApiError> {
        let handle = self.job(id)?;
        let record = handle.lock();
        match (&record.kind, &record.outcome) {
            (JobKind::Solve, Some(outcome)) => Ok((
                record.instance.clone(),
                record.bed_quota_percent,
                outcome.schedule.clone(),
            )),
            _ => Err(ApiError::new(
                StatusCode::CONFLICT,
                "base-job-unusable",
                format!("job {id:?} is not a finished solve job"),
            )),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/scenarios", get(list_scenarios).post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/jobs", get(list_jobs).post(submit_job))
        .route("/jobs/{id}", get(poll_job).delete(cancel_job))
        .route("/jobs/{id}/results", get(job_results))
        .route("/jobs/{id}/incumbents/{index}", get(incumbent_schedule))
        .layer(middleware::from_fn_with_state(state.clone(), authorize));
    Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .merge(api)
        .with_state(state)
}

async fn authorize(State(state): State<Arc<AppState>>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::new(
                StatusCode::UNAUTHORIZED,
                "unauthorized",
                "missing or wrong bearer token",
            )
            .into_response();
        }
    }
    next.run(request).await
}

async fn create_scenario(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ScenarioDraft>, JsonRejection>,
) -> Result<(StatusCode, Json<Scenario>), ApiError> {
    let Json(draft) = body?;
    let (spec, horizon) = draft.resolve().map_err(|problems| ApiError {
        details: Some(json!(problems)),
        ..ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid-scenario",
            "scenario parameters are invalid",
        )
    })?;
    let (_, scenario) = state
        .store
        .insert(Collection::Scenarios, |id| Scenario {
            id: id.to_owned(),
            spec,
            horizon,
            created_at: now(),
        })
        .map_err(ApiError::store)?;
    Ok((StatusCode::CREATED, Json(scenario)))
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let all = state
        .store
        .list::<Scenario>(Collection::Scenarios)
        .map_err(ApiError::store)?;
    let summaries: Vec<ScenarioSummary> = all.iter().map(|(_, s)| s.into()).collect();
    Ok(Json(json!({ "scenarios": summaries })))
}

async fn get_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Scenario>, ApiError> {
    jobs::Lookup::scenario(state.as_ref(), &id).map(Json)
}

async fn submit_job(
    State(state): State<Arc<AppState>>,
    body: Result<Json<JobRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<JobView>), ApiError> {
    let Json(request) = body?;
    let prepared = jobs::prepare(request, state.as_ref())?;
    let (id, record) = state
        .store
        .insert(Collection::Jobs, |id| prepared.record_for(id, now()))
        .map_err(ApiError::store)?;
    let view = record.view(0);
    let handle = Arc::new(jobs::JobHandle::new(record));
    state
        .jobs
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(id.clone(), handle.clone());
    let persist_state = state.clone();
    std::thread::Builder::new()
        .name(format!("job-{id}"))
        .spawn(move || {
            jobs::run(&handle, &|record: &JobRecord| {
                if record.state.is_terminal() {
                    if let Err(e) = persist_state.store.put(Collection::Jobs, &record.id, record) {
                        eprintln!("job {}: cannot persist: {e}", record.id);
                    }
                }
            })
        })
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "spawn-failed", e.to_string()))?;
    Ok((StatusCode::ACCEPTED, Json(view)))
}

#[derive(Debug, Serialize, Deserialize)]
struct JobSummary {
    id: String,
    kind: JobKind,
    state: JobState,
    created_at: u64,
    incumbent_count: usize,
}

async fn list_jobs(State(state): State<Arc<AppState>>) -> Json<Value> {
    let jobs: Vec<JobSummary> = state
        .jobs
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .values()
        .map(|h| {
            let r = h.lock();
            JobSummary {
                id: r.id.clone(),
                kind: r.kind,
                state: r.state,
                created_at: r.created_at,
                incumbent_count: r.incumbents.len(),
            }
        })
        .collect();
    Json(json!({ "jobs": jobs }))
}

#[derive(Debug, Deserialize)]
struct Since {
    #[serde(default)]
    since: u64,
}

async fn poll_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<Since>, QueryRejection>,
) -> Result<Json<JobView>, ApiError> {
    let Query(Since { since }) = query?;
    let handle = state.job(&id)?;
    let view = handle.lock().view(since);
    Ok(Json(view))
}

async fn cancel_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<(StatusCode, Json<JobView>), ApiError> {
    let handle = state.job(&id)?;
    handle.cancel.store(true, Ordering::Relaxed);
    let view = handle.lock().view(0);
    Ok((StatusCode::ACCEPTED, Json(view)))
}

async fn job_results(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<JobResults>, ApiError> {
    let handle = state.job(&id)?;
    let record = handle.lock();
    match record.state {
        JobState::Done => jobs::results(&record).map(Json).ok_or_else(|| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "missing-outcome",
                "finished job has no outcome",
            )
        }),
        JobState::Failed => Err(ApiError {
            details: serde_json::to_value(&record.error).ok(),
            ..ApiError::new(StatusCode::CONFLICT, "job-failed", format!("job {id:?} failed"))
        }),
        _ => Err(ApiError::new(
            StatusCode::CONFLICT,
            "job-not-finished",
            format!(
                "job {id:?} is still {}",
                serde_json::to_value(record.state).unwrap_or_default()
            ),
        )),
    }
}

async fn incumbent_schedule(
    State(state): State<Arc<AppState>>,
    Path((id, index)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let handle = state.job(&id)?;
    let record = handle.lock();
    let found = index
        .parse::<u64>()
        .ok()
        .and_then(|k| record.incumbents.iter().find(|i| i.index == k))
        .ok_or_else(|| ApiError::not_found("incumbent", &index))?;
    Ok(Json(json!({
        "format": FORMAT_VERSION,
        "index": found.index,
        "objective": found.objective,
        "assignments": found.schedule.assignments,
    })))
}

/// Serves until interrupted.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::open(&config.store, config.token)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
