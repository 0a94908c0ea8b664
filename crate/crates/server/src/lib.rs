//! HTTP/JSON workbench service over the simulator.
//!
//! Endpoints, all under `/v1`:
//!
//! | method | path | body / result |
//! |---|---|---|
//! | GET | `/resources` | scenarios, strategies, levels, reward profiles, subtasks |
//! | GET | `/runs` | run handles |
//! | POST | `/runs` | `RunConfig` → `RunHandle` (202) |
//! | GET | `/runs/{id}` | handle, plus the `RunResult` once done |
//! | GET | `/runs/{id}/kpis` | sprint KPIs, aggregate and screens of a done run |
//! | POST | `/whatif` | preview of one subtask under a level and human state |
//! | GET | `/batteries` | stored battery ids |
//! | GET | `/batteries/{id}` | `SummaryTable`; `?format=csv` for CSV |

pub mod store;

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use haas_bench::BenchError;
use haas_core::catalog::{affinity_band, ai_affinity, CognitiveProfile, Constraint, Subtask};
use haas_core::humanstate::HumanState;
use haas_core::outcomes::RewardProfile;
use haas_core::policy::GovernanceLevel;
use haas_core::{whatif_preview, Algorithm, Domain, HaasError, Level, Library, ModelParams, RunConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use store::{RunHandle, RunStatus, RunStore};

pub struct AppState {
    pub lib: Arc<Library>,
    pub runs: RunStore,
    pub batteries: Option<PathBuf>,
    workers: Arc<Semaphore>,
}

impl AppState {
    /// `data_dir` holds `runs/` and `batteries/`; without it nothing is
    /// persisted and no batteries are served.
    pub fn new(lib: Library, data_dir: Option<PathBuf>, workers: usize) -> std::io::Result<Self> {
        let runs = RunStore::open(data_dir.as_ref().map(|d| d.join("runs")))?;
        Ok(AppState {
            lib: Arc::new(lib),
            runs,
            batteries: data_dir.map(|d| d.join("batteries")),
            workers: Arc::new(Semaphore::new(workers.max(1))),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    fields: Vec<FieldError>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }

    fn field(status: StatusCode, field: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        ApiError {
            status,
            fields: vec![FieldError {
                field: field.to_string(),
                message: message.clone(),
            }],
            message,
        }
    }
}

impl From<HaasError> for ApiError {
    fn from(e: HaasError) -> Self {
        match &e {
            HaasError::UnknownSubtask(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            _ => {
                let field = e.field().unwrap_or("config").to_string();
                ApiError::field(StatusCode::UNPROCESSABLE_ENTITY, &field, e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "fields": self.fields }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Deserialises a request body, naming the offending field on failure.
fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "body".to_string() } else { path };
        ApiError::field(StatusCode::BAD_REQUEST, &field, e.inner().to_string())
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/resources", get(resources))
        .route("/v1/runs", get(list_runs).post(submit_run))
        .route("/v1/runs/{id}", get(get_run))
        .route("/v1/runs/{id}/kpis", get(get_kpis))
        .route("/v1/whatif", post(whatif))
        .route("/v1/batteries", get(list_batteries))
        .route("/v1/batteries/{id}", get(get_battery))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn resources(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let lib = &s.lib;
    let weights = ModelParams::default().affinity;
    let scenarios: Vec<_> = lib
        .scenarios
        .iter()
        .map(|sc| {
            json!({
                "name": sc.name,
                "domain": sc.domain,
                "cycles": sc.cycles,
                "subtasks_per_cycle": sc.subtasks_per_cycle,
            })
        })
        .collect();
    let strategies: Vec<_> = Algorithm::ALL
        .iter()
        .map(|a| json!({ "name": a.as_str(), "learned": a.is_learned() }))
        .collect();
    let levels: Vec<_> = Level::ALL
        .iter()
        .map(|l| {
            let g = GovernanceLevel::assemble(*l, &lib.rules);
            json!({
                "level": l,
                "thresholds": l.thresholds(),
                "rules": g.rules.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let profiles: Vec<_> = RewardProfile::PRESETS
        .iter()
        .map(|n| json!({ "name": n, "weights": RewardProfile::preset(n).ok() }))
        .collect();
    let subtasks: Vec<_> = lib
        .subtasks
        .iter()
        .map(|t| {
            let alpha = ai_affinity(&t.profile, &weights).ok();
            json!({
                "id": t.id,
                "name": t.name,
                "domain": t.domain,
                "task_type": t.task_type,
                "constraint": t.constraint,
                "alpha_ai": alpha,
                "band": alpha.map(affinity_band),
            })
        })
        .collect();
    Json(json!({
        "scenarios": scenarios,
        "strategies": strategies,
        "levels": levels,
        "reward_profiles": profiles,
        "ablations": haas_core::Ablation::NAMES,
        "programs": haas_bench::Program::ALL,
        "columns": haas_bench::summary::metric_columns(),
        "subtasks": subtasks,
    }))
}

async fn list_runs(State(s): State<Arc<AppState>>) -> Json<Vec<RunHandle>> {
    Json(s.runs.list())
}

async fn submit_run(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<RunHandle>)> {
    let config: RunConfig = parse_body(&body)?;
    config.validate(&s.lib)?;
    let handle = s.runs.insert(config.clone());
    let id = handle.id.clone();
    let state = s.clone();
    tokio::spawn(async move {
        let _permit = state.workers.clone().acquire_owned().await.expect("worker semaphore open");
        state.runs.mark_running(&id);
        let lib = state.lib.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            haas_bench::execute(std::slice::from_ref(&config), &lib, 1)
                .map(|mut v| v.remove(0))
                .map_err(|e| e.to_string())
        })
        .await
        .unwrap_or_else(|e| Err(format!("worker panicked: {e}")));
        state.runs.finish(&id, outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(handle)))
}

async fn get_run(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let handle = s.runs.handle(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let result = s.runs.result(&id);
    Ok(Json(json!({ "handle": handle, "result": result.as_deref() })))
}

async fn get_kpis(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let handle = s.runs.handle(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let Some(r) = s.runs.result(&id) else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("run `{id}` is {:?}, not done", handle.status).to_lowercase(),
        ));
    };
    Ok(Json(json!({
        "id": id,
        "domain": r.domain,
        "level": r.level,
        "sprints": r.sprints,
        "aggregate": r.aggregate,
        "screens": r.screens,
    })))
}

fn default_inline_name() -> String {
    "inline".into()
}

fn default_duration() -> f64 {
    2.0
}

fn default_criticality() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
pub struct InlineSubtask {
    #[serde(default = "default_inline_name")]
    pub name: String,
    pub domain: Domain,
    pub task_type: String,
    pub profile: CognitiveProfile,
    #[serde(default = "default_duration")]
    pub baseline_duration: f64,
    #[serde(default = "default_criticality")]
    pub criticality: f64,
    #[serde(default)]
    pub constraint: Constraint,
}

#[derive(Debug, Default, Deserialize)]
pub struct StatePatch {
    pub fatigue: Option<f64>,
    pub trust: Option<f64>,
    pub skill: Option<f64>,
    pub tutor_mode_active: Option<bool>,
}

fn default_whatif_level() -> Level {
    Level::L2
}

#[derive(Debug, Deserialize)]
pub struct WhatIfRequest {
    /// Subtask id, name or task type.
    pub subtask: Option<String>,
    pub inline: Option<InlineSubtask>,
    #[serde(default)]
    pub human_state: StatePatch,
    #[serde(default = "default_whatif_level")]
    pub level: Level,
    /// Defaults to the standard scenario of the subtask's domain.
    pub scenario: Option<String>,
    pub reward_profile: Option<String>,
    pub params: Option<ModelParams>,
}

fn resolve_subtask(lib: &Library, key: &str) -> Result<Subtask, HaasError> {
    lib.subtask(key).cloned().or_else(|e| {
        lib.subtasks
            .iter()
            .find(|s| s.task_type.eq_ignore_ascii_case(key))
            .cloned()
            .ok_or(e)
    })
}

async fn whatif(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: WhatIfRequest = parse_body(&body)?;
    let lib = &s.lib;
    let subtask = match (&req.subtask, req.inline) {
        (Some(key), _) => resolve_subtask(lib, key)?,
        (None, Some(i)) => {
            let t = Subtask {
                id: format!("inline-{}", i.name),
                name: i.name,
                task_type: i.task_type,
                domain: i.domain,
                profile: i.profile,
                baseline_duration: i.baseline_duration,
                criticality: i.criticality,
                constraint: i.constraint,
            };
            t.validate(0)
                .map_err(|e| ApiError::field(StatusCode::UNPROCESSABLE_ENTITY, "inline", e.to_string()))?;
            t
        }
        (None, None) => {
            return Err(ApiError::field(
                StatusCode::BAD_REQUEST,
                "subtask",
                "give a subtask reference or an inline profile",
            ))
        }
    };
    let scenario = match &req.scenario {
        Some(name) => lib.scenario(name)?,
        None => lib.standard(subtask.domain)?,
    };
    let params = req.params.unwrap_or_default();
    params.validate()?;
    let profile = match req.reward_profile.as_deref() {
        None => RewardProfile::default(),
        Some("custom") => params.reward,
        Some(name) => RewardProfile::preset(name)?,
    };
    let mut state = HumanState::from_profile(&scenario.human_profile);
    let p = &req.human_state;
    for (field, v) in [("fatigue", p.fatigue), ("trust", p.trust), ("skill", p.skill)] {
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                return Err(ApiError::field(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    &format!("human_state.{field}"),
                    "must lie in [0, 1]",
                ));
            }
        }
    }
    if let Some(f) = p.fatigue {
        state.fatigue = f;
        state.peak_fatigue = state.peak_fatigue.max(f);
    }
    if let Some(t) = p.trust {
        state.trust = t;
    }
    if let Some(k) = p.skill {
        state.skill = k;
    }
    if let Some(b) = p.tutor_mode_active {
        state.tutor_mode_active = b;
    }
    let preview = whatif_preview(&subtask, &state, req.level, scenario, &lib.rules, &params, &profile)?;
    Ok(Json(json!({
        "scenario": scenario.name,
        "subtask": { "id": subtask.id, "name": subtask.name, "task_type": subtask.task_type, "domain": subtask.domain },
        "human_state": state,
        "preview": preview,
    })))
}

fn battery_error(e: BenchError, id: &str) -> ApiError {
    match e {
        BenchError::UnknownBattery(_) => ApiError::not_found("battery", id),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    }
}

async fn list_batteries(State(s): State<Arc<AppState>>) -> ApiResult<Json<Vec<String>>> {
    let Some(root) = &s.batteries else {
        return Ok(Json(Vec::new()));
    };
    haas_bench::store::list(root)
        .map(Json)
        .map_err(|e| battery_error(e, ""))
}

#[derive(Deserialize)]
struct BatteryQuery {
    format: Option<String>,
}

async fn get_battery(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<BatteryQuery>,
) -> ApiResult<Response> {
    let root = s.batteries.as_ref().ok_or_else(|| ApiError::not_found("battery", &id))?;
    let table = haas_bench::store::load_table(root, &id).map_err(|e| battery_error(e, &id))?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(table).into_response()),
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], table.to_csv()).into_response()),
        Some(other) => Err(ApiError::field(
            StatusCode::BAD_REQUEST,
            "format",
            format!("unknown format `{other}`"),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    pub data_dir: Option<PathBuf>,
    pub workers: usize,
    /// Built UI assets served at `/`.
    pub ui_dir: Option<PathBuf>,
}

pub async fn serve(lib: Library, opts: ServeOptions) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(lib, opts.data_dir.clone(), opts.workers)?);
    let mut app = router(state);
    if let Some(ui) = &opts.ui_dir {
        app = app.fallback_service(ServeDir::new(ui));
    }
    let listener = tokio::net::TcpListener::bind((opts.host.as_str(), opts.port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
