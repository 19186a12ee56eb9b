//! JSON API over the runner and the run store.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use rpl_core::corpus;
use rpl_core::lang::{preprocess, Profile, Tool};
use rpl_core::parser::{self, ParseDiagnostic};
use rpl_core::peak::DEFAULT_BUDGET;

use crate::charts::chart_series;
use crate::presets::{self, PRESETS};
use crate::runner::{execute, RunError, RunRequest};
use crate::store::Store;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

pub struct AppState {
    store: RwLock<Store>,
    timeout: Duration,
}

impl AppState {
    pub fn new(store: Store) -> Arc<Self> {
        Self::with_timeout(store, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(store: Store, timeout: Duration) -> Arc<Self> {
        Arc::new(Self {
            store: RwLock::new(store),
            timeout,
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/examples", get(list_examples))
        .route("/api/examples/{name}", get(get_example))
        .route("/api/presets", get(list_presets))
        .route("/api/outline", get(outline))
        .route("/api/runs", get(list_runs).post(create_run))
        .route("/api/runs/{exec_id}", get(get_run))
        .route("/api/charts", get(charts))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

fn issue(field: &str, message: impl Into<String>) -> FieldIssue {
    FieldIssue {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Diagnostics(Vec<ParseDiagnostic>),
    NotFound(String),
    Invalid(Vec<FieldIssue>),
    Execution { message: String, context: Value },
    Internal(String),
    Timeout(Duration),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({"error": "badRequest", "message": m})),
            ApiError::Diagnostics(d) => (StatusCode::BAD_REQUEST, json!({"error": "diagnostics", "diagnostics": d})),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({"error": "notFound", "message": m})),
            ApiError::Invalid(f) => (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "invalidProfile", "fields": f})),
            ApiError::Execution { message, context } => (
                StatusCode::INTERNAL_SERVER_ERROR,
                json!({"error": "execution", "message": message, "context": context}),
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "internal", "message": m})),
            ApiError::Timeout(d) => (
                StatusCode::GATEWAY_TIMEOUT,
                json!({"error": "timeout", "message": format!("run exceeded {} s", d.as_secs())}),
            ),
        };
        (status, Json(body)).into_response()
    }
}

/// Pre-serialized JSON body.
fn raw_json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Serialize)]
struct ExampleInfo {
    name: &'static str,
    description: &'static str,
}

async fn list_examples() -> Json<Vec<ExampleInfo>> {
    Json(
        corpus::EXAMPLES
            .iter()
            .map(|e| ExampleInfo {
                name: e.name,
                description: e.description,
            })
            .collect(),
    )
}

async fn get_example(Path(name): Path<String>) -> Result<Json<Value>, ApiError> {
    let e = corpus::example(&name).ok_or_else(|| ApiError::NotFound(format!("no example named {name}")))?;
    Ok(Json(json!({"name": e.name, "description": e.description, "source": e.source})))
}

async fn list_presets() -> Json<&'static [presets::ProfilePreset]> {
    Json(PRESETS)
}

async fn outline(Query(q): Query<HashMap<String, String>>) -> Result<Json<Value>, ApiError> {
    let source = q.get("source").ok_or_else(|| ApiError::BadRequest("missing `source` query parameter".into()))?;
    let text = preprocess(source, &Profile::default()).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let out = parser::parse_with_diagnostics(&text);
    match out.program {
        Some(p) if !out.has_errors() => Ok(Json(json!({"outline": parser::outline(&p), "diagnostics": out.diagnostics}))),
        _ => Err(ApiError::Diagnostics(out.diagnostics)),
    }
}

async fn list_runs(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().unwrap_or_else(|e| e.into_inner());
    let rows: Vec<_> = store.list().iter().rev().map(|r| r.overview_row()).collect();
    raw_json(StatusCode::OK, serde_json::to_string(&rows).expect("rows serialize"))
}

async fn get_run(State(state): State<Arc<AppState>>, Path(exec_id): Path<String>) -> Result<Response, ApiError> {
    let store = state.store.read().unwrap_or_else(|e| e.into_inner());
    let r = store.get(&exec_id).ok_or_else(|| ApiError::NotFound(format!("no run with execution id {exec_id}")))?;
    Ok(raw_json(StatusCode::OK, r.payload.get().to_string()))
}

async fn charts(State(state): State<Arc<AppState>>) -> Json<crate::charts::ChartSeries> {
    let store = state.store.read().unwrap_or_else(|e| e.into_inner());
    Json(chart_series(store.list()))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RunBody {
    source: String,
    file_name: Option<String>,
    tool: Option<String>,
    #[serde(default)]
    profile: Value,
    budget: Option<u64>,
}

/// Builds a profile from the request, starting from a preset and applying overrides.
pub fn parse_profile(tool: Option<&str>, profile: &Value) -> Result<Profile, Vec<FieldIssue>> {
    let mut errors = Vec::new();
    let empty = Map::new();
    let fields = match profile {
        Value::Null => &empty,
        Value::Object(m) => m,
        _ => return Err(vec![issue("profile", "must be an object")]),
    };
    let tool_name = tool.or_else(|| fields.get("tool").and_then(Value::as_str)).unwrap_or("simulate");
    let tool: Tool = match tool_name.parse() {
        Ok(t) => t,
        Err(m) => return Err(vec![issue("tool", m)]),
    };
    let mut p = match fields.get("preset") {
        None => presets::default_for(tool),
        Some(Value::String(name)) => match presets::find(tool, name) {
            Some(pr) => pr.profile,
            None => return Err(vec![issue("preset", format!("no {} preset named `{name}`", tool.as_str()))]),
        },
        Some(_) => return Err(vec![issue("preset", "must be a string")]),
    };
    for (key, v) in fields {
        let small = |errors: &mut Vec<FieldIssue>| match v.as_u64().and_then(|n| u32::try_from(n).ok()) {
            Some(n) => Some(n),
            None => {
                errors.push(issue(key, "must be a non-negative integer"));
                None
            }
        };
        match key.as_str() {
            "tool" | "preset" => {}
            "efficiencyPct" => p.efficiency_pct = small(&mut errors).unwrap_or(p.efficiency_pct),
            "availabilityPct" => p.availability_pct = small(&mut errors).unwrap_or(p.availability_pct),
            "concCases" => p.conc_cases = small(&mut errors).unwrap_or(p.conc_cases),
            "numSims" => p.num_sims = small(&mut errors).unwrap_or(p.num_sims),
            "seed" => match v.as_u64() {
                Some(n) => p.seed = n,
                None => errors.push(issue(key, "must be a non-negative integer")),
            },
            _ => errors.push(issue(key, "unknown profile field")),
        }
    }
    if fields.get("tool").and_then(Value::as_str).is_some_and(|t| t != tool.as_str()) {
        errors.push(issue("tool", "disagrees with the request's tool"));
    }
    p.tool = tool;
    if let Err(es) = p.validate() {
        errors.extend(es.into_iter().map(|e| issue(e.field, e.message)));
    }
    if errors.is_empty() {
        Ok(p)
    } else {
        Err(errors)
    }
}

async fn create_run(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let body: RunBody = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let profile = parse_profile(body.tool.as_deref(), &body.profile).map_err(ApiError::Invalid)?;
    let file = body.file_name.unwrap_or_else(|| "untitled.rpl".into());
    let req = RunRequest {
        source: body.source,
        file_name: file.clone(),
        profile,
        budget: body.budget.unwrap_or(DEFAULT_BUDGET),
    };
    let context = json!({"tool": profile.tool, "file": file, "profile": profile});
    let task = tokio::task::spawn_blocking(move || execute(&req));
    let result = match tokio::time::timeout(state.timeout, task).await {
        Err(_) => return Err(ApiError::Timeout(state.timeout)),
        Ok(Err(join)) => return Err(ApiError::Internal(join.to_string())),
        Ok(Ok(r)) => r,
    };
    let mut outcome = result.map_err(|e| match e {
        RunError::Diagnostics(d) => ApiError::Diagnostics(d),
        RunError::InvalidProfile(fs) => ApiError::Invalid(fs.into_iter().map(|f| issue(f.field, f.message)).collect()),
        other => ApiError::Execution {
            message: other.to_string(),
            context,
        },
    })?;
    let mut store = state.store.write().unwrap_or_else(|e| e.into_inner());
    let rec = store.record(&mut outcome, &file).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(raw_json(StatusCode::CREATED, rec.payload.get().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_overrides_apply_to_preset_copy() {
        let p = parse_profile(Some("simulate"), &json!({"preset": "degraded", "numSims": 3})).unwrap();
        assert_eq!((p.efficiency_pct, p.num_sims), (50, 3));
        assert_eq!(presets::find(Tool::Simulate, "degraded").unwrap().profile.num_sims, 10);
    }

    #[test]
    fn profile_field_errors_are_collected() {
        let e = parse_profile(None, &json!({"efficiencyPct": "high", "concCases": 0, "colour": 1})).unwrap_err();
        let fields: Vec<_> = e.iter().map(|f| f.field.as_str()).collect();
        assert!(fields.contains(&"efficiencyPct"));
        assert!(fields.contains(&"concCases"));
        assert!(fields.contains(&"colour"));
    }

    #[test]
    fn unknown_tool() {
        let e = parse_profile(Some("optimise"), &Value::Null).unwrap_err();
        assert_eq!(e[0].field, "tool");
    }
}
