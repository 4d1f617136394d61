//! HTTP service over a directory of `*.scenario` files.
//!
//! | method | path                    | body / result                              |
//! |--------|-------------------------|--------------------------------------------|
//! | GET    | `/api/scenarios`        | list of scenario summaries                 |
//! | GET    | `/api/scenarios/{name}` | the scenario document, panel inline        |
//! | POST   | `/api/simulate`         | `{scenario, overrides}` → `{run, trajectory}` |
//! | POST   | `/api/fit`              | `{scenario, overrides, observed, spec, budget, seed}` → `{run, fit}` |
//! | GET    | `/api/runs/{id}`        | `{run, trajectory, fit?}` of a stored run  |
//!
//! `scenario` is either the name of a file in the directory or an inline
//! document. Errors come back as `{code, message, path, diagnostics}` with
//! status 400 (syntax, schema, domain, limits), 404 (unknown scenario or
//! run) or 422 (panel validation). Runs are stored under
//! `<scenario_dir>/runs`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use marketflow_core::simulate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tower_http::services::ServeDir;

use crate::error::{Diagnostic, Error, Result};
use crate::report::{run_fit, FitReport};
use crate::runs::{RunKind, RunStore, SessionRun};
use crate::scenario::{load_tree, parse_tree, CalibrationDoc, LoadedScenario, Strictness};
use crate::trajectory::read_observations;

/// Largest number of integration steps one request may ask for.
pub const MAX_STEPS: usize = 1_000_000;
pub const MAX_BUDGET: usize = 10_000;
pub const SCENARIO_EXT: &str = "scenario";

struct Inner {
    scenario_dir: PathBuf,
    runs: RunStore,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(scenario_dir: impl Into<PathBuf>) -> Self {
        let scenario_dir = scenario_dir.into();
        let runs = RunStore::new(scenario_dir.join("runs"));
        Self(Arc::new(Inner { scenario_dir, runs }))
    }

    fn scenario_path(&self, name: &str) -> Result<PathBuf> {
        let safe = !name.is_empty()
            && !name.starts_with('.')
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        let path = self.0.scenario_dir.join(format!("{name}.{SCENARIO_EXT}"));
        if !safe || !path.is_file() {
            return Err(Error::NotFound {
                kind: "scenario",
                name: name.to_string(),
            });
        }
        Ok(path)
    }

    /// Raw tree and CSV base directory for a name or inline document.
    fn source(&self, scenario: &ScenarioRef) -> Result<(Value, Option<PathBuf>)> {
        match scenario {
            ScenarioRef::Name(name) => {
                let path = self.scenario_path(name)?;
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok((parse_tree(&text)?, Some(self.0.scenario_dir.clone())))
            }
            ScenarioRef::Inline(tree) => Ok((tree.clone(), None)),
        }
    }
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl From<marketflow_core::Error> for ApiError {
    fn from(e: marketflow_core::Error) -> Self {
        ApiError(e.into())
    }
}

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    path: Option<String>,
    diagnostics: Vec<Diagnostic>,
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::NotFound { .. } => StatusCode::NOT_FOUND,
        Error::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = self.0;
        let message = match &e {
            Error::Validation(d) => d
                .iter()
                .map(|d| d.message.as_str())
                .collect::<Vec<_>>()
                .join("; "),
            Error::Syntax { message, .. }
            | Error::Schema { message, .. }
            | Error::Domain { message, .. }
            | Error::Csv { message, .. } => message.clone(),
            other => other.to_string(),
        };
        let body = ErrorBody {
            code: e.code(),
            message,
            path: e.path(),
            diagnostics: e.diagnostics(),
        };
        json_response(status_of(&e), &body)
    }
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("response serializes");
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

type ApiResult = std::result::Result<Response, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let tree = std::str::from_utf8(body)
        .map_err(|e| Error::Syntax {
            line: 1,
            column: e.valid_up_to() + 1,
            message: "request body is not UTF-8".into(),
        })
        .and_then(parse_tree)?;
    serde_path_to_error::deserialize(tree)
        .map_err(|e| Error::schema(e.path().to_string(), e.into_inner().to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScenarioRef {
    Name(String),
    Inline(Value),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    scenario: ScenarioRef,
    #[serde(default)]
    overrides: Map<String, Value>,
}

fn default_budget() -> usize {
    500
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitRequest {
    scenario: ScenarioRef,
    #[serde(default)]
    overrides: Map<String, Value>,
    /// CSV text, `t,share_1..share_n`.
    observed: String,
    /// Replaces the scenario's calibration section.
    #[serde(default)]
    spec: Option<CalibrationDoc>,
    #[serde(default = "default_budget")]
    budget: usize,
    #[serde(default)]
    seed: u64,
}

fn prepare(
    state: &AppState,
    scenario: &ScenarioRef,
    overrides: &Map<String, Value>,
    calibration: Option<&CalibrationDoc>,
) -> Result<LoadedScenario> {
    let (mut tree, base) = state.source(scenario)?;
    if let (Some(spec), Some(map)) = (calibration, tree.as_object_mut()) {
        map.insert(
            "calibration".into(),
            serde_json::to_value(spec).expect("spec serializes"),
        );
    }
    let overrides: Vec<(String, Value)> = overrides
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let loaded = load_tree(&mut tree, base.as_deref(), &overrides, Strictness::Strict)?;
    let steps = loaded.integrator.step_count(loaded.scenario.start_time())?;
    if steps > MAX_STEPS {
        return Err(Error::Limit {
            what: "integration steps",
            detail: format!("{steps} steps requested, at most {MAX_STEPS} allowed"),
        });
    }
    Ok(loaded)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| Error::io("<worker>", std::io::Error::other(e.to_string())))?
}

#[derive(Serialize)]
struct ScenarioSummary {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attributes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stamps: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<Diagnostic>,
}

fn list_scenarios(dir: &Path) -> Result<Vec<ScenarioSummary>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == SCENARIO_EXT) && p.is_file())
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match crate::scenario::load_scenario_file(&path, &[], Strictness::Strict) {
                Ok(l) => ScenarioSummary {
                    name,
                    stamps: Some(l.scenario.panel().times().len()),
                    segments: Some(l.doc.segments),
                    attributes: Some(l.doc.attributes),
                    errors: Vec::new(),
                },
                Err(e) => ScenarioSummary {
                    name,
                    segments: None,
                    attributes: None,
                    stamps: None,
                    errors: e.diagnostics(),
                },
            }
        })
        .collect())
}

async fn scenarios(State(state): State<AppState>) -> ApiResult {
    let dir = state.0.scenario_dir.clone();
    let list = blocking(move || list_scenarios(&dir)).await?;
    Ok(json_response(StatusCode::OK, &list))
}

async fn scenario(State(state): State<AppState>, UrlPath(name): UrlPath<String>) -> ApiResult {
    let loaded = blocking(move || {
        let path = state.scenario_path(&name)?;
        crate::scenario::load_scenario_file(&path, &[], Strictness::Strict)
    })
    .await?;
    Ok(json_response(StatusCode::OK, &loaded.inline_doc()))
}

async fn simulate_run(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: SimulateRequest = parse_body(&body)?;
    let response = blocking(move || {
        let loaded = prepare(&state, &req.scenario, &req.overrides, None)?;
        let traj = simulate(&loaded.scenario, &loaded.integrator)?;
        let run = SessionRun::new(
            RunKind::Simulate,
            loaded.inline_doc(),
            *loaded.scenario.behavior(),
            &Value::Null,
            &traj,
        );
        let run = state.0.runs.save(run, &traj, None)?;
        Ok(json!({ "run": run, "trajectory": traj }))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &response))
}

async fn fit_run(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: FitRequest = parse_body(&body)?;
    if req.budget == 0 || req.budget > MAX_BUDGET {
        return Err(Error::Limit {
            what: "budget",
            detail: format!(
                "{} evaluations requested, allowed 1..={MAX_BUDGET}",
                req.budget
            ),
        }
        .into());
    }
    let response = blocking(move || {
        let loaded = prepare(&state, &req.scenario, &req.overrides, req.spec.as_ref())?;
        let spec = loaded.calibration.clone().ok_or_else(|| {
            Error::domain(
                "spec",
                "no fit spec given and the scenario has no calibration section",
            )
        })?;
        let observed = read_observations(
            req.observed.as_bytes(),
            "observed",
            loaded.scenario.segment_count(),
            spec.loss,
        )?;
        let (result, report): (_, FitReport) =
            run_fit(&loaded, &spec, &observed, req.budget, req.seed)?;
        let traj = simulate(&result.scenario, &loaded.integrator)?;
        let extra = json!({
            "observed": req.observed,
            "budget": req.budget,
            "seed": req.seed,
        });
        let run = SessionRun::new(
            RunKind::Fit,
            loaded.inline_doc(),
            *result.scenario.behavior(),
            &extra,
            &traj,
        );
        let run = state.0.runs.save(run, &traj, Some(&report))?;
        Ok(json!({ "run": run, "fit": report }))
    })
    .await?;
    Ok(json_response(StatusCode::OK, &response))
}

async fn stored_run(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let stored = blocking(move || state.0.runs.load(&id)).await?;
    let mut body = json!({ "run": stored.run, "trajectory": stored.trajectory });
    if let Some(fit) = stored.fit {
        body["fit"] = serde_json::to_value(fit).expect("report serializes");
    }
    Ok(json_response(StatusCode::OK, &body))
}

async fn api_not_found() -> ApiResult {
    Err(Error::NotFound {
        kind: "endpoint",
        name: "no such API route".into(),
    }
    .into())
}

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>marketflow</title></head>
<body>
<h1>marketflow</h1>
<p>No UI bundle is being served. The JSON API is available under
<code>/api</code>: <a href=\"/api/scenarios\">/api/scenarios</a>.</p>
</body></html>
";

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/scenarios", get(scenarios))
        .route("/api/scenarios/{name}", get(scenario))
        .route("/api/simulate", post(simulate_run))
        .route("/api/fit", post(fit_run))
        .route("/api/runs/{id}", get(stored_run))
        .route("/api/{*rest}", axum::routing::any(api_not_found))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

pub async fn serve(
    scenario_dir: PathBuf,
    ui_dir: Option<PathBuf>,
    port: u16,
    log: &mut dyn Write,
) -> Result<()> {
    if !scenario_dir.is_dir() {
        return Err(Error::io(
            &scenario_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "scenario directory not found"),
        ));
    }
    let app = router(AppState::new(&scenario_dir), ui_dir);
    let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(format!("{addr}"), e))?;
    let _ = writeln!(log, "serving {} on http://{addr}", scenario_dir.display());
    axum::serve(listener, app)
        .await
        .map_err(|e| Error::io(format!("{addr}"), e))
}
