//! JSON API over the same documents the CLI prints.
//!
//! Reads work on a snapshot of the current knowledge base. Writes go through
//! a single async mutex, so knowledge-base commits and project stores are
//! serialized; knowledge-base writes also carry an expected version.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use riskgrid::kb::{ChangeRequest, KbStore, KnowledgeBase};
use riskgrid::project::{ProjectAssessment, Variant};
use riskgrid::{EvalMode, ScaleLevel};

use crate::app::{factor_catalog, rule_list, writable_kb};
use crate::error::AppError;
use crate::report::{to_json, ComparisonDocument, Format, ReportDocument};

pub struct AppState {
    kb: RwLock<Arc<KnowledgeBase>>,
    store: KbStore,
    projects: PathBuf,
    writer: Mutex<()>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    /// Opens (or initialises) the knowledge base and the project directory.
    pub fn open(kb: Option<&Path>, data_dir: &Path) -> Result<SharedState, AppError> {
        let (store, kb) = writable_kb(kb, data_dir)?;
        let projects = data_dir.join("projects");
        fs::create_dir_all(&projects).map_err(|e| AppError::io(projects.display(), e))?;
        Ok(Arc::new(AppState {
            kb: RwLock::new(Arc::new(kb)),
            store,
            projects,
            writer: Mutex::new(()),
        }))
    }

    pub fn kb(&self) -> Arc<KnowledgeBase> {
        self.kb.read().expect("kb lock poisoned").clone()
    }

    fn project_path(&self, id: &str) -> Result<PathBuf, AppError> {
        let valid = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !valid {
            return Err(AppError::invalid(
                "project_id",
                format!("project id `{id}` may only contain letters, digits, `_` and `-`"),
            ));
        }
        Ok(self.projects.join(format!("{id}.toml")))
    }

    fn load_project(&self, id: &str) -> Result<ProjectAssessment, AppError> {
        let path = self.project_path(id)?;
        if !path.is_file() {
            return Err(AppError::NotFound(format!("project `{id}`")));
        }
        let text = fs::read_to_string(&path).map_err(|e| AppError::io(path.display(), e))?;
        Ok(ProjectAssessment::from_toml_str(&text)?)
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (
            status,
            [(header::CONTENT_TYPE, "application/json")],
            to_json(&self.to_json()),
        )
            .into_response()
    }
}

fn body_response(status: StatusCode, format: Format, body: String, kb_version: u64) -> Response {
    let mut response = (
        status,
        [(header::CONTENT_TYPE, format.content_type())],
        body,
    )
        .into_response();
    response
        .headers_mut()
        .insert("x-riskgrid-kb-version", HeaderValue::from(kb_version));
    response
}

fn json_response(status: StatusCode, value: &impl serde::Serialize, kb_version: u64) -> Response {
    body_response(status, Format::Json, to_json(value), kb_version)
}

fn parse_body(body: &Bytes) -> Result<Value, AppError> {
    serde_json::from_slice(body)
        .map_err(|e| AppError::invalid("json", format!("request body: {e}")))
}

fn parse_param<T: std::str::FromStr>(
    name: &str,
    value: Option<&str>,
    default: T,
) -> Result<T, AppError>
where
    T::Err: std::fmt::Display,
{
    match value {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e| AppError::invalid("query", format!("{name}: {e}"))),
    }
}

struct EvalParams {
    threshold: ScaleLevel,
    mode: EvalMode,
    format: Format,
}

impl EvalParams {
    fn from_map(params: &BTreeMap<String, String>) -> Result<Self, AppError> {
        let get = |k: &str| params.get(k).map(String::as_str);
        Ok(EvalParams {
            threshold: parse_param("threshold", get("threshold"), ScaleLevel::High)?,
            mode: parse_param("mode", get("mode"), EvalMode::Strict)?,
            format: parse_param("format", get("format"), Format::Json)?,
        })
    }
}

async fn get_factors(State(state): State<SharedState>) -> Response {
    let kb = state.kb();
    json_response(StatusCode::OK, &factor_catalog(&kb), kb.version())
}

async fn get_rules(State(state): State<SharedState>) -> Response {
    let kb = state.kb();
    json_response(StatusCode::OK, &rule_list(&kb), kb.version())
}

async fn get_kb(State(state): State<SharedState>) -> Response {
    let kb = state.kb();
    json_response(
        StatusCode::OK,
        &json!({ "version": kb.version(), "changelog": kb.changelog() }),
        kb.version(),
    )
}

async fn list_projects(State(state): State<SharedState>) -> Result<Response, AppError> {
    let entries =
        fs::read_dir(&state.projects).map_err(|e| AppError::io(state.projects.display(), e))?;
    let mut ids: Vec<String> = entries
        .filter_map(Result::ok)
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            name.strip_suffix(".toml").map(str::to_string)
        })
        .collect();
    ids.sort();
    Ok(json_response(
        StatusCode::OK,
        &json!({ "projects": ids }),
        state.kb().version(),
    ))
}

async fn get_project(
    State(state): State<SharedState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, AppError> {
    let project = state.load_project(&id)?;
    Ok(json_response(
        StatusCode::OK,
        &project,
        state.kb().version(),
    ))
}

async fn put_project(
    State(state): State<SharedState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, AppError> {
    let path = state.project_path(&id)?;
    let project = ProjectAssessment::from_json_value(parse_body(&body)?)?;
    if project.id != id {
        return Err(AppError::invalid(
            "project_id",
            format!(
                "body describes project `{}` but the URL names `{id}`",
                project.id
            ),
        ));
    }
    let kb = state.kb();
    project.validate(kb.rulebase().factors())?;

    let _guard = state.writer.lock().await;
    let existed = path.is_file();
    let tmp = path.with_extension("toml.tmp");
    fs::write(&tmp, project.to_toml_string()).map_err(|e| AppError::io(tmp.display(), e))?;
    fs::rename(&tmp, &path).map_err(|e| AppError::io(path.display(), e))?;
    let status = if existed {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    Ok(json_response(status, &project, kb.version()))
}

async fn assess(
    State(state): State<SharedState>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Result<Response, AppError> {
    let params = EvalParams::from_map(&params)?;
    let project = state.load_project(&id)?;
    let kb = state.kb();
    let report = ReportDocument::build(&project, &kb, params.threshold, params.mode)?;
    Ok(body_response(
        StatusCode::OK,
        params.format,
        report.render(params.format),
        kb.version(),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRequest {
    projects: Vec<String>,
    #[serde(default)]
    threshold: Option<String>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    format: Option<String>,
}

async fn compare(State(state): State<SharedState>, body: Bytes) -> Result<Response, AppError> {
    let request: CompareRequest = serde_json::from_value(parse_body(&body)?)
        .map_err(|e| AppError::invalid("json", format!("compare request: {e}")))?;
    let threshold = parse_param("threshold", request.threshold.as_deref(), ScaleLevel::High)?;
    let mode = parse_param("mode", request.mode.as_deref(), EvalMode::Strict)?;
    let format = parse_param("format", request.format.as_deref(), Format::Json)?;
    let variants = request
        .projects
        .iter()
        .map(|id| Ok(Variant::new(id.clone(), state.load_project(id)?)))
        .collect::<Result<Vec<_>, AppError>>()?;
    let kb = state.kb();
    let doc = ComparisonDocument::build(&variants, &kb, threshold, mode)?;
    Ok(body_response(
        StatusCode::OK,
        format,
        doc.render(format),
        kb.version(),
    ))
}

/// One entry of an events request: a change plus an optional note.
fn parse_event(mut value: Value) -> Result<(ChangeRequest, String), AppError> {
    let note = match value.as_object_mut().and_then(|o| o.remove("note")) {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s,
        Some(_) => return Err(AppError::invalid("event", "`note` must be a string")),
    };
    let request =
        serde_json::from_value(value).map_err(|e| AppError::invalid("event", e.to_string()))?;
    Ok((request, note))
}

/// Body: `{"expected_version": n, "events": [...]}` or a single event with
/// `expected_version` alongside its fields. A batch commits all or nothing.
async fn post_events(State(state): State<SharedState>, body: Bytes) -> Result<Response, AppError> {
    let mut body = parse_body(&body)?;
    let object = body
        .as_object_mut()
        .ok_or_else(|| AppError::invalid("event", "request body must be an object"))?;
    let expected = object
        .remove("expected_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| AppError::invalid("event", "`expected_version` is required"))?;
    let raw: Vec<Value> = match object.remove("events") {
        Some(Value::Array(events)) => {
            if !object.is_empty() {
                return Err(AppError::invalid(
                    "event",
                    "unexpected fields next to `events`",
                ));
            }
            events
        }
        Some(_) => return Err(AppError::invalid("event", "`events` must be an array")),
        None => vec![body],
    };
    if raw.is_empty() {
        return Err(AppError::invalid("event", "no events given"));
    }
    let events = raw
        .into_iter()
        .map(parse_event)
        .collect::<Result<Vec<_>, _>>()?;

    let _guard = state.writer.lock().await;
    let current = state.kb();
    if current.version() != expected {
        return Err(AppError::Conflict(format!(
            "knowledge base is at version {}, update expected version {expected}",
            current.version()
        )));
    }
    let mut next = (*current).clone();
    for (request, note) in events {
        next = next.apply_change(request, &note)?;
    }
    state.store.commit(current.version(), &next)?;
    let committed = &next.changelog()[current.changelog().len()..];
    let response = json_response(
        StatusCode::CREATED,
        &json!({ "version": next.version(), "events": committed }),
        next.version(),
    );
    *state.kb.write().expect("kb lock poisoned") = Arc::new(next);
    Ok(response)
}

async fn not_found() -> AppError {
    AppError::NotFound("resource".into())
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/factors", get(get_factors))
        .route("/api/rules", get(get_rules))
        .route("/api/kb", get(get_kb))
        .route("/api/kb/events", post(post_events))
        .route("/api/projects", get(list_projects))
        .route("/api/projects/{id}", get(get_project).put(put_project))
        .route("/api/projects/{id}/assess", post(assess))
        .route("/api/compare", post(compare))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(state: SharedState, addr: SocketAddr) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::io(addr, e))?;
    eprintln!("riskctl listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::io(addr, e))
}
