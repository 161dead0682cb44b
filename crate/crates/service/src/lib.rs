//! HTTP/JSON front end. Every body is an [`Envelope`]; evaluation failures
//! travel in a 200 response and only request problems use 4xx codes.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};

use eventbase::api::{self, EvaluateRequest, MethodRequest, SweepRequest};
use eventbase::envelope::Envelope;
use eventbase::project::{load_table, CashFlowTable};
use eventbase::registry::Registry;
use eventbase::{CalcError, Status};

pub mod schemas;

/// Shared state: the registry, uploaded projects and the library file that
/// mutations are saved to.
#[derive(Debug, Default)]
pub struct AppState {
    pub registry: Registry,
    projects: RwLock<HashMap<String, Arc<CashFlowTable>>>,
    pub library_path: Option<PathBuf>,
}

impl AppState {
    pub fn new(registry: Registry, library_path: Option<PathBuf>) -> Self {
        AppState {
            registry,
            projects: RwLock::default(),
            library_path,
        }
    }

    /// Loads the library at `path` if it exists; a missing file is an empty
    /// library.
    pub fn with_library(path: PathBuf) -> Result<Self, CalcError> {
        let registry = Registry::new();
        if path.exists() {
            registry.load_library(&path)?;
        }
        Ok(AppState::new(registry, Some(path)))
    }

    pub fn insert_project(&self, table: CashFlowTable) -> String {
        let id = api::project_id(&table);
        self.projects
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id.clone(), Arc::new(table));
        id
    }

    pub fn project(&self, id: &str) -> Option<Arc<CashFlowTable>> {
        self.projects
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
    }

    fn save(&self) -> Result<(), CalcError> {
        match &self.library_path {
            Some(path) => self.registry.save_library(path).map(|_| ()),
            None => Ok(()),
        }
    }
}

pub type SharedState = Arc<AppState>;

fn reply(code: StatusCode, envelope: &Envelope) -> Response {
    (
        code,
        [(header::CONTENT_TYPE, "application/json")],
        envelope.to_machine(),
    )
        .into_response()
}

fn failure(code: StatusCode, err: &CalcError) -> Response {
    reply(code, &Envelope::error(err))
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &str) -> Result<T, Response> {
    serde_json::from_str(body).map_err(|e| {
        failure(
            StatusCode::BAD_REQUEST,
            &CalcError::syntax(format!("request body: {e}")),
        )
    })
}

fn lookup_project(
    state: &AppState,
    id: Option<&str>,
) -> Result<Option<Arc<CashFlowTable>>, Response> {
    match id {
        None => Ok(None),
        Some(id) => state.project(id).map(Some).ok_or_else(|| {
            failure(
                StatusCode::NOT_FOUND,
                &CalcError::unknown_symbol(format!("no project with id `{id}`")),
            )
        }),
    }
}

/// 404 for an unknown command, 400 for anything else wrong with the request.
fn request_error(err: &CalcError) -> Response {
    let code = match err.status {
        Status::UnknownEvent => StatusCode::NOT_FOUND,
        _ => StatusCode::BAD_REQUEST,
    };
    failure(code, err)
}

async fn list_commands(State(state): State<SharedState>) -> Response {
    reply(StatusCode::OK, &api::commands_envelope(&state.registry.snapshot()))
}

async fn define_method(State(state): State<SharedState>, body: String) -> Response {
    let request: MethodRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let envelope = api::define_method(&state.registry, &request);
    match envelope.status {
        Status::Ok => {
            if let Err(e) = state.save() {
                let _ = state.registry.remove_method(&request.name);
                return failure(StatusCode::INTERNAL_SERVER_ERROR, &e);
            }
            reply(StatusCode::CREATED, &envelope)
        }
        Status::DuplicateName => reply(StatusCode::CONFLICT, &envelope),
        _ => reply(StatusCode::BAD_REQUEST, &envelope),
    }
}

async fn remove_method(State(state): State<SharedState>, Path(name): Path<String>) -> Response {
    let previous = state.registry.snapshot();
    let envelope = api::remove_method(&state.registry, &name);
    match envelope.status {
        Status::Ok => {
            if let Err(e) = state.save() {
                if let Some(method) = previous.get(&name) {
                    let _ = state.registry.define_record(method.record().clone());
                }
                return failure(StatusCode::INTERNAL_SERVER_ERROR, &e);
            }
            reply(StatusCode::OK, &envelope)
        }
        Status::UnknownEvent => reply(StatusCode::NOT_FOUND, &envelope),
        _ => reply(StatusCode::FORBIDDEN, &envelope),
    }
}

async fn evaluate(State(state): State<SharedState>, body: String) -> Response {
    let request: EvaluateRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let table = match lookup_project(&state, request.project_id.as_deref()) {
        Ok(t) => t,
        Err(resp) => return resp,
    };
    let snapshot = state.registry.snapshot();
    if let Err(e) = snapshot.validate_bindings(&request.method, &request.bindings) {
        return request_error(&e);
    }
    reply(
        StatusCode::OK,
        &api::evaluate(&snapshot, &request.method, &request.bindings, table.as_deref()),
    )
}

async fn upload_project(State(state): State<SharedState>, body: String) -> Response {
    match load_table(&body) {
        Ok(table) => {
            let id = state.insert_project(table);
            reply(StatusCode::CREATED, &api::project_stored(&id))
        }
        Err(e) => failure(StatusCode::BAD_REQUEST, &e),
    }
}

async fn get_project(State(state): State<SharedState>, Path(id): Path<String>) -> Response {
    match state.project(&id) {
        Some(table) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "application/json")],
            table.to_canonical_json(),
        )
            .into_response(),
        None => failure(
            StatusCode::NOT_FOUND,
            &CalcError::unknown_symbol(format!("no project with id `{id}`")),
        ),
    }
}

async fn sensitivity(State(state): State<SharedState>, body: String) -> Response {
    let request: SweepRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let table = match lookup_project(&state, request.project_id.as_deref()) {
        Ok(t) => t,
        Err(resp) => return resp,
    };
    let envelope = api::sensitivity(&state.registry.snapshot(), &request.spec, table.as_deref());
    if envelope.status == Status::Ok {
        reply(StatusCode::OK, &envelope)
    } else {
        request_error(&CalcError::new(
            envelope.status,
            envelope.detail.clone().unwrap_or_default(),
        ))
    }
}

async fn status_vocabulary() -> Response {
    reply(
        StatusCode::OK,
        &Envelope::ok_data(json!(eventbase::envelope::status_vocabulary())),
    )
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/commands", get(list_commands))
        .route("/api/methods", post(define_method))
        .route("/api/methods/{name}", delete(remove_method))
        .route("/api/evaluate", post(evaluate))
        .route("/api/projects", post(upload_project))
        .route("/api/projects/{id}", get(get_project))
        .route("/api/sensitivity", post(sensitivity))
        .route("/api/statuses", get(status_vocabulary))
        .with_state(state)
}

/// `"*"` allows any origin; anything else is a single allowed origin.
pub fn cors(origin: &str) -> Result<CorsLayer, String> {
    let allow = if origin == "*" {
        AllowOrigin::any()
    } else {
        let value = HeaderValue::from_str(origin).map_err(|e| format!("bad CORS origin: {e}"))?;
        AllowOrigin::exact(value)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([header::CONTENT_TYPE]))
}

/// Serves until interrupted.
pub async fn serve(
    state: SharedState,
    addr: SocketAddr,
    cors_origin: &str,
) -> std::io::Result<()> {
    let layer = cors(cors_origin).map_err(std::io::Error::other)?;
    let app = router(state).layer(layer);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
