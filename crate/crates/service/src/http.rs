//! JSON HTTP API over a [`SessionStore`].
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET  | `/categories` | |
//! | POST | `/sessions` | `{category, k?, intervals?, seed?}` |
//! | GET  | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/demo` | |
//! | POST | `/sessions/{id}/start` | |
//! | GET  | `/sessions/{id}/next` | |
//! | POST | `/sessions/{id}/response` | `{client_timestamp_ms}` |
//! | POST | `/sessions/{id}/finalize` | |
//! | GET  | `/export` | `?min_responses=n` |
//! | GET  | `/images/{id}` | |
//!
//! Errors come back as `{"error": "..."}` with 404 for unknown resources,
//! 409 for requests the session's state does not allow, 422 for invalid
//! input and 500 for storage failures.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use icm_core::scheduler::IntervalSpec;
use icm_core::ImageId;
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::session::{SessionConfig, DEFAULT_TARGETS};
use crate::store::SessionStore;

type AppState = Arc<SessionStore>;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        use ServiceError::*;
        match self {
            UnknownSession(_) | UnknownImage(_) | UnknownCategory(_) => StatusCode::NOT_FOUND,
            SessionNotRunning { .. }
            | SessionNotFinished { .. }
            | InvalidTransition { .. }
            | NoQualifiedSessions
            | MixedIntervalSpecs => StatusCode::CONFLICT,
            InsufficientTargets { .. }
            | Scheduler(_)
            | ResponseOutOfRange { .. }
            | OutOfOrderResponse { .. }
            | Scoring(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Corrupt(_) | Registry(_) | Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct CreateRequest {
    category: String,
    k: Option<usize>,
    intervals: Option<IntervalSpec>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct ResponseRequest {
    client_timestamp_ms: u64,
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    min_responses: Option<usize>,
}

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/categories", get(categories))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/demo", post(demo))
        .route("/sessions/{id}/start", post(start))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/response", post(respond))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/export", get(export))
        .route("/images/{id}", get(image))
        .with_state(store)
}

pub async fn serve(addr: SocketAddr, store: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}

async fn categories(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.registry().categories().map(str::to_owned).collect())
}

async fn create(
    State(store): State<AppState>,
    Json(req): Json<CreateRequest>,
) -> Result<Response, ServiceError> {
    let config = SessionConfig {
        k: req.k.unwrap_or(DEFAULT_TARGETS),
        intervals: req.intervals.unwrap_or_default(),
        seed: req.seed.unwrap_or_else(rand::random),
    };
    let summary = store.create_session(&req.category, config)?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn summary(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.summary(&id)?).into_response())
}

async fn demo(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.begin_demo(&id)?).into_response())
}

async fn start(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.begin_trial(&id)?).into_response())
}

async fn next(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.next_stimulus(&id)?).into_response())
}

async fn respond(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ResponseRequest>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.submit_response(&id, req.client_timestamp_ms)?).into_response())
}

async fn finalize(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.finalize_and_score(&id)?).into_response())
}

async fn export(
    State(store): State<AppState>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ServiceError> {
    Ok(Json(store.export_dataset(q.min_responses.unwrap_or(1))?).into_response())
}

async fn image(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let entry = store
        .registry()
        .get(&ImageId::new(id.clone()))
        .ok_or(ServiceError::UnknownImage(id))?;
    let bytes = tokio::fs::read(&entry.path).await?;
    let mime = match entry.path.extension().and_then(|e| e.to_str()) {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
