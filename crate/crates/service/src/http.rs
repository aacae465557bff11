//! HTTP session API over the [`Engine`].
//!
//! Errors are JSON `{"error": {"code": "...", "message": "..."}}` with a
//! stable `code`.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::engine::{CreateSession, Engine, EngineError};

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::SessionNotFound(_) | EngineError::IterationNotFound { .. } => StatusCode::NOT_FOUND,
            EngineError::InvalidInput { .. } => StatusCode::BAD_REQUEST,
            EngineError::InvalidState { .. } => StatusCode::CONFLICT,
            EngineError::Backend { code: "reflection_failed", .. } => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::Backend { .. } => StatusCode::BAD_GATEWAY,
            EngineError::Io(_) | EngineError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_body", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_query", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, EngineError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackBody {
    text: String,
}

#[derive(Debug, Deserialize)]
struct IterationQuery {
    iteration: Option<usize>,
}

async fn create(State(engine): State<Arc<Engine>>, body: Result<Json<CreateSession>, JsonRejection>) -> ApiResult {
    let Json(req) = body?;
    let view = blocking(move || engine.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn grade(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(blocking(move || engine.grade(&id)).await?).into_response())
}

async fn feedback(State(engine): State<Arc<Engine>>, Path(id): Path<String>, body: Result<Json<FeedbackBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    Ok(Json(blocking(move || engine.feedback(&id, &body.text)).await?).into_response())
}

async fn state(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(blocking(move || engine.state(&id)).await?).into_response())
}

async fn tree(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(blocking(move || engine.tree(&id)).await?).into_response())
}

async fn preview(State(engine): State<Arc<Engine>>, Path(id): Path<String>, q: Result<Query<IterationQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = q?;
    let png = blocking(move || engine.preview(&id, q.iteration)).await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

fn attachment(name: String, content_type: &'static str, body: String) -> Response {
    ([(header::CONTENT_TYPE, content_type.to_string()), (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{name}\""))], body)
        .into_response()
}

async fn export_cube(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    q: Result<Query<IterationQuery>, QueryRejection>,
) -> ApiResult {
    let Query(q) = q?;
    let name_id = id.clone();
    let a = blocking(move || engine.export(&id, q.iteration)).await?;
    Ok(attachment(format!("{name_id}-it{}.cube", a.iteration), "text/plain; charset=utf-8", a.cube))
}

async fn export_cdl(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    q: Result<Query<IterationQuery>, QueryRejection>,
) -> ApiResult {
    let Query(q) = q?;
    let name_id = id.clone();
    let a = blocking(move || engine.export(&id, q.iteration)).await?;
    Ok(attachment(format!("{name_id}-it{}.cdl", a.iteration), "application/xml", a.cdl))
}

async fn export_report(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    q: Result<Query<IterationQuery>, QueryRejection>,
) -> ApiResult {
    let Query(q) = q?;
    let name_id = id.clone();
    let a = blocking(move || engine.export(&id, q.iteration)).await?;
    Ok(attachment(format!("{name_id}-it{}.report.json", a.iteration), "application/json", a.report))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "route_not_found", "no such route")
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/grade", post(grade))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/tree", get(tree))
        .route("/sessions/{id}/preview", get(preview))
        .route("/sessions/{id}/export/cube", get(export_cube))
        .route("/sessions/{id}/export/cdl", get(export_cdl))
        .route("/sessions/{id}/export/report", get(export_report))
        .fallback(not_found)
        .with_state(engine)
}

/// Serves until Ctrl-C.
pub async fn serve(engine: Arc<Engine>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
