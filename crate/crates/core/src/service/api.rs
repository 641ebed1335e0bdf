//! HTTP routes under `/api`. Handlers run the blocking work on the tokio
//! blocking pool.

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{export_puzzle, ExportFormat, KeywordsRequest, PairUpdate, Service, ServiceError, TextRequest};
use crate::schema::GenerationConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{code}: {self}");
        }
        (status, Json(ErrorBody { error_code: code.to_string(), message: self.to_string() })).into_response()
    }
}

#[derive(Debug, Default, Deserialize)]
struct GenerateBody {
    #[serde(default)]
    config: GenerationConfig,
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn blocking<T, F>(service: Arc<Service>, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

/// Turns a body rejection into the service's error shape.
fn body<T>(payload: Result<Json<T>, axum::extract::rejection::JsonRejection>) -> Result<T, ServiceError> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::InvalidRequest(e.body_text()))
}

async fn text_pipeline(
    State(service): State<Arc<Service>>,
    payload: Result<Json<TextRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ServiceError> {
    let request = body(payload)?;
    let session = blocking(service, move |s| s.text_session(&request)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn keyword_pipeline(
    State(service): State<Arc<Service>>,
    payload: Result<Json<KeywordsRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ServiceError> {
    let request = body(payload)?;
    let session = blocking(service, move |s| s.keyword_session(&request)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(service, move |s| s.session(&id)).await?))
}

async fn patch_pair(
    State(service): State<Arc<Service>>,
    Path((id, pair_id)): Path<(String, String)>,
    payload: Result<Json<PairUpdate>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ServiceError> {
    let update = body(payload)?;
    Ok(Json(blocking(service, move |s| s.update_pair(&id, &pair_id, &update)).await?))
}

async fn generate(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    payload: Option<Json<GenerateBody>>,
) -> Result<impl IntoResponse, ServiceError> {
    let config = payload.map(|Json(b)| b.config).unwrap_or_default();
    config.validate()?;
    let result = blocking(service, move |s| s.generate(&id, &config)).await?;
    Ok((StatusCode::CREATED, Json(result)))
}

async fn get_puzzle(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    Query(query): Query<FormatQuery>,
) -> Result<Response, ServiceError> {
    let format: ExportFormat = query.format.as_deref().unwrap_or("json").parse()?;
    let stored = blocking(service, move |s| s.puzzle(&id)).await?;
    let content_type = match format {
        ExportFormat::Json => "application/json",
        ExportFormat::Text => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], export_puzzle(&stored.puzzle, format)).into_response())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/pipeline/text", post(text_pipeline))
        .route("/api/pipeline/keywords", post(keyword_pipeline))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/pairs/{pair_id}", patch(patch_pair))
        .route("/api/sessions/{id}/generate", post(generate))
        .route("/api/puzzles/{id}", get(get_puzzle))
        .with_state(service)
}

pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
