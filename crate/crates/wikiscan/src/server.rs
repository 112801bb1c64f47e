//! HTTP service over a [`Scanner`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::Error;
use crate::scanner::{Scanner, DEFAULT_SEARCH_LIMIT};

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    use wikiscan_core::Error as C;
    match e {
        Error::UnknownTitle(_) => StatusCode::NOT_FOUND,
        Error::Fetch { .. } | Error::Schema { .. } => StatusCode::BAD_GATEWAY,
        Error::Core(C::InvalidArgument(_) | C::Empty(_)) => StatusCode::BAD_REQUEST,
        Error::Core(C::MissingField { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_of(&self.0);
        let body = json!({
            "error": self.0.to_string(),
            "retryable": matches!(self.0, Error::Fetch { .. }),
        });
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<Scanner>>;

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    q: String,
    limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct ScanRequest {
    title: String,
}

async fn health(State(s): Shared) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "model_id": s.model_id(), "titles": s.titles() }))
}

async fn search(State(s): Shared, Query(p): Query<SearchParams>) -> Result<Response, ApiError> {
    let hits = s.search(&p.q, p.limit.unwrap_or(DEFAULT_SEARCH_LIMIT))?;
    Ok(Json(hits).into_response())
}

async fn metadata(State(s): Shared, Path(title): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(s.article(&title).await?).into_response())
}

async fn scan(State(s): Shared, Json(req): Json<ScanRequest>) -> Result<Response, ApiError> {
    Ok(Json(s.scan(&req.title).await?).into_response())
}

async fn model(State(s): Shared) -> Response {
    Json(s.model_info()).into_response()
}

pub fn router(scanner: Arc<Scanner>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", get(search))
        .route("/article/{title}/metadata", get(metadata))
        .route("/scan", post(scan))
        .route("/model", get(model))
        .with_state(scanner)
}

/// Serves until Ctrl-C.
pub async fn serve(scanner: Arc<Scanner>, addr: SocketAddr) -> crate::error::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::config(format!("bind {addr}: {e}")))?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(|e| Error::config(e.to_string()))?);
    axum::serve(listener, router(scanner))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::config(format!("server: {e}")))
}
