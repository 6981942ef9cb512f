use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::Value;
use tower::limit::ConcurrencyLimitLayer;

use super::{parse_body, AddDocumentRequest, CreateCorpusRequest, Service, ServiceError};

const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

fn reply((status, body): (u16, Value)) -> Response {
    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(body)).into_response()
}

fn created(result: Result<Value, ServiceError>) -> Response {
    match result {
        Ok(v) => reply((201, v)),
        Err(e) => reply((e.status, e.body())),
    }
}

async fn blocking<F>(f: F) -> Response
where
    F: FnOnce() -> Response + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|_| reply((500, ServiceError::new(500, "internal", "handler panicked").body())))
}

async fn health(State(svc): State<Arc<Service>>) -> Response {
    reply((200, svc.health()))
}

async fn list_corpora(State(svc): State<Arc<Service>>) -> Response {
    reply((200, svc.list_corpora()))
}

async fn create_corpus(State(svc): State<Arc<Service>>, body: Bytes) -> Response {
    created(parse_body::<CreateCorpusRequest>(&body).and_then(|req| svc.create_corpus(&req)))
}

async fn add_document(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> Response {
    blocking(move || {
        created(
            parse_body::<AddDocumentRequest>(&body)
                .and_then(|req| svc.add_document(&id, req))
                .map(|r| serde_json::to_value(r).expect("report serializes")),
        )
    })
    .await
}

async fn query(State(svc): State<Arc<Service>>, body: Bytes) -> Response {
    blocking(move || reply(svc.handle_query_json(&body))).await
}

/// Routes under `/v1`, at most `max_concurrent` requests in flight.
pub fn router(service: Arc<Service>, max_concurrent: usize) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/corpora", get(list_corpora).post(create_corpus))
        .route("/v1/corpora/:id/documents", post(add_document))
        .route("/v1/query", post(query))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(ConcurrencyLimitLayer::new(max_concurrent.max(1)))
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<Service>, addr: SocketAddr, max_concurrent: usize) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service, max_concurrent))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

