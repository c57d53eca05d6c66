//! `POST /recommend` and `GET /health` over axum.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

use super::wire::{ErrorBody, Health, RecommendResponse};
use super::{Engine, RecommendRequest};

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/recommend", post(recommend))
        .route("/health", get(health))
        .layer(CorsLayer::permissive())
        .with_state(engine)
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    let body = Health {
        status: "ok",
        ontologies: engine.repository().len(),
    };
    json_response(
        StatusCode::OK,
        serde_json::to_string(&body).expect("serializable"),
    )
}

async fn recommend(State(engine): State<Arc<Engine>>, body: Bytes) -> Response {
    let request: RecommendRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            let body = ErrorBody {
                error: "InvalidRequest",
                message: e.to_string(),
            };
            return json_response(
                StatusCode::BAD_REQUEST,
                serde_json::to_string(&body).expect("serializable"),
            );
        }
    };
    let result = tokio::task::spawn_blocking(move || {
        engine
            .recommend(&request)
            .map(|rec| RecommendResponse::new(&engine, &rec).to_json())
            .map_err(|e| serde_json::to_string(&ErrorBody::from(&e)).expect("serializable"))
    })
    .await;
    match result {
        Ok(Ok(body)) => json_response(StatusCode::OK, body),
        Ok(Err(body)) => json_response(StatusCode::BAD_REQUEST, body),
        Err(_) => json_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            r#"{"error":"Internal","message":"request handler failed"}"#.to_string(),
        ),
    }
}

/// Binds `addr`, reports the bound address through `on_bound`, then serves
/// until the process exits.
pub async fn serve(
    engine: Arc<Engine>,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(engine)).await
}
