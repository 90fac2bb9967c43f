use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::cors::{Any, CorsLayer};

use crate::api::{ApiError, ErrorBody, Limits};
use crate::ops;

/// One route, and the command-line subcommand offering the same operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub method: &'static str,
    pub path: &'static str,
    pub command: Option<&'static str>,
}

pub const ENDPOINTS: &[Endpoint] = &[
    Endpoint { method: "POST", path: "/api/analyze", command: Some("analyze") },
    Endpoint { method: "POST", path: "/api/bm", command: Some("bm") },
    Endpoint { method: "POST", path: "/api/predictive", command: Some("predictive") },
    Endpoint { method: "POST", path: "/api/leaderboard", command: Some("leaderboard") },
    Endpoint { method: "POST", path: "/api/samplesize", command: Some("samplesize") },
    Endpoint { method: "GET", path: "/api/health", command: None },
];

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub limits: Limits,
    /// Origin allowed for cross-origin calls, or `*` for any. Same-origin
    /// only when absent.
    pub allow_origin: Option<String>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(ErrorBody { error: self })).into_response()
    }
}

type Op<Req, Resp> = fn(Req, &Limits) -> Result<Resp, ApiError>;

async fn run<Req, Resp>(limits: Arc<Limits>, body: Bytes, op: Op<Req, Resp>) -> Response
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
{
    let req: Req = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return ApiError::bad_body(e).into_response(),
    };
    match tokio::task::spawn_blocking(move || op(req, &limits)).await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, "InternalError", e.to_string()).into_response(),
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

fn cors(origin: &str) -> Result<CorsLayer, ApiError> {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origin == "*" {
        return Ok(layer.allow_origin(Any));
    }
    let value = HeaderValue::from_str(origin)
        .map_err(|_| ApiError::new(400, "InvalidArgument", format!("bad origin `{origin}`")))?;
    Ok(layer.allow_origin(value))
}

pub fn router(config: ServiceConfig) -> Result<Router, ApiError> {
    let limits = Arc::new(config.limits);
    let app = Router::new()
        .route("/api/health", get(health))
        .route(
            "/api/analyze",
            post(|State(l): State<Arc<Limits>>, b: Bytes| run(l, b, ops::analyze)),
        )
        .route("/api/bm", post(|State(l): State<Arc<Limits>>, b: Bytes| run(l, b, ops::bm)))
        .route(
            "/api/predictive",
            post(|State(l): State<Arc<Limits>>, b: Bytes| run(l, b, ops::predictive)),
        )
        .route(
            "/api/leaderboard",
            post(|State(l): State<Arc<Limits>>, b: Bytes| run(l, b, ops::leaderboard)),
        )
        .route(
            "/api/samplesize",
            post(|State(l): State<Arc<Limits>>, b: Bytes| run(l, b, ops::samplesize)),
        )
        .with_state(limits);
    Ok(match config.allow_origin.as_deref() {
        Some(origin) => app.layer(cors(origin)?),
        None => app,
    })
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let app = router(config).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
