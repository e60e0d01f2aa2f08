use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::api::{handle_predict, health, models, Envelope, ServiceError};
use crate::registry::Registry;

pub const MAX_BODY_BYTES: usize = 20 * 1024 * 1024;

/// Runtime settings, usually read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub port: u16,
    pub model_dir: Option<PathBuf>,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { port: 8080, model_dir: None, cors_origin: None }
    }
}

impl Config {
    /// Reads `MULTIDX_PORT`, `MULTIDX_MODEL_DIR` and `MULTIDX_CORS_ORIGIN`.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let port = match lookup("MULTIDX_PORT") {
            Some(p) => p.trim().parse().map_err(|_| format!("MULTIDX_PORT is not a port number: {p:?}"))?,
            None => 8080,
        };
        Ok(Self {
            port,
            model_dir: lookup("MULTIDX_MODEL_DIR").filter(|s| !s.is_empty()).map(PathBuf::from),
            cors_origin: lookup("MULTIDX_CORS_ORIGIN").filter(|s| !s.is_empty()),
        })
    }
}

fn reply<T: Serialize>(result: Result<T, ServiceError>) -> Response {
    match result {
        Ok(v) => (StatusCode::OK, Json(Envelope::success(v))).into_response(),
        Err(e) => {
            let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, Json(Envelope::<()>::failure(e.to_string()))).into_response()
        }
    }
}

async fn predict_route(
    State(registry): State<Arc<Registry>>,
    Path(mode): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> Response {
    let body = match body {
        Ok(b) => b,
        Err(rejection) if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return reply::<()>(Err(ServiceError::TooLarge(MAX_BODY_BYTES)))
        }
        Err(rejection) => return reply::<()>(Err(ServiceError::BadRequest(rejection.body_text()))),
    };
    let outcome = tokio::task::spawn_blocking(move || handle_predict(&registry, &mode, &body)).await;
    reply(outcome.unwrap_or_else(|e| Err(ServiceError::Internal(e.to_string()))))
}

async fn health_route(State(registry): State<Arc<Registry>>) -> Response {
    reply(Ok(health(&registry)))
}

async fn models_route(State(registry): State<Arc<Registry>>) -> Response {
    reply(Ok(models(&registry)))
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(Envelope::<()>::failure("no such endpoint"))).into_response()
}

/// The full HTTP application.
pub fn router(registry: Arc<Registry>, cors_origin: Option<&str>) -> Router {
    let origin = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(v) => AllowOrigin::exact(v),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/v1/predict/{mode}", post(predict_route))
        .route("/v1/health", get(health_route))
        .route("/v1/models", get(models_route))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors)
        .with_state(registry)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
