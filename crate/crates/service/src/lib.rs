//! JSON inference service over a directory of `.mdx` artifacts.
//!
//! Endpoints:
//! * `POST /v1/predict/{mode}` runs one prediction.
//! * `GET /v1/health` reports loaded modes and their versions.
//! * `GET /v1/models` describes the inputs each loaded mode expects.
//!
//! Every response uses the envelope `{"ok", "result", "error"}`.

mod api;
mod http;
mod registry;

pub use api::{
    decode_base64, handle_predict, health, models, parse_inputs, Envelope, HealthReport, ModelDescription,
    ModelSummary, ServiceError,
};
pub use http::{router, serve, shutdown_signal, Config, MAX_BODY_BYTES};
pub use registry::{Registry, RegistryError};
