use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use multidx_core::modelstore::Preprocessing;
use multidx_core::pipeline::{predict_result, ModeInput, PredictionResult};
use multidx_core::presets::InputKind;
use multidx_core::Mode;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::registry::Registry;

/// Uniform response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub ok: bool,
    pub result: Option<T>,
    pub error: Option<String>,
}

impl<T> Envelope<T> {
    pub fn success(result: T) -> Self {
        Self { ok: true, result: Some(result), error: None }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        Self { ok: false, result: None, error: Some(error.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("no model loaded for mode {0}")]
    NotLoaded(Mode),
    #[error("request body exceeds {0} bytes")]
    TooLarge(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownMode(_) | ServiceError::BadRequest(_) => 400,
            ServiceError::TooLarge(_) => 413,
            ServiceError::NotLoaded(_) => 503,
            ServiceError::Internal(_) => 500,
        }
    }
}

impl From<multidx_core::Error> for ServiceError {
    fn from(e: multidx_core::Error) -> Self {
        if e.is_data_error() {
            ServiceError::BadRequest(e.to_string())
        } else {
            ServiceError::Internal(e.to_string())
        }
    }
}

/// Standard-alphabet base64 with mandatory padding.
pub fn decode_base64(text: &str) -> Result<Vec<u8>, ServiceError> {
    STANDARD.decode(text).map_err(|e| ServiceError::BadRequest(format!("invalid base64: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictRequest {
    #[serde(default)]
    mode: Option<String>,
    inputs: Map<String, Value>,
}

/// Decodes the `inputs` object of a request for `mode`.
pub fn parse_inputs(mode: Mode, inputs: &Map<String, Value>) -> Result<ModeInput, ServiceError> {
    match mode.input_kind() {
        InputKind::Tabular => {
            let mut fields = BTreeMap::new();
            for (name, value) in inputs {
                let v = match value {
                    Value::Null => None,
                    Value::Bool(b) => Some(f64::from(u8::from(*b))),
                    Value::Number(n) => Some(n.as_f64().ok_or_else(|| bad(format!("field {name:?} is out of range")))?),
                    _ => return Err(bad(format!("field {name:?} must be a number, boolean or null"))),
                };
                fields.insert(name.clone(), v);
            }
            Ok(ModeInput::Fields(fields))
        }
        InputKind::Audio => Ok(ModeInput::Wav(single_blob(inputs, "wav_base64")?)),
        InputKind::Image => Ok(ModeInput::Png(single_blob(inputs, "png_base64")?)),
    }
}

fn single_blob(inputs: &Map<String, Value>, key: &str) -> Result<Vec<u8>, ServiceError> {
    if let Some(extra) = inputs.keys().find(|k| *k != key) {
        return Err(bad(format!("unexpected field(s): {extra} (expected only {key})")));
    }
    match inputs.get(key) {
        Some(Value::String(text)) => decode_base64(text),
        Some(_) => Err(bad(format!("field {key:?} must be a base64 string"))),
        None => Err(bad(format!("missing field(s): {key}"))),
    }
}

fn bad(msg: impl Into<String>) -> ServiceError {
    ServiceError::BadRequest(msg.into())
}

/// Runs one prediction. `mode` is the path segment and `body` the raw JSON
/// request body.
pub fn handle_predict(registry: &Registry, mode: &str, body: &[u8]) -> Result<PredictionResult, ServiceError> {
    let mode: Mode = mode.parse().map_err(|_| ServiceError::UnknownMode(mode.to_string()))?;
    let request: PredictRequest =
        serde_json::from_slice(body).map_err(|e| bad(format!("invalid request body: {e}")))?;
    if let Some(named) = &request.mode {
        if named != mode.as_str() {
            return Err(bad(format!("body mode {named:?} does not match path mode {mode}")));
        }
    }
    let model = registry.get(mode).ok_or(ServiceError::NotLoaded(mode))?;
    let input = parse_inputs(mode, &request.inputs)?;
    Ok(predict_result(model, &input)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub mode: Mode,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    /// `"ok"` with at least one model loaded, otherwise `"degraded"`.
    pub status: String,
    pub models: Vec<ModelSummary>,
}

pub fn health(registry: &Registry) -> HealthReport {
    let status = if registry.is_empty() { "degraded" } else { "ok" };
    HealthReport {
        status: status.into(),
        models: registry.iter().map(|(mode, m)| ModelSummary { mode, version: m.version() }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescription {
    pub mode: Mode,
    pub preset: String,
    pub version: String,
    /// `"fields"`, `"wav"` or `"png"`.
    pub input: String,
    /// Keys expected inside `inputs`.
    pub fields: Vec<String>,
    pub class_names: Vec<String>,
    /// Image side the network consumes, for image modes.
    pub image_side: Option<usize>,
}

pub fn models(registry: &Registry) -> Vec<ModelDescription> {
    registry
        .iter()
        .map(|(mode, m)| {
            let (input, fields) = match mode.input_kind() {
                InputKind::Tabular => match &m.artifact.preprocessing {
                    Preprocessing::Tabular(state) => ("fields", state.schema.feature_names.clone()),
                    Preprocessing::Image { .. } => ("fields", Vec::new()),
                },
                InputKind::Audio => ("wav", vec!["wav_base64".to_string()]),
                InputKind::Image => ("png", vec!["png_base64".to_string()]),
            };
            let image_side = match m.artifact.preprocessing {
                Preprocessing::Image { side, .. } => Some(side),
                Preprocessing::Tabular(_) => None,
            };
            ModelDescription {
                mode,
                preset: m.artifact.preset_id.clone(),
                version: m.version(),
                input: input.into(),
                fields,
                class_names: m.artifact.class_names.clone(),
                image_side,
            }
        })
        .collect()
}
