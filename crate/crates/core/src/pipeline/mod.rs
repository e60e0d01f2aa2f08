//! End-to-end experiment pipelines: preprocessing, training, evaluation and
//! inference on stored artifacts.

mod data;
mod tabular;
mod vision;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use data::{load_audio_dir, load_image_dir, read_spectra_csv, ImageSample, LabeledClip};
pub use tabular::{features_frame_from_clips, train_tabular, TabularOptions};
pub use vision::{train_cnn, train_raman, train_report_images, VisionOptions};

use crate::audio::{decode_wav, extract_features};
use crate::cnn::{History, Tensor};
use crate::imaging::{decode_png, preprocess_report, rasterize_spectrum, resize, GrayImage};
use crate::matrix::argmax;
use crate::metrics::MetricsReport;
use crate::modelstore::{ImagePipeline, LoadedModel, ModelArtifact, Payload, Preprocessing, TabularState};
use crate::presets::{InputKind, Mode};
use crate::tabular::{FeatureFrame, FeatureKind, FeatureSchema};
use crate::{Error, Matrix, Result};

/// Decision threshold on the positive-class probability.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerScore {
    pub learner: String,
    pub metrics: MetricsReport,
}

/// Held-out metrics of one training run: every base learner followed by the
/// deployed model (`Stacked` or `CNN`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub mode: Mode,
    pub resolution: Option<usize>,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub rows: Vec<LearnerScore>,
}

impl ExperimentReport {
    /// Metrics of the deployed model.
    pub fn model_metrics(&self) -> &MetricsReport {
        &self.rows.last().expect("at least one row").metrics
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub report: ExperimentReport,
    /// Per-epoch history for network-based modes.
    pub history: Option<History>,
}

/// A single prediction request, already decoded from its transport form.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeInput {
    /// Named fields; `None` marks a missing value to be imputed.
    Fields(BTreeMap<String, Option<f64>>),
    Wav(Vec<u8>),
    Png(Vec<u8>),
    /// Raw spectrum, rasterized at the model's resolution.
    Spectrum(Vec<f64>),
}

/// Class probabilities for one input.
pub fn predict(artifact: &ModelArtifact, input: &ModeInput) -> Result<Vec<f64>> {
    let kind = artifact.mode.input_kind();
    match (&artifact.preprocessing, &artifact.payload, input) {
        (Preprocessing::Tabular(state), Payload::Stack(model), ModeInput::Fields(fields)) if kind == InputKind::Tabular => {
            let row = ordered_fields(&state.schema, fields)?;
            let x = tabular_row(state, &row)?;
            Ok(model.predict_proba_dense(&x)?.row(0).to_vec())
        }
        (Preprocessing::Tabular(state), Payload::Stack(model), ModeInput::Wav(bytes)) if kind == InputKind::Audio => {
            let features = extract_features(&decode_wav(bytes)?)?.to_vec();
            let row: Vec<Option<f64>> = features.into_iter().map(Some).collect();
            let x = tabular_row(state, &row)?;
            Ok(model.predict_proba_dense(&x)?.row(0).to_vec())
        }
        (Preprocessing::Image { side, pipeline }, Payload::Cnn(model), ModeInput::Png(bytes)) => {
            let img = prepare_image(&decode_png(bytes)?, *side, *pipeline)?;
            model.forward(&Tensor::from_image(&img))
        }
        (Preprocessing::Image { side, .. }, Payload::Cnn(model), ModeInput::Spectrum(values)) if artifact.mode == Mode::Raman => {
            model.forward(&Tensor::from_image(&rasterize_spectrum(values, *side)?))
        }
        _ => Err(Error::InvalidInput(format!("input kind does not match mode {}", artifact.mode))),
    }
}

/// Brings an incoming image to the network's input size.
pub fn prepare_image(img: &GrayImage, side: usize, pipeline: ImagePipeline) -> Result<GrayImage> {
    match pipeline {
        ImagePipeline::Resize => resize(img, side, side),
        ImagePipeline::Report => preprocess_report(img, side),
    }
}

/// Values in schema order. Every schema key is required and no others are
/// accepted; binary fields must be 0 or 1.
fn ordered_fields(schema: &FeatureSchema, fields: &BTreeMap<String, Option<f64>>) -> Result<Vec<Option<f64>>> {
    let names = &schema.feature_names;
    let missing: Vec<&str> = names.iter().filter(|n| !fields.contains_key(*n)).map(String::as_str).collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing field(s): {}", missing.join(", "))));
    }
    let extra: Vec<&str> = fields.keys().filter(|k| !names.contains(k)).map(String::as_str).collect();
    if !extra.is_empty() {
        return Err(Error::Schema(format!("unexpected field(s): {}", extra.join(", "))));
    }
    names
        .iter()
        .zip(&schema.feature_kinds)
        .map(|(n, kind)| match fields[n] {
            Some(v) if !v.is_finite() => Err(Error::Schema(format!("field {n:?} is not a finite number"))),
            Some(v) if *kind == FeatureKind::Binary && v != 0.0 && v != 1.0 => {
                Err(Error::Schema(format!("field {n:?} must be 0 or 1, got {v}")))
            }
            v => Ok(v),
        })
        .collect()
}

/// Replays the stored encoder, imputer and scaler on one raw row.
fn tabular_row(state: &TabularState, row: &[Option<f64>]) -> Result<Matrix> {
    let schema = state.schema.clone();
    let frame = FeatureFrame::new(schema, vec![row.to_vec()], None)?;
    let encoded = state.encoder.transform(&frame)?;
    let mut values = encoded.row(0).to_vec();
    if values.iter().any(Option::is_none) {
        match &state.imputer {
            Some(imputer) => imputer.impute_row(&mut values, 0)?,
            None => {
                let names = &state.encoder.output_schema().feature_names;
                let gaps: Vec<&str> =
                    values.iter().zip(names).filter(|(v, _)| v.is_none()).map(|(_, n)| n.as_str()).collect();
                return Err(Error::MissingValues(gaps.join(", ")));
            }
        }
    }
    let mut dense: Vec<f64> = values.into_iter().map(|v| v.expect("imputed")).collect();
    state.scaler.transform_row(&mut dense);
    Ok(Matrix::from_vec(1, dense.len(), dense))
}

/// Wire form of a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub mode: Mode,
    pub probability_positive: f64,
    pub label: String,
    pub model_version: String,
    pub latency_ms: f64,
}

/// Outcome label: positive iff `p >= 0.5`.
pub fn label_for(mode: Mode, probability_positive: f64) -> &'static str {
    let (negative, positive) = mode.outcome_labels();
    if probability_positive >= DECISION_THRESHOLD {
        positive
    } else {
        negative
    }
}

/// Runs inference and wraps the positive-class probability (class index 1).
pub fn predict_result(model: &LoadedModel, input: &ModeInput) -> Result<PredictionResult> {
    let start = Instant::now();
    let probs = predict(&model.artifact, input)?;
    let p = probs.get(1).copied().unwrap_or(0.0);
    let mode = model.artifact.mode;
    Ok(PredictionResult {
        mode,
        probability_positive: p,
        label: label_for(mode, p).to_string(),
        model_version: model.version(),
        latency_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Predicted class for every row of a probability matrix.
pub(crate) fn argmax_rows(p: &Matrix) -> Vec<usize> {
    (0..p.rows()).map(|r| argmax(p.row(r))).collect()
}
