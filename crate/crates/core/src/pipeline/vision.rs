use rayon::prelude::*;

use super::{ExperimentReport, ImageSample, LearnerScore, TrainOutcome};
use crate::cnn::{default_architecture, train, AdamConfig, CnnModel, Tensor, TrainConfig};
use crate::imaging::{preprocess_report, rasterize_spectrum, GrayImage, SpectralRecord};
use crate::matrix::argmax;
use crate::metrics::evaluate;
use crate::modelstore::{ImagePipeline, ModelArtifact, Payload, Preprocessing};
use crate::presets::{Preset, PresetModel};
use crate::tabular::{split_indices, SplitSpec};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisionOptions {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Image side; the preset default when `None`.
    pub resolution: Option<usize>,
}

impl Default for VisionOptions {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self { seed: 0, epochs: t.epochs, batch_size: t.batch_size, learning_rate: t.adam.learning_rate, resolution: None }
    }
}

fn side_for(preset: &Preset, opts: &VisionOptions) -> Result<usize> {
    opts.resolution
        .or(preset.resolution)
        .ok_or_else(|| Error::InvalidInput(format!("{} has no image resolution", preset.id)))
}

/// Rasterizes every spectrum at the chosen side and trains the CNN.
pub fn train_raman(
    preset: &Preset,
    records: &[SpectralRecord],
    class_names: &[String],
    opts: &VisionOptions,
) -> Result<TrainOutcome> {
    let side = side_for(preset, opts)?;
    let images: Vec<GrayImage> =
        records.par_iter().map(|r| rasterize_spectrum(&r.intensities, side)).collect::<Result<_>>()?;
    let labels: Vec<usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.label.ok_or_else(|| Error::Schema(format!("spectrum {i} has no label"))))
        .collect::<Result<_>>()?;
    train_cnn(preset, &images, &labels, class_names, ImagePipeline::Resize, opts)
}

/// Binarizes, hull-crops and resizes report scans, then trains the CNN.
pub fn train_report_images(
    preset: &Preset,
    samples: &[ImageSample],
    class_names: &[String],
    opts: &VisionOptions,
) -> Result<TrainOutcome> {
    let side = side_for(preset, opts)?;
    let images: Vec<GrayImage> = samples
        .par_iter()
        .map(|s| preprocess_report(&s.image, side).map_err(|e| Error::InvalidInput(format!("{}: {e}", s.name))))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    train_cnn(preset, &images, &labels, class_names, ImagePipeline::Report, opts)
}

/// Trains the default CNN on square, preprocessed images with a stratified
/// train/validation/test split, keeping the best-validation parameters.
pub fn train_cnn(
    preset: &Preset,
    images: &[GrayImage],
    labels: &[usize],
    class_names: &[String],
    pipeline: ImagePipeline,
    opts: &VisionOptions,
) -> Result<TrainOutcome> {
    if preset.model != PresetModel::Cnn {
        return Err(Error::InvalidInput(format!("{} is not a CNN preset", preset.id)));
    }
    if images.len() != labels.len() {
        return Err(Error::LengthMismatch(images.len(), labels.len()));
    }
    let side = side_for(preset, opts)?;
    if let Some(bad) = images.iter().position(|i| i.width != side || i.height != side) {
        return Err(Error::InvalidInput(format!("image {bad} is not {side}x{side}")));
    }
    let k = class_names.len();
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::Schema("label outside the class list".into()));
    }
    let spec = SplitSpec::three_way(preset.train_fraction, preset.validation_fraction, rng::derive(opts.seed, 1));
    let idx = split_indices(labels, k, spec)?;
    let pick = |ix: &[usize]| -> (Vec<Tensor>, Vec<usize>) {
        (ix.iter().map(|&i| Tensor::from_image(&images[i])).collect(), ix.iter().map(|&i| labels[i]).collect())
    };
    let (xt, yt) = pick(&idx.train);
    let (xv, yv) = pick(&idx.validation);
    let (xs, ys) = pick(&idx.test);

    let model = CnnModel::new([side, side, 1], &default_architecture(k), rng::derive(opts.seed, 4))?;
    let config = TrainConfig {
        epochs: opts.epochs,
        batch_size: opts.batch_size,
        adam: AdamConfig { learning_rate: opts.learning_rate, ..AdamConfig::default() },
        seed: rng::derive(opts.seed, 5),
    };
    let validation = (!xv.is_empty()).then_some((xv.as_slice(), yv.as_slice()));
    let (model, history) = train(model, &xt, &yt, validation, &config)?;

    let pred: Vec<usize> = xs.par_iter().map(|x| model.forward(x).map(|p| argmax(&p))).collect::<Result<_>>()?;
    let report = ExperimentReport {
        experiment: preset.id.into(),
        mode: preset.mode,
        resolution: Some(side),
        n_train: xt.len(),
        n_validation: xv.len(),
        n_test: xs.len(),
        rows: vec![LearnerScore { learner: "CNN".into(), metrics: evaluate(&ys, &pred, 1)? }],
    };
    let artifact = ModelArtifact {
        mode: preset.mode,
        preset_id: preset.id.into(),
        class_names: class_names.to_vec(),
        preprocessing: Preprocessing::Image { side, pipeline },
        payload: Payload::Cnn(model),
    };
    Ok(TrainOutcome { artifact, report, history: Some(history) })
}
