//! Seeded synthetic datasets for demos, benchmarks and tests, shaped like
//! the inputs of each diagnostic mode.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::{encode_wav_pcm16, AudioClip};
use crate::imaging::{encode_png, rasterize_spectrum, GrayImage, SpectralRecord};
use crate::modelstore::ModelArtifact;
use crate::pipeline::{
    features_frame_from_clips, train_raman, train_report_images, train_tabular, ImageSample, LabeledClip, ModeInput,
    TabularOptions, VisionOptions,
};
use crate::presets::{InputKind, Mode, Preset};
use crate::tabular::{FeatureFrame, FeatureKind, FeatureSchema};
use crate::{rng, Matrix, Result};

/// Two unit-variance Gaussian classes in `d` dimensions whose means differ
/// by `separation` along every axis. Labels alternate 0, 1, 0, ...
pub fn overlapping_gaussians(n: usize, d: usize, separation: f64, seed: u64) -> (Matrix, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let mut x = Matrix::zeros(n, d);
    let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    for (i, &label) in y.iter().enumerate() {
        for c in 0..d {
            let z: f64 = StandardNormal.sample(&mut r);
            x.set(i, c, z + separation * label as f64);
        }
    }
    (x, y)
}

/// A labelled frame with the preset's feature columns. Binary presets get
/// 0/1 flags whose rates depend on the class; numeric presets get shifted
/// Gaussians. Roughly one in three rows is positive.
pub fn tabular_frame(preset: &Preset, n: usize, seed: u64) -> FeatureFrame {
    let mut r = rng::seeded(seed);
    let binary = preset.mode == Mode::Symptoms;
    let width = preset.features.len();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = usize::from(i % 3 == 0);
        let row = (0..width)
            .map(|c| {
                let informative = c % 2 == 0;
                if binary {
                    let rate = if informative && y == 1 { 0.8 } else { 0.25 };
                    Some(f64::from(u8::from(r.random_bool(rate))))
                } else {
                    let z: f64 = StandardNormal.sample(&mut r);
                    let shift = if informative { 1.5 * y as f64 } else { 0.0 };
                    Some(50.0 + 10.0 * (z + shift))
                }
            })
            .collect();
        rows.push(row);
        labels.push(y);
    }
    let kind = if binary { FeatureKind::Binary } else { FeatureKind::Numeric };
    let schema = FeatureSchema::new(
        preset.features.iter().map(|s| s.to_string()).collect(),
        vec![kind; width],
        "label",
        preset.class_names(),
    )
    .expect("preset schema is valid");
    FeatureFrame::new(schema, rows, Some(labels)).expect("rectangular rows")
}

/// `secs` of a sine at `freq` Hz.
pub fn tone(freq: f64, sample_rate: u32, secs: f64, amplitude: f64) -> Vec<f64> {
    let n = (sample_rate as f64 * secs).round() as usize;
    (0..n).map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / sample_rate as f64).sin()).collect()
}

/// Short noisy tones: class 0 centred near 300 Hz, class 1 near 900 Hz.
pub fn cough_clips(n: usize, seed: u64) -> Vec<LabeledClip> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let freq = if label == 0 { 300.0 } else { 900.0 } + r.random_range(-40.0..40.0);
            let amp = r.random_range(0.3..0.9);
            let samples: Vec<f64> = tone(freq, 8000, 0.25, amp)
                .into_iter()
                .map(|v| (v + 0.05 * { let z: f64 = StandardNormal.sample(&mut r); z }).clamp(-1.0, 1.0))
                .collect();
            LabeledClip { name: format!("clip{i:03}.wav"), clip: AudioClip::new(samples, 8000).expect("valid clip"), label }
        })
        .collect()
}

/// Spectra of length `len` with one Gaussian peak, early for class 0 and
/// late for class 1.
pub fn spectra(n: usize, len: usize, seed: u64) -> Vec<SpectralRecord> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let centre = len as f64 * if label == 0 { 0.3 } else { 0.7 } + r.random_range(-2.0..2.0);
            let width = len as f64 / 20.0;
            let intensities = (0..len)
                .map(|j| {
                    let d = (j as f64 - centre) / width;
                    1000.0 * (-d * d).exp() + 20.0 * r.random::<f64>()
                })
                .collect();
            SpectralRecord { intensities, label: Some(label) }
        })
        .collect()
}

/// Report-like scans: a light grid on white with a dark trace, a smooth
/// wave for class 0 and a spiky one for class 1.
pub fn report_images(n: usize, width: usize, height: usize, seed: u64) -> Vec<ImageSample> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let mut img = GrayImage::filled(width, height, 1.0);
            for y in (0..height).step_by(8) {
                (0..width).for_each(|x| img.set(x, y, 0.85));
            }
            for x in (0..width).step_by(8) {
                (0..height).for_each(|y| img.set(x, y, 0.85));
            }
            let phase = r.random_range(0.0..std::f64::consts::TAU);
            let margin = width / 8;
            let mid = height as f64 / 2.0;
            let amp = height as f64 / 4.0;
            let mut prev: Option<usize> = None;
            for x in margin..width - margin {
                let t = x as f64 / 6.0 + phase;
                let v = if label == 0 { t.sin() } else if (x / 5) % 4 == 0 { 1.0 } else { -0.2 };
                let y = (mid - amp * v).round().clamp(0.0, (height - 1) as f64) as usize;
                let (a, b) = prev.map_or((y, y), |p| (p.min(y), p.max(y)));
                (a..=b).for_each(|yy| img.set(x, yy, 0.05));
                prev = Some(y);
            }
            ImageSample { name: format!("scan{i:03}.png"), image: img, label }
        })
        .collect()
}

/// Side used by [`demo_artifact`] for image modes.
pub const DEMO_SIDE: usize = 16;

/// Trains a small but complete artifact for `mode` on synthetic data.
/// Forest sizes, image side and epochs are reduced so this runs in well
/// under a second per mode.
pub fn demo_artifact(mode: Mode, seed: u64) -> Result<ModelArtifact> {
    let preset = mode.preset();
    let tab = TabularOptions { seed, forest_trees: Some(12), ..TabularOptions::default() };
    let vis = VisionOptions { seed, epochs: 2, batch_size: 8, resolution: Some(DEMO_SIDE), ..VisionOptions::default() };
    let out = match mode.input_kind() {
        InputKind::Tabular => train_tabular(preset, &tabular_frame(preset, 60, seed), &tab)?,
        InputKind::Audio => {
            let frame = features_frame_from_clips(&cough_clips(40, seed), &preset.class_names())?;
            train_tabular(preset, &frame, &tab)?
        }
        InputKind::Image if mode == Mode::Raman => train_raman(preset, &spectra(30, 120, seed), &preset.class_names(), &vis)?,
        InputKind::Image => train_report_images(preset, &report_images(30, 48, 40, seed), &preset.class_names(), &vis)?,
    };
    Ok(out.artifact)
}

/// A valid prediction input for `mode`, in decoded form.
pub fn demo_input(mode: Mode, seed: u64) -> ModeInput {
    let preset = mode.preset();
    match mode.input_kind() {
        InputKind::Tabular => {
            let frame = tabular_frame(preset, 1, seed);
            let fields: BTreeMap<String, Option<f64>> =
                preset.features.iter().zip(frame.row(0)).map(|(n, v)| (n.to_string(), *v)).collect();
            ModeInput::Fields(fields)
        }
        InputKind::Audio => ModeInput::Wav(encode_wav_pcm16(&tone(440.0, 8000, 1.0, 0.5), 8000)),
        InputKind::Image if mode == Mode::Raman => {
            let img = rasterize_spectrum(&spectra(1, 120, seed)[0].intensities, 64).expect("valid spectrum");
            ModeInput::Png(encode_png(&img).expect("encodable"))
        }
        InputKind::Image => ModeInput::Png(encode_png(&report_images(1, 96, 80, seed)[0].image).expect("encodable")),
    }
}
