//! Cough recordings: WAV decoding and the seven hand-crafted features.

mod wav;

pub use wav::{decode_wav, encode_wav_pcm16};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shortest clip accepted by feature extraction.
pub const MIN_SAMPLES: usize = 256;

/// Mono samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() || sample_rate == 0 {
            return Err(Error::MalformedWav("clip must be non-empty with a positive sample rate".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioFeatures {
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// `m3 / m2^1.5` with population moments.
    pub skewness: f64,
    /// Excess kurtosis, `m4 / m2^2 - 3`.
    pub kurtosis: f64,
    /// Hz.
    pub dominant_frequency: f64,
}

impl AudioFeatures {
    /// Values in the column order of the cough feature schema.
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.minimum,
            self.maximum,
            self.mean,
            self.std_dev,
            self.skewness,
            self.kurtosis,
            self.dominant_frequency,
        ]
    }
}

fn check_length(clip: &AudioClip) -> Result<()> {
    if clip.samples.len() < MIN_SAMPLES {
        return Err(Error::ClipTooShort { got: clip.samples.len(), need: MIN_SAMPLES });
    }
    Ok(())
}

pub fn extract_features(clip: &AudioClip) -> Result<AudioFeatures> {
    check_length(clip)?;
    let (skewness, kurtosis, mean, std_dev) = moments(&clip.samples);
    let minimum = clip.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let maximum = clip.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AudioFeatures {
        minimum,
        maximum,
        mean: mean.clamp(minimum, maximum),
        std_dev,
        skewness,
        kurtosis,
        dominant_frequency: dominant_frequency(clip)?,
    })
}

/// Population moments: `(skewness, excess kurtosis, mean, std)`. A constant
/// sequence has skewness and kurtosis 0.
pub fn moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 || x.iter().all(|&v| v == x[0]) {
        return (0.0, 0.0, mean, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, mean, m2.sqrt())
}

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n).map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / denom).cos())).collect()
}

/// Magnitudes of bins `0..=N/2` of the mean-removed, Hann-windowed signal.
pub fn magnitude_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> =
        samples.iter().zip(hann(n)).map(|(&v, w)| Complex::new((v - mean) * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

/// Centre frequency of the strongest bin in `1..=N/2`; ties go to the lower
/// bin. A signal without AC energy yields 0 Hz.
pub fn dominant_frequency(clip: &AudioClip) -> Result<f64> {
    check_length(clip)?;
    let x = &clip.samples;
    if x.iter().all(|&v| v == x[0]) {
        return Ok(0.0);
    }
    let n = x.len();
    let mag = magnitude_spectrum(x);
    let mut best = 1;
    for k in 2..mag.len() {
        if mag[k] > mag[best] {
            best = k;
        }
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mag[best] <= f64::EPSILON * n as f64 * peak {
        return Ok(0.0);
    }
    Ok(best as f64 * clip.sample_rate as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freqs: &[(f64, f64)], rate: u32, n: usize) -> AudioClip {
        let samples = (0..n)
            .map(|i| freqs.iter().map(|(f, a)| a * (2.0 * PI * f * i as f64 / rate as f64).sin()).sum())
            .collect();
        AudioClip::new(samples, rate).unwrap()
    }

    #[test]
    fn symmetric_samples_have_zero_skew() {
        let (s, _, mean, _) = moments(&[-1.0, 0.0, 1.0]);
        assert_eq!((mean, s), (0.0, 0.0));
    }

    #[test]
    fn two_point_kurtosis() {
        let (_, k, _, _) = moments(&[-1.0, 1.0]);
        assert!((k + 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_conventions() {
        let clip = AudioClip::new(vec![0.25; 512], 8000).unwrap();
        let f = extract_features(&clip).unwrap();
        assert_eq!((f.skewness, f.kurtosis, f.std_dev, f.dominant_frequency), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(f.mean, 0.25);
    }

    #[test]
    fn sine_peak_at_440() {
        let clip = tone(&[(440.0, 0.8)], 8000, 8000);
        let f = dominant_frequency(&clip).unwrap();
        assert!((f - 440.0).abs() <= 1.0, "{f}");
    }

    #[test]
    fn stronger_partial_wins() {
        let clip = tone(&[(300.0, 1.0), (900.0, 0.3)], 8000, 4096);
        let f = dominant_frequency(&clip).unwrap();
        assert!((f - 300.0).abs() <= 8000.0 / 4096.0, "{f}");
    }

    #[test]
    fn short_clips_are_rejected() {
        let clip = AudioClip::new(vec![0.1; 255], 8000).unwrap();
        assert!(matches!(extract_features(&clip), Err(Error::ClipTooShort { got: 255, need: 256 })));
    }

    #[test]
    fn hann_is_symmetric_with_zero_ends() {
        let w = hann(9);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        for i in 0..9 {
            assert!((w[i] - w[8 - i]).abs() < 1e-15);
        }
    }
}
