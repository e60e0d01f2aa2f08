//! Spectrum rasterization and report-image preprocessing.

mod hull;
mod png;

pub use hull::{convex_hull, convex_hull_crop};
pub use png::{decode_png, encode_png, read_png, write_png};

use crate::{Error, Result};

/// Row-major grayscale image with intensities in `[0, 1]`; 0 is black.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::Image(format!("{width}x{height} image needs {} pixels, got {}", width * height, pixels.len())));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    /// Inclusive crop `[x0, x1] x [y0, y1]`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> GrayImage {
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..=y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..=y * self.width + x1]);
        }
        GrayImage { width: w, height: h, pixels }
    }
}

/// One spectrum: intensity per wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRecord {
    pub intensities: Vec<f64>,
    pub label: Option<usize>,
}

/// Smallest accepted raster side.
pub const MIN_RESOLUTION: usize = 16;

/// Draws the spectrum as a black one-pixel polyline on white.
///
/// Intensities are min-max normalised (a constant spectrum sits at 0.5),
/// linearly resampled to `resolution` columns and mapped to row
/// `round((1 - v) * (resolution - 1))`, so larger values are higher up.
/// Each column is filled vertically towards the previous column's row so
/// the trace stays connected.
pub fn rasterize_spectrum(intensities: &[f64], resolution: usize) -> Result<GrayImage> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!("resolution {resolution} is below {MIN_RESOLUTION}")));
    }
    if intensities.is_empty() || intensities.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("spectrum must be non-empty and finite".into()));
    }
    let lo = intensities.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = intensities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm: Vec<f64> =
        intensities.iter().map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }).collect();
    let len = norm.len();
    let last = (resolution - 1) as f64;
    let rows: Vec<usize> = (0..resolution)
        .map(|c| {
            let t = if len == 1 { 0.0 } else { c as f64 * (len - 1) as f64 / last };
            let i = (t.floor() as usize).min(len - 1);
            let frac = t - i as f64;
            let v = if i + 1 < len { norm[i] + frac * (norm[i + 1] - norm[i]) } else { norm[i] };
            // Snapping to a 1e-9 grid maps values that differ only by rounding error to one row.
            let y = ((1.0 - v) * last * 1e9).round() / 1e9;
            y.round().clamp(0.0, last) as usize
        })
        .collect();
    let mut img = GrayImage::filled(resolution, resolution, 1.0);
    for c in 0..resolution {
        let (a, b) = if c == 0 { (rows[0], rows[0]) } else { (rows[c - 1].min(rows[c]), rows[c - 1].max(rows[c])) };
        for r in a..=b {
            img.set(c, r, 0.0);
        }
    }
    Ok(img)
}

fn level(v: f64) -> usize {
    (v.clamp(0.0, 1.0) * 255.0).round() as usize
}

/// Otsu threshold over a 256-level histogram: the lowest level `t`
/// maximising the between-class variance of `{<= t}` and `{> t}`. `None`
/// when every pixel falls in one level.
pub fn otsu_threshold(img: &GrayImage) -> Option<usize> {
    let mut hist = [0u64; 256];
    for &p in &img.pixels {
        hist[level(p)] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total = img.pixels.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0);
    for (t, &c) in hist.iter().enumerate().take(255) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best.0 {
            best = (between, t);
        }
    }
    Some(best.1)
}

/// Otsu binarization: levels at or below the threshold become foreground
/// (0), the rest background (1). A single-level image is all background.
pub fn binarize(img: &GrayImage) -> GrayImage {
    let pixels = match otsu_threshold(img) {
        None => vec![1.0; img.pixels.len()],
        Some(t) => img.pixels.iter().map(|&p| if level(p) <= t { 0.0 } else { 1.0 }).collect(),
    };
    GrayImage { width: img.width, height: img.height, pixels }
}

/// Bilinear resampling with pixel centres aligned; same-size input is
/// returned unchanged.
pub fn resize(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 || img.width == 0 || img.height == 0 {
        return Err(Error::Image("resize needs non-empty dimensions".into()));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let axis = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let i = s.floor() as usize;
                let j = (i + 1).min(src - 1);
                (i, j, s - i as f64)
            })
            .collect()
    };
    let xs = axis(width, img.width);
    let ys = axis(height, img.height);
    let mut pixels = Vec::with_capacity(width * height);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
            let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
            pixels.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(GrayImage { width, height, pixels })
}

/// Report-image preprocessing: binarize, crop to the trace region and
/// resize to `side x side`.
pub fn preprocess_report(img: &GrayImage, side: usize) -> Result<GrayImage> {
    let binary = binarize(img);
    let cropped = convex_hull_crop(&binary)?;
    resize(&cropped, side, side)
}
