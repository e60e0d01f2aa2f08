//! Reference implementations written directly from the definitions, kept
//! deliberately naive. Shared by the property suite and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Exhaustive neighbour search: distances over shared observed columns,
/// rescaled by `width / shared`, ties broken by row index, column mean when
/// no donor exists.
pub fn impute_oracle(rows: &[Vec<Option<f64>>], k: usize) -> Vec<Vec<f64>> {
    let w = rows[0].len();
    rows.iter()
        .map(|row| {
            (0..w)
                .map(|c| {
                    if let Some(v) = row[c] {
                        return v;
                    }
                    let mut cands: Vec<(f64, usize, f64)> = Vec::new();
                    for (j, other) in rows.iter().enumerate() {
                        let Some(target) = other[c] else { continue };
                        let shared: Vec<f64> = (0..w)
                            .filter_map(|q| match (row[q], other[q]) {
                                (Some(a), Some(b)) => Some((a - b) * (a - b)),
                                _ => None,
                            })
                            .collect();
                        if shared.is_empty() {
                            continue;
                        }
                        let d = (shared.iter().sum::<f64>() * w as f64 / shared.len() as f64).sqrt();
                        cands.push((d, j, target));
                    }
                    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    if cands.is_empty() {
                        let obs: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
                        return obs.iter().sum::<f64>() / obs.len() as f64;
                    }
                    let take = &cands[..k.min(cands.len())];
                    take.iter().map(|t| t.2).sum::<f64>() / take.len() as f64
                })
                .collect()
        })
        .collect()
}

/// True when `x = a + u (b - a)` for some minority pair and `u` in [0, 1].
pub fn on_minority_segment(x: &[f64], minority: &[&Vec<f64>], tol: f64) -> bool {
    minority.iter().any(|a| {
        minority.iter().any(|b| {
            let (q, span) =
                (0..x.len()).map(|q| (q, (b[q] - a[q]).abs())).fold((0, -1.0), |m, c| if c.1 > m.1 { c } else { m });
            let u = if span > 0.0 { (x[q] - a[q]) / (b[q] - a[q]) } else { 0.0 };
            (-tol..=1.0 + tol).contains(&u) && (0..x.len()).all(|q| (a[q] + u * (b[q] - a[q]) - x[q]).abs() <= tol)
        })
    })
}

/// Magnitudes of the O(n^2) DFT of the mean-removed, Hann-windowed signal,
/// bins `0..=n/2`.
pub fn naive_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let win: Vec<f64> =
        (0..n).map(|i| if n == 1 { 1.0 } else { 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos() }).collect();
    let x: Vec<f64> = samples.iter().zip(&win).map(|(v, w)| (v - mean) * w).collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Worst bin error of `fast` against [`naive_spectrum`], relative to the
/// bin or, for near-empty bins, to a thousandth of the peak.
pub fn spectrum_error(fast: &[f64], samples: &[f64]) -> f64 {
    let naive = naive_spectrum(samples);
    let peak = fast.iter().cloned().fold(0.0, f64::max).max(1e-300);
    fast.iter().zip(&naive).map(|(f, n)| (f - n).abs() / n.max(peak * 1e-3)).fold(0.0, f64::max)
}

/// Dark pixels (value < 0.5) as integer points.
pub fn dark_points(img: &multidx_core::imaging::GrayImage) -> Vec<(i64, i64)> {
    (0..img.height)
        .flat_map(|y| (0..img.width).map(move |x| (x, y)))
        .filter(|&(x, y)| img.get(x, y) < 0.5)
        .map(|(x, y)| (x as i64, y as i64))
        .collect()
}

/// Point-in-polygon for a counter-clockwise convex hull, boundary inclusive.
pub fn inside_hull(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    (0..hull.len()).all(|i| {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0
    })
}

/// Largest relative gap between analytic gradients and central differences
/// over every parameter.
pub fn gradient_check(
    model: &multidx_core::cnn::CnnModel,
    x: &multidx_core::cnn::Tensor,
    label: usize,
    h: f64,
) -> f64 {
    let (_, _, grads) = model.loss_and_gradients(x, label).unwrap();
    let mut worst: f64 = 0.0;
    for (t, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = model.clone();
            plus.params_mut()[t][i] += h;
            let mut minus = model.clone();
            minus.params_mut()[t][i] -= h;
            let lp = plus.loss_and_gradients(x, label).unwrap().0;
            let lm = minus.loss_and_gradients(x, label).unwrap().0;
            let numeric = (lp - lm) / (2.0 * h);
            worst = worst.max((numeric - g[i]).abs() / numeric.abs().max(g[i].abs()).max(1e-8));
        }
    }
    worst
}
