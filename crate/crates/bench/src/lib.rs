//! Shared inputs for the benchmarks in `benches/`.

use multidx_core::cnn::Tensor;
use multidx_core::synthetic::overlapping_gaussians;
use multidx_core::Matrix;

/// Two overlapping Gaussian classes, `n` rows by `d` columns.
pub fn gaussians(n: usize, d: usize) -> (Matrix, Vec<usize>) {
    overlapping_gaussians(n, d, 1.0, 7)
}

/// A deterministic single-channel `side x side` input.
pub fn image_tensor(side: usize) -> Tensor {
    let data = (0..side * side).map(|i| ((i * 37 % 101) as f64) / 100.0).collect();
    Tensor::new(vec![side, side, 1], data).expect("square tensor")
}
