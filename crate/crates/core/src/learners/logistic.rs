use super::BinaryScorer;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    /// L2 penalty on the weights; the intercept is not penalised.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the largest absolute gradient entry falls below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { l2: 1.0, max_iter: 10_000, tol: 1e-6 }
    }
}

/// Binary logistic regression fitted by full-batch gradient descent on
/// `sum(log-loss) + l2/2 * |w|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn fit(x: &Matrix, target: &[bool], p: &LogisticParams) -> Self {
        let d = x.cols();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut lipschitz = 0.25 * gram_spectral_bound(x) + p.l2;
        let mut grad = vec![0.0; d + 1];
        let mut obj = objective(x, target, &w, b, p.l2, &mut grad);
        let mut iterations = 0;
        while iterations < p.max_iter {
            if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < p.tol {
                break;
            }
            iterations += 1;
            loop {
                let step = 1.0 / lipschitz;
                let w_new: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
                let b_new = b - step * grad[d];
                let mut g_new = vec![0.0; d + 1];
                let obj_new = objective(x, target, &w_new, b_new, p.l2, &mut g_new);
                if obj_new <= obj || lipschitz > 1e12 {
                    w = w_new;
                    b = b_new;
                    grad = g_new;
                    obj = obj_new;
                    break;
                }
                lipschitz *= 2.0;
            }
        }
        Self { weights: w, intercept: b, iterations }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl BinaryScorer for LogisticModel {
    fn positive_probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

/// Objective value; writes the gradient (weights then intercept) into `grad`.
fn objective(x: &Matrix, t: &[bool], w: &[f64], b: f64, l2: f64, grad: &mut [f64]) -> f64 {
    let d = w.len();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (r, &ti) in t.iter().enumerate() {
        let row = x.row(r);
        let z = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
        loss += if ti { softplus(-z) } else { softplus(z) };
        let e = sigmoid(z) - if ti { 1.0 } else { 0.0 };
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += e * v;
        }
        grad[d] += e;
    }
    for (g, wi) in grad[..d].iter_mut().zip(w) {
        *g += l2 * wi;
    }
    loss + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Power-iteration estimate of the largest eigenvalue of `[X 1]^T [X 1]`.
fn gram_spectral_bound(x: &Matrix) -> f64 {
    let d = x.cols() + 1;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut out = vec![0.0; d];
        for r in 0..x.rows() {
            let row = x.row(r);
            let xv = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d - 1];
            for (o, a) in out.iter_mut().zip(row) {
                *o += xv * a;
            }
            out[d - 1] += xv;
        }
        let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = out.into_iter().map(|a| a / norm).collect();
    }
    lambda
}
