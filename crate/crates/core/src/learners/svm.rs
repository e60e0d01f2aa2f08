use super::BinaryScorer;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / (n_features * variance of all training values)`.
    pub gamma: Option<f64>,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    /// Memory budget for cached kernel rows.
    pub cache_bytes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, gamma: None, tol: 1e-3, cache_bytes: 256 << 20 }
    }
}

/// RBF-kernel SVM with a sigmoid probability map fitted on the training
/// decision values.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    pub support_vectors: Matrix,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    /// Probability of the positive class is `1 / (1 + exp(a * f + b))`.
    pub platt_a: f64,
    pub platt_b: f64,
}

pub(crate) fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * crate::matrix::squared_distance(a, b)).exp()
}

fn scale_gamma(x: &Matrix) -> f64 {
    let v = x.as_slice();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.cols() as f64 * var)
    } else {
        1.0
    }
}

impl SvmModel {
    pub fn fit(x: &Matrix, target: &[bool], p: &SvmParams) -> Self {
        let gamma = p.gamma.unwrap_or_else(|| scale_gamma(x));
        let y: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { -1.0 }).collect();
        let sol = Smo::new(x, &y, gamma, p).solve();
        let sv: Vec<usize> = (0..x.rows()).filter(|&i| sol.alpha[i] > 0.0).collect();
        let mut model = Self {
            gamma,
            support_vectors: x.select_rows(&sv),
            dual_coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            rho: sol.rho,
            platt_a: 0.0,
            platt_b: 0.0,
        };
        let dec: Vec<f64> = (0..x.rows()).map(|i| model.decision(x.row(i))).collect();
        (model.platt_a, model.platt_b) = platt(&dec, target);
        model
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, row))
            .sum::<f64>()
            - self.rho
    }
}

impl BinaryScorer for SvmModel {
    fn positive_probability(&self, row: &[f64]) -> f64 {
        sigmoid_pair(self.decision(row) * self.platt_a + self.platt_b)
    }
}

/// `1 / (1 + exp(z))`, stable for large `|z|`.
fn sigmoid_pair(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
}

const TAU: f64 = 1e-12;

/// Sequential minimal optimisation with second-order working-set selection.
struct Smo<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    gamma: f64,
    c: f64,
    tol: f64,
    cache: RowCache,
}

impl<'a> Smo<'a> {
    fn new(x: &'a Matrix, y: &'a [f64], gamma: f64, p: &SvmParams) -> Self {
        let rows = (p.cache_bytes / (8 * x.rows().max(1))).max(2);
        Self { x, y, gamma, c: p.c, tol: p.tol, cache: RowCache::new(x.rows(), rows) }
    }

    /// Row `i` of `Q = y y^T * K`.
    fn q_row(&mut self, i: usize) -> std::rc::Rc<Vec<f64>> {
        let (x, y, gamma) = (self.x, self.y, self.gamma);
        self.cache.get(i, || (0..x.rows()).map(|k| y[i] * y[k] * rbf(gamma, x.row(i), x.row(k))).collect())
    }

    fn solve(mut self) -> Solution {
        let n = self.x.rows();
        let c = self.c;
        let y = self.y;
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let max_iter = 10_000_000usize.max(100 * n);
        let upper = |a: f64| a >= c;
        let lower = |a: f64| a <= 0.0;

        for _ in 0..max_iter {
            // First index: maximal violation among the "up" set.
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = None;
            for t in 0..n {
                let v = if y[t] > 0.0 {
                    (!upper(alpha[t])).then_some(-grad[t])
                } else {
                    (!lower(alpha[t])).then_some(grad[t])
                };
                if let Some(v) = v {
                    if v >= gmax {
                        gmax = v;
                        i_sel = Some(t);
                    }
                }
            }
            let Some(i) = i_sel else { break };
            let qi = self.q_row(i);
            // Second index: largest guaranteed objective decrease.
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j_sel = None;
            let mut best = f64::INFINITY;
            for t in 0..n {
                let (eligible, v) = if y[t] > 0.0 { (!lower(alpha[t]), grad[t]) } else { (!upper(alpha[t]), -grad[t]) };
                if !eligible {
                    continue;
                }
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = 2.0 - 2.0 * y[i] * y[t] * qi[t];
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(diff * diff) / quad;
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
            if gmax + gmax2 < self.tol {
                break;
            }
            let Some(j) = j_sel else { break };
            let qj = self.q_row(j);

            let (ai_old, aj_old) = (alpha[i], alpha[j]);
            if y[i] != y[j] {
                let quad = (2.0 + 2.0 * qi[j]).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = (2.0 - 2.0 * qi[j]).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
            for k in 0..n {
                grad[k] += qi[k] * di + qj[k] * dj;
            }
        }

        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if upper(alpha[t]) {
                if y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if lower(alpha[t]) {
                if y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
        Solution { alpha, rho }
    }
}

/// Kernel rows kept under a row-count budget, evicting the least recently used.
struct RowCache {
    rows: Vec<Option<std::rc::Rc<Vec<f64>>>>,
    last_use: Vec<u64>,
    clock: u64,
    held: usize,
    capacity: usize,
}

impl RowCache {
    fn new(n: usize, capacity: usize) -> Self {
        Self { rows: vec![None; n], last_use: vec![0; n], clock: 0, held: 0, capacity }
    }

    fn get(&mut self, i: usize, compute: impl FnOnce() -> Vec<f64>) -> std::rc::Rc<Vec<f64>> {
        self.clock += 1;
        self.last_use[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        if self.held >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some() && k != i)
                .min_by_key(|&k| self.last_use[k])
                .expect("cache holds rows");
            self.rows[victim] = None;
            self.held -= 1;
        }
        let r = std::rc::Rc::new(compute());
        self.rows[i] = Some(r.clone());
        self.held += 1;
        r
    }
}

/// Sigmoid fit by Newton's method with backtracking on regularised targets.
fn platt(dec: &[f64], target: &[bool]) -> (f64, f64) {
    let prior1 = target.iter().filter(|&&t| t).count() as f64;
    let prior0 = target.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = target.iter().map(|&b| if b { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                (a, b, fval) = (na, nb, nf);
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::*;

    fn targets(y: &[usize]) -> Vec<bool> {
        y.iter().map(|&l| l == 1).collect()
    }

    #[test]
    fn xor_is_separated() {
        let (x, y) = xor();
        let m = SvmModel::fit(&x, &targets(&y), &SvmParams::default());
        for (r, &l) in y.iter().enumerate() {
            assert_eq!(m.decision(x.row(r)) > 0.0, l == 1);
            assert_eq!(m.positive_probability(x.row(r)) > 0.5, l == 1);
        }
    }

    #[test]
    fn dual_is_feasible() {
        let (x, y) = blobs(50, 0.4, 6);
        let p = SvmParams::default();
        let m = SvmModel::fit(&x, &targets(&y), &p);
        assert!(m.dual_coef.iter().all(|c| c.abs() <= p.c + 1e-12 && c.abs() > 0.0));
        assert!(m.dual_coef.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn tiny_cache_matches_full_cache() {
        let (x, y) = blobs(40, 0.5, 7);
        let full = SvmModel::fit(&x, &targets(&y), &SvmParams::default());
        let tiny = SvmModel::fit(&x, &targets(&y), &SvmParams { cache_bytes: 0, ..SvmParams::default() });
        assert_eq!(full, tiny);
    }

    #[test]
    fn gamma_scale_rule() {
        let x = Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]);
        assert_eq!(scale_gamma(&x), 0.5);
        assert_eq!(scale_gamma(&Matrix::from_rows(&[[3.0], [3.0]])), 1.0);
    }

    #[test]
    fn platt_maps_positive_margin_to_high_probability() {
        let dec = [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0];
        let t = [false, false, false, true, true, true];
        let (a, b) = platt(&dec, &t);
        assert!(a < 0.0 && b.abs() < 1e-9);
    }
}
