use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesParams {
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { var_floor: 1e-9 }
    }
}

/// Gaussian naive Bayes with per-class population variances and empirical
/// priors. Classes absent from training get probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub priors: Vec<f64>,
    /// `means[c]`, `variances[c]`: per-feature statistics of class `c`.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl NaiveBayesModel {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, p: &NaiveBayesParams) -> Self {
        let d = x.cols();
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; d]; n_classes];
        for (r, &c) in y.iter().enumerate() {
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            if n > 0 {
                m.iter_mut().for_each(|v| *v /= n as f64);
            }
        }
        let mut variances = vec![vec![0.0; d]; n_classes];
        for (r, &c) in y.iter().enumerate() {
            for ((s, v), m) in variances[c].iter_mut().zip(x.row(r)).zip(&means[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, &n) in variances.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v = (*v / n.max(1) as f64).max(p.var_floor));
        }
        let total = y.len() as f64;
        let priors = counts.iter().map(|&n| n as f64 / total).collect();
        Self { priors, means, variances }
    }

    pub(super) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = if self.priors[c] == 0.0 {
                f64::NEG_INFINITY
            } else {
                let ll: f64 = row
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s))
                    .sum();
                self.priors[c].ln() + ll
            };
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.iter_mut().for_each(|v| *v = (*v - max).exp());
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_classes_give_even_odds_at_midpoint() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [0.0], [1.0], [2.0], [3.0]]);
        let y = vec![0, 0, 0, 1, 1, 1];
        let m = NaiveBayesModel::fit(&x, &y, 2, &NaiveBayesParams::default());
        let mut out = [0.0; 2];
        m.proba_row(&[0.5], &mut out);
        assert!((out[0] - 0.5).abs() < 1e-12 && (out[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn statistics_match_hand_values() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [10.0, 0.0]]);
        let m = NaiveBayesModel::fit(&x, &[0, 0, 1], 2, &NaiveBayesParams::default());
        assert_eq!(m.means[0], vec![2.0, 5.0]);
        assert_eq!(m.variances[0], vec![1.0, 1e-9]);
        assert!((m.priors[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn far_points_are_not_nan() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]);
        let m = NaiveBayesModel::fit(&x, &[0, 0, 1, 1], 2, &NaiveBayesParams::default());
        let mut out = [0.0; 2];
        m.proba_row(&[1e6], &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
        assert_eq!(out, [0.0, 1.0]);
    }
}
