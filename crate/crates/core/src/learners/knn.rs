use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    /// Minkowski exponent; 2 is Euclidean.
    pub p: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5, p: 2.0 }
    }
}

/// Stores the training set; the probability of a class is its share among
/// the `k` nearest training rows. Distance ties go to the lower row index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub params: KnnParams,
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[usize], _n_classes: usize, p: &KnnParams) -> Result<Self> {
        if p.k == 0 || !(p.p >= 1.0) {
            return Err(Error::InvalidInput("knn needs k >= 1 and p >= 1".into()));
        }
        Ok(Self { params: p.clone(), x: x.clone(), y: y.to_vec() })
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let p = self.params.p;
        if p == 2.0 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
        } else {
            a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum()
        }
    }

    pub(super) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        let mut d: Vec<(f64, usize)> = (0..self.x.rows()).map(|i| (self.distance(row, self.x.row(i)), i)).collect();
        let k = self.params.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(_, i) in &d[..k] {
            out[self.y[i]] += 1.0;
        }
        out.iter_mut().for_each(|v| *v /= k as f64);
    }
}
