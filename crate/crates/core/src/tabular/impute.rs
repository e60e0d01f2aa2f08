use rayon::prelude::*;

use super::FeatureFrame;
use crate::{Error, Result};

/// KNN imputer holding the donor rows it was fitted on.
///
/// A missing cell `(r, c)` becomes the mean of column `c` over the `k`
/// donors nearest to row `r`. Donors must observe column `c` and share at
/// least one observed coordinate with `r`. Distance is the nan-aware
/// Euclidean distance: squared differences over mutually observed
/// coordinates, scaled by `width / observed`, then square-rooted. Ties go to
/// the lower donor index. When no donor qualifies the column mean of the
/// donor set is used instead.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnImputer {
    k: usize,
    width: usize,
    donors: Vec<Option<f64>>,
    column_means: Vec<Option<f64>>,
}

impl KnnImputer {
    pub fn fit(frame: &FeatureFrame, k: usize) -> Result<Self> {
        let width = frame.n_cols();
        let donors: Vec<Option<f64>> = (0..frame.n_rows()).flat_map(|r| frame.row(r).iter().copied()).collect();
        Self::from_donors(k, width, donors)
    }

    pub(crate) fn from_donors(k: usize, width: usize, donors: Vec<Option<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let n = if width == 0 { 0 } else { donors.len() / width };
        let column_means = (0..width)
            .map(|c| {
                let (sum, cnt) = (0..n)
                    .filter_map(|r| donors[r * width + c])
                    .fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
                (cnt > 0).then(|| sum / cnt as f64)
            })
            .collect();
        Ok(Self { k, width, donors, column_means })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn donors(&self) -> &[Option<f64>] {
        &self.donors
    }

    fn n_donors(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.donors.len() / self.width
        }
    }

    fn donor(&self, j: usize) -> &[Option<f64>] {
        &self.donors[j * self.width..(j + 1) * self.width]
    }

    /// Imputes one row in place.
    pub fn impute_row(&self, row: &mut [Option<f64>], row_index: usize) -> Result<()> {
        if row.len() != self.width {
            return Err(Error::WidthMismatch { expected: self.width, actual: row.len() });
        }
        if row.iter().all(Option::is_some) {
            return Ok(());
        }
        if row.iter().all(Option::is_none) {
            return Err(Error::RowUnimputable(row_index));
        }
        // (distance, donor index) for donors sharing an observed coordinate
        let mut dist: Vec<(f64, usize)> = Vec::new();
        for j in 0..self.n_donors() {
            let d = self.donor(j);
            let (mut sq, mut shared) = (0.0, 0usize);
            for (a, b) in row.iter().zip(d) {
                if let (Some(a), Some(b)) = (a, b) {
                    sq += (a - b) * (a - b);
                    shared += 1;
                }
            }
            if shared > 0 {
                dist.push(((sq * self.width as f64 / shared as f64).sqrt(), j));
            }
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for c in 0..self.width {
            if row[c].is_some() {
                continue;
            }
            let (sum, cnt) = dist
                .iter()
                .filter_map(|&(_, j)| self.donors[j * self.width + c])
                .take(self.k)
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            row[c] = if cnt > 0 {
                Some(sum / cnt as f64)
            } else {
                Some(self.column_means[c].ok_or_else(|| {
                    Error::InvalidInput(format!("column {c} has no observed donor values"))
                })?)
            };
        }
        Ok(())
    }

    pub fn transform(&self, frame: &FeatureFrame) -> Result<FeatureFrame> {
        if frame.n_cols() != self.width {
            return Err(Error::WidthMismatch { expected: self.width, actual: frame.n_cols() });
        }
        if !frame.has_missing() {
            return Ok(frame.clone());
        }
        let rows: Vec<Vec<Option<f64>>> = (0..frame.n_rows())
            .into_par_iter()
            .map(|r| {
                let mut row = frame.row(r).to_vec();
                self.impute_row(&mut row, r).map(|_| row)
            })
            .collect::<Result<_>>()?;
        let values = rows.into_iter().flatten().collect();
        let levels = (0..frame.n_cols()).map(|c| frame.levels(c).to_vec()).collect();
        Ok(FeatureFrame::from_parts(frame.schema().clone(), values, frame.labels().map(<[usize]>::to_vec))?.with_levels(levels))
    }
}

/// Fits the imputer on `frame` and fills its own missing cells.
pub fn impute_knn(frame: &FeatureFrame, k: usize) -> Result<FeatureFrame> {
    KnnImputer::fit(frame, k)?.transform(frame)
}
