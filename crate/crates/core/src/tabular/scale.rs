use super::FeatureFrame;
use crate::{Error, Result};

/// Per-column mean and population standard deviation. Constant columns
/// store a deviation of 1 so they map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(frame: &FeatureFrame) -> Result<Self> {
        let x = frame.to_matrix()?;
        if x.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        let mut std = vec![0.0; x.cols()];
        for c in 0..x.cols() {
            let m = (0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / n;
            let var = (0..x.rows()).map(|r| (x.get(r, c) - m).powi(2)).sum::<f64>() / n;
            mean[c] = m;
            std[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn inverse_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = *v * s + m;
        }
    }

    pub fn transform(&self, frame: &FeatureFrame) -> Result<FeatureFrame> {
        if frame.n_cols() != self.mean.len() {
            return Err(Error::WidthMismatch { expected: self.mean.len(), actual: frame.n_cols() });
        }
        let mut x = frame.to_matrix()?;
        for r in 0..x.rows() {
            self.transform_row(x.row_mut(r));
        }
        FeatureFrame::from_matrix(frame.schema().clone(), &x, frame.labels().map(<[usize]>::to_vec))
    }
}

/// Fits on `train` and applies the same statistics to every frame in `others`.
pub fn scale_standard(train: &FeatureFrame, others: &[&FeatureFrame]) -> Result<(FeatureFrame, Vec<FeatureFrame>, StandardScaler)> {
    let scaler = StandardScaler::fit(train)?;
    let scaled_train = scaler.transform(train)?;
    let scaled = others.iter().map(|f| scaler.transform(f)).collect::<Result<_>>()?;
    Ok((scaled_train, scaled, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::FeatureSchema;

    fn col(v: &[f64]) -> FeatureFrame {
        FeatureFrame::new(FeatureSchema::numeric(1, &["a", "b"]), v.iter().map(|&x| vec![Some(x)]).collect(), None).unwrap()
    }

    #[test]
    fn one_two_three() {
        let (t, _, _) = scale_standard(&col(&[1.0, 2.0, 3.0]), &[]).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (r, e) in expect.iter().enumerate() {
            assert!((t.get(r, 0).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let (t, _, _) = scale_standard(&col(&[5.0, 5.0, 5.0]), &[]).unwrap();
        assert!((0..3).all(|r| t.get(r, 0) == Some(0.0)));
    }

    #[test]
    fn test_frame_uses_train_statistics() {
        let (_, others, s) = scale_standard(&col(&[0.0, 2.0]), &[&col(&[10.0, 12.0])]).unwrap();
        assert_eq!(s.mean, vec![1.0]);
        assert_eq!(s.std, vec![1.0]);
        assert_eq!(others[0].get(0, 0), Some(9.0));
        assert_eq!(others[0].get(1, 0), Some(11.0));
    }

    #[test]
    fn missing_cells_are_rejected() {
        let f = FeatureFrame::new(FeatureSchema::numeric(1, &["a", "b"]), vec![vec![None]], None).unwrap();
        assert!(StandardScaler::fit(&f).is_err());
    }
}
