use rand::Rng as _;

use super::FeatureFrame;
use crate::matrix::squared_distance;
use crate::{rng, Error, Matrix, Result};

/// Oversamples every class below the majority count with SMOTE.
///
/// Each synthetic row is `x + u * (x_nn - x)`: `x` a uniformly drawn row of
/// the class, `x_nn` one of its `k` nearest same-class neighbours, `u` in
/// `[0, 1)`. Original rows come first, verbatim; synthetic rows follow,
/// grouped by class in ascending class order.
pub fn smote_balance(frame: &FeatureFrame, k: usize, seed: u64) -> Result<FeatureFrame> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let labels = frame.require_labels()?;
    let x = frame.to_matrix()?;
    let counts = frame.class_counts()?;
    let target = counts.iter().copied().max().unwrap_or(0);
    if counts.iter().all(|&c| c == target) {
        return Ok(frame.clone());
    }

    let mut out = frame.clone();
    for (class, &count) in counts.iter().enumerate() {
        if count == target {
            continue;
        }
        if count < 2 {
            return Err(Error::InsufficientMinority { class, count });
        }
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let minority = x.select_rows(&members);
        let neighbours = nearest_within(&minority, k.min(count - 1));

        let need = target - count;
        let mut rng = rng::stream(seed, class as u64);
        let mut synthetic = Matrix::zeros(0, x.cols());
        for _ in 0..need {
            let i = rng.random_range(0..count);
            let nn = neighbours[i][rng.random_range(0..neighbours[i].len())];
            let u: f64 = rng.random();
            let (a, b) = (minority.row(i), minority.row(nn));
            let row: Vec<f64> = a.iter().zip(b).map(|(&a, &b)| a + u * (b - a)).collect();
            synthetic.push_row(&row);
        }
        out.append_rows(&synthetic, &vec![class; need]);
    }
    Ok(out)
}

/// `k` nearest other rows for every row; ties go to the lower index.
fn nearest_within(m: &Matrix, k: usize) -> Vec<Vec<usize>> {
    (0..m.rows())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..m.rows())
                .filter(|&j| j != i)
                .map(|j| (squared_distance(m.row(i), m.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::FeatureSchema;

    fn frame(rows: &[[f64; 2]], labels: &[usize]) -> FeatureFrame {
        let rows = rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
        FeatureFrame::new(FeatureSchema::numeric(2, &["maj", "min"]), rows, Some(labels.to_vec())).unwrap()
    }

    #[test]
    fn balanced_frame_is_unchanged() {
        let f = frame(&[[0.0, 0.0], [1.0, 1.0]], &[0, 1]);
        assert_eq!(smote_balance(&f, 5, 1).unwrap(), f);
    }

    #[test]
    fn synthetic_points_lie_on_the_segment() {
        let mut rows = vec![[5.0, -5.0]; 6];
        rows.push([0.0, 0.0]);
        rows.push([1.0, 1.0]);
        let labels = [0, 0, 0, 0, 0, 0, 1, 1];
        let out = smote_balance(&frame(&rows, &labels), 1, 9).unwrap();
        assert_eq!(out.class_counts().unwrap(), vec![6, 6]);
        for r in 8..out.n_rows() {
            let (a, b) = (out.get(r, 0).unwrap(), out.get(r, 1).unwrap());
            assert_eq!(a, b);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn counts_are_equalised_and_originals_kept() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push([i as f64, 0.0]);
            labels.push(0);
        }
        for i in 0..4 {
            rows.push([i as f64, 10.0 + i as f64]);
            labels.push(1);
        }
        let f = frame(&rows, &labels);
        let out = smote_balance(&f, 5, 3).unwrap();
        assert_eq!(out.class_counts().unwrap(), vec![10, 10]);
        for r in 0..f.n_rows() {
            assert_eq!(out.row(r), f.row(r));
        }
    }

    #[test]
    fn single_minority_sample_errors() {
        let f = frame(&[[0.0, 0.0], [1.0, 0.0], [2.0, 2.0]], &[0, 0, 1]);
        assert!(matches!(smote_balance(&f, 5, 0), Err(Error::InsufficientMinority { class: 1, count: 1 })));
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let f = frame(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 3.0], [4.0, 5.0]], &[0, 0, 0, 1, 1]);
        assert_eq!(smote_balance(&f, 5, 42).unwrap(), smote_balance(&f, 5, 42).unwrap());
    }
}
