use super::FeatureFrame;
use crate::{Error, Matrix, Result};

/// Pearson correlation between every pair of columns, with the label
/// appended as a final pseudo-column when the frame is labeled. Returns the
/// column names alongside the matrix. Constant columns correlate 0 with
/// everything except themselves.
pub fn pearson_matrix(frame: &FeatureFrame) -> Result<(Vec<String>, Matrix)> {
    let n = frame.n_rows();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(n));
    }
    let x = frame.to_matrix()?;
    let mut names = frame.schema().feature_names.clone();
    let mut columns: Vec<Vec<f64>> = (0..x.cols()).map(|c| x.column(c)).collect();
    if let Some(labels) = frame.labels() {
        names.push(frame.schema().label_name.clone());
        columns.push(labels.iter().map(|&l| l as f64).collect());
    }

    let centred: Vec<(Vec<f64>, f64)> = columns
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n as f64;
            let d: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            (d, norm)
        })
        .collect();

    let p = columns.len();
    let mut r = Matrix::zeros(p, p);
    for i in 0..p {
        r.set(i, i, 1.0);
        for j in (i + 1)..p {
            let (a, na) = &centred[i];
            let (b, nb) = &centred[j];
            let v = if *na == 0.0 || *nb == 0.0 {
                0.0
            } else {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot / (na * nb)).clamp(-1.0, 1.0)
            };
            r.set(i, j, v);
            r.set(j, i, v);
        }
    }
    Ok((names, r))
}
