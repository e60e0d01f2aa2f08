//! Confusion-matrix statistics for a chosen positive class.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Accuracy, precision, recall and F1. `None` marks a metric whose
/// denominator is zero; it serializes as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn confusion(labels_true: &[usize], labels_pred: &[usize], positive_class: usize) -> Result<ConfusionMatrix> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::LengthMismatch(labels_true.len(), labels_pred.len()));
    }
    if labels_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in labels_true.iter().zip(labels_pred) {
        match (t == positive_class, p == positive_class) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let accuracy = ratio(cm.tp + cm.tn, cm.total());
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricsReport { accuracy, precision, recall, f1 }
}

/// [`confusion`] followed by [`compute_metrics`].
pub fn evaluate(labels_true: &[usize], labels_pred: &[usize], positive_class: usize) -> Result<MetricsReport> {
    Ok(compute_metrics(&confusion(labels_true, labels_pred, positive_class)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_tally() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1], 1).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
    }

    #[test]
    fn perfect_prediction_has_no_errors() {
        let cm = confusion(&[0, 1, 1, 0, 1], &[0, 1, 1, 0, 1], 1).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
    }

    #[test]
    fn bad_lengths() {
        assert!(confusion(&[], &[], 1).is_err());
        assert!(matches!(confusion(&[1], &[1, 0], 1), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn worked_example() {
        let m = compute_metrics(&ConfusionMatrix::new(3, 5, 1, 1));
        assert_eq!(m.accuracy, Some(0.8));
        assert_eq!(m.precision, Some(0.75));
        assert_eq!(m.recall, Some(0.75));
        assert_eq!(m.f1, Some(0.75));
    }

    #[test]
    fn perfect_classifier() {
        let m = compute_metrics(&ConfusionMatrix::new(7, 0, 0, 0));
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn undefined_precision_is_flagged() {
        let m = compute_metrics(&ConfusionMatrix::new(0, 4, 0, 2));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
    }
}
