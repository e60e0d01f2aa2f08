//! Two-layer stacked generalization.
//!
//! The meta-learner is trained on out-of-fold base probabilities: the
//! training rows are split into stratified, seeded folds; for each fold the
//! bases are fitted on the other folds and predict the held-out rows. The
//! bases are then refitted on the full training set for inference.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::learners::{self, LearnerKind, LearnerSpec, TrainedLearner};
use crate::tabular::FeatureFrame;
use crate::{matrix, rng, Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub base_specs: Vec<LearnerSpec>,
    pub meta_spec: LearnerSpec,
    pub folds: usize,
    pub seed: u64,
}

impl StackSpec {
    /// Default hyperparameters for every learner; base `i` is seeded with
    /// a stream derived from `(seed, i)`.
    pub fn new(bases: &[LearnerKind], meta: LearnerKind, seed: u64) -> Self {
        let base_specs =
            bases.iter().enumerate().map(|(i, &k)| LearnerSpec::new(k, rng::derive(seed, i as u64))).collect();
        let meta_spec = LearnerSpec::new(meta, rng::derive(seed, bases.len() as u64));
        Self { base_specs, meta_spec, folds: 5, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub bases: Vec<TrainedLearner>,
    pub meta: TrainedLearner,
    pub n_features: usize,
    pub n_classes: usize,
}

impl StackedModel {
    pub fn meta_feature_width(&self) -> usize {
        meta_width(self.bases.len(), self.n_classes)
    }

    /// Base probabilities arranged as meta-learner input.
    pub fn meta_features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features && x.rows() > 0 {
            return Err(Error::WidthMismatch { expected: self.n_features, actual: x.cols() });
        }
        let mut out = Matrix::zeros(x.rows(), self.meta_feature_width());
        for (b, base) in self.bases.iter().enumerate() {
            let p = base.predict_proba_dense(x)?;
            write_meta_columns(&mut out, b, &p, |r| r);
        }
        Ok(out)
    }

    pub fn predict_proba_dense(&self, x: &Matrix) -> Result<Matrix> {
        self.meta.predict_proba_dense(&self.meta_features(x)?)
    }

    /// Meta probabilities and their argmax labels.
    pub fn predict_dense(&self, x: &Matrix) -> Result<(Matrix, Vec<usize>)> {
        let p = self.predict_proba_dense(x)?;
        let labels = p.iter_rows().map(matrix::argmax).collect();
        Ok((p, labels))
    }
}

/// Columns per base: the positive-class probability for binary tasks,
/// classes `1..k` otherwise.
fn meta_width(bases: usize, classes: usize) -> usize {
    bases * (classes - 1)
}

fn write_meta_columns(out: &mut Matrix, base: usize, proba: &Matrix, dest_row: impl Fn(usize) -> usize) {
    let per = proba.cols() - 1;
    for r in 0..proba.rows() {
        let row = out.row_mut(dest_row(r));
        row[base * per..(base + 1) * per].copy_from_slice(&proba.row(r)[1..]);
    }
}

/// Stratified fold index for every row. Each class is shuffled with its own
/// stream and dealt round-robin, continuing where the previous class ended.
pub fn fold_assignment(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng::stream(seed, 1_000 + c as u64));
        for i in members {
            fold[i] = next % folds;
            next += 1;
        }
    }
    fold
}

fn fit_base(index: usize, spec: &LearnerSpec, x: &Matrix, y: &[usize], n_classes: usize) -> Result<TrainedLearner> {
    learners::fit_dense(spec, x, y, n_classes).map_err(|e| Error::BaseLearner { index, source: Box::new(e) })
}

/// Out-of-fold meta-feature matrix: exactly one prediction per training row.
pub fn out_of_fold(spec: &StackSpec, x: &Matrix, y: &[usize], n_classes: usize) -> Result<Matrix> {
    if spec.folds < 2 || spec.folds > y.len() {
        return Err(Error::InvalidInput(format!("folds must lie in 2..={}", y.len())));
    }
    let assign = fold_assignment(y, n_classes, spec.folds, spec.seed);
    let per_fold: Vec<(Vec<usize>, Vec<Matrix>)> = (0..spec.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| assign[i] != f).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| assign[i] == f).collect();
            let xt = x.select_rows(&train);
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let xh = x.select_rows(&held);
            let probas = spec
                .base_specs
                .iter()
                .enumerate()
                .map(|(b, s)| fit_base(b, s, &xt, &yt, n_classes)?.predict_proba_dense(&xh))
                .collect::<Result<Vec<_>>>()?;
            Ok((held, probas))
        })
        .collect::<Result<_>>()?;
    let mut oof = Matrix::zeros(y.len(), meta_width(spec.base_specs.len(), n_classes));
    for (held, probas) in &per_fold {
        for (b, p) in probas.iter().enumerate() {
            write_meta_columns(&mut oof, b, p, |r| held[r]);
        }
    }
    Ok(oof)
}

pub fn fit_stack_dense(spec: &StackSpec, x: &Matrix, y: &[usize], n_classes: usize) -> Result<StackedModel> {
    if spec.base_specs.len() < 2 {
        return Err(Error::InvalidInput("a stack needs at least two base learners".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch(x.rows(), y.len()));
    }
    let oof = out_of_fold(spec, x, y, n_classes)?;
    let meta = learners::fit_dense(&spec.meta_spec, &oof, y, n_classes)?;
    let bases = spec
        .base_specs
        .par_iter()
        .enumerate()
        .map(|(b, s)| fit_base(b, s, x, y, n_classes))
        .collect::<Result<Vec<_>>>()?;
    Ok(StackedModel { bases, meta, n_features: x.cols(), n_classes })
}

pub fn fit_stack(spec: &StackSpec, train: &FeatureFrame) -> Result<StackedModel> {
    fit_stack_dense(spec, &train.to_matrix()?, train.require_labels()?, train.n_classes())
}

pub fn predict_stack(model: &StackedModel, rows: &FeatureFrame) -> Result<(Matrix, Vec<usize>)> {
    if rows.n_cols() != model.n_features {
        return Err(Error::WidthMismatch { expected: model.n_features, actual: rows.n_cols() });
    }
    model.predict_dense(&rows.to_matrix()?)
}
