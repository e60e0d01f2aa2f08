//! Classical classifiers. Every learner emits class probabilities so it can
//! sit in either layer of a stack.
//!
//! Binary problems are solved natively. Logistic regression, the SVM and the
//! boosted trees handle more than two classes one-vs-rest, normalising the
//! per-class scores.

mod boosting;
mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod svm;
pub(crate) mod tree;

pub use boosting::{BoostParams, BoostedModel};
pub use forest::{ForestParams, ForestModel};
pub use knn::{KnnModel, KnnParams};
pub use logistic::{LogisticModel, LogisticParams};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};
pub use svm::{SvmModel, SvmParams};
pub use tree::{Criterion, MaxFeatures, Tree, TreeNode, TreeParams};

use serde::{Deserialize, Serialize};

use crate::tabular::FeatureFrame;
use crate::{matrix, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    LogisticRegression,
    KNearestNeighbors,
    SvmRbf,
    GaussianNaiveBayes,
    DecisionTree,
    RandomForest,
    GradientBoostedTrees,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::LogisticRegression,
        LearnerKind::KNearestNeighbors,
        LearnerKind::SvmRbf,
        LearnerKind::GaussianNaiveBayes,
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::GradientBoostedTrees,
    ];

    /// Short column header used in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegression => "LR",
            LearnerKind::KNearestNeighbors => "KNN",
            LearnerKind::SvmRbf => "SVM",
            LearnerKind::GaussianNaiveBayes => "NB",
            LearnerKind::DecisionTree => "DT",
            LearnerKind::RandomForest => "RFC",
            LearnerKind::GradientBoostedTrees => "XGBoost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hyperparameters {
    Logistic(LogisticParams),
    Knn(KnnParams),
    Svm(SvmParams),
    NaiveBayes(NaiveBayesParams),
    Tree(TreeParams),
    Forest(ForestParams),
    Boosting(BoostParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Hyperparameters::Logistic(_) => LearnerKind::LogisticRegression,
            Hyperparameters::Knn(_) => LearnerKind::KNearestNeighbors,
            Hyperparameters::Svm(_) => LearnerKind::SvmRbf,
            Hyperparameters::NaiveBayes(_) => LearnerKind::GaussianNaiveBayes,
            Hyperparameters::Tree(_) => LearnerKind::DecisionTree,
            Hyperparameters::Forest(_) => LearnerKind::RandomForest,
            Hyperparameters::Boosting(_) => LearnerKind::GradientBoostedTrees,
        }
    }

    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::LogisticRegression => Hyperparameters::Logistic(LogisticParams::default()),
            LearnerKind::KNearestNeighbors => Hyperparameters::Knn(KnnParams::default()),
            LearnerKind::SvmRbf => Hyperparameters::Svm(SvmParams::default()),
            LearnerKind::GaussianNaiveBayes => Hyperparameters::NaiveBayes(NaiveBayesParams::default()),
            LearnerKind::DecisionTree => Hyperparameters::Tree(TreeParams::decision_tree()),
            LearnerKind::RandomForest => Hyperparameters::Forest(ForestParams::default()),
            LearnerKind::GradientBoostedTrees => Hyperparameters::Boosting(BoostParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub params: Hyperparameters,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        Self { params: Hyperparameters::default_for(kind), seed }
    }

    pub fn with_params(params: Hyperparameters, seed: u64) -> Self {
        Self { params, seed }
    }

    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }
}

/// Fitted state of one learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(OneVsRest<LogisticModel>),
    Knn(KnnModel),
    Svm(OneVsRest<SvmModel>),
    NaiveBayes(NaiveBayesModel),
    Tree(Tree),
    Forest(ForestModel),
    Boosting(OneVsRest<BoostedModel>),
}

/// Binary models, one per class for more than two classes or a single model
/// scoring class 1 otherwise. A class with no positive examples in its
/// sub-problem scores a constant 0.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRest<M> {
    pub models: Vec<Option<M>>,
}

pub trait BinaryScorer {
    fn positive_probability(&self, row: &[f64]) -> f64;
}

impl<M: BinaryScorer> OneVsRest<M> {
    fn fit(x: &Matrix, y: &[usize], n_classes: usize, mut fit_one: impl FnMut(&[bool], usize) -> Result<M>) -> Result<Self> {
        if n_classes == 2 {
            let target: Vec<bool> = y.iter().map(|&l| l == 1).collect();
            return Ok(Self { models: vec![Some(fit_one(&target, 1)?)] });
        }
        let models = (0..n_classes)
            .map(|c| {
                let target: Vec<bool> = y.iter().map(|&l| l == c).collect();
                let positives = target.iter().filter(|&&t| t).count();
                if positives == 0 || positives == target.len() || x.rows() == 0 {
                    Ok(None)
                } else {
                    fit_one(&target, c).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { models })
    }

    fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        if let [Some(m)] = self.models.as_slice() {
            let p = m.positive_probability(row);
            out[0] = 1.0 - p;
            out[1] = p;
            return;
        }
        for (o, m) in out.iter_mut().zip(&self.models) {
            *o = m.as_ref().map_or(0.0, |m| m.positive_probability(row));
        }
        normalise(out);
    }
}

fn normalise(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if s > 0.0 && s.is_finite() {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
}

/// A fitted, immutable classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLearner {
    pub spec: LearnerSpec,
    pub n_features: usize,
    pub n_classes: usize,
    pub model: Model,
}

impl TrainedLearner {
    pub fn kind(&self) -> LearnerKind {
        self.spec.kind()
    }

    /// Class probabilities, one row per input row.
    pub fn predict_proba_dense(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features && x.rows() > 0 {
            return Err(Error::WidthMismatch { expected: self.n_features, actual: x.cols() });
        }
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for r in 0..x.rows() {
            self.proba_row(x.row(r), out.row_mut(r));
        }
        Ok(out)
    }

    fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        match &self.model {
            Model::Logistic(m) => m.proba_row(row, out),
            Model::Svm(m) => m.proba_row(row, out),
            Model::Boosting(m) => m.proba_row(row, out),
            Model::Knn(m) => m.proba_row(row, out),
            Model::NaiveBayes(m) => m.proba_row(row, out),
            Model::Tree(t) => out.copy_from_slice(t.leaf_value(row)),
            Model::Forest(f) => f.proba_row(row, out),
        }
    }

    pub fn predict_label_dense(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.predict_proba_dense(x)?;
        Ok(p.iter_rows().map(matrix::argmax).collect())
    }

    pub fn predict_proba(&self, rows: &FeatureFrame) -> Result<Matrix> {
        if rows.n_cols() != self.n_features {
            return Err(Error::WidthMismatch { expected: self.n_features, actual: rows.n_cols() });
        }
        self.predict_proba_dense(&rows.to_matrix()?)
    }

    pub fn predict_label(&self, rows: &FeatureFrame) -> Result<Vec<usize>> {
        let p = self.predict_proba(rows)?;
        Ok(p.iter_rows().map(matrix::argmax).collect())
    }
}

/// Fits `spec` on a labelled, fully observed frame.
pub fn fit(spec: &LearnerSpec, train: &FeatureFrame) -> Result<TrainedLearner> {
    let labels = train.require_labels()?;
    fit_dense(spec, &train.to_matrix()?, labels, train.n_classes())
}

pub fn fit_dense(spec: &LearnerSpec, x: &Matrix, y: &[usize], n_classes: usize) -> Result<TrainedLearner> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch(x.rows(), y.len()));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if n_classes < 2 || y.iter().any(|&l| l >= n_classes) {
        return Err(Error::InvalidInput(format!("labels must lie in 0..{n_classes} with at least two classes")));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::DegenerateLabels);
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let seed = spec.seed;
    let model = match &spec.params {
        Hyperparameters::Logistic(p) => {
            Model::Logistic(OneVsRest::fit(x, y, n_classes, |t, _| Ok(LogisticModel::fit(x, t, p)))?)
        }
        Hyperparameters::Svm(p) => Model::Svm(OneVsRest::fit(x, y, n_classes, |t, _| Ok(SvmModel::fit(x, t, p)))?),
        Hyperparameters::Boosting(p) => Model::Boosting(OneVsRest::fit(x, y, n_classes, |t, c| {
            Ok(BoostedModel::fit(x, t, p, crate::rng::derive(seed, c as u64)))
        })?),
        Hyperparameters::Knn(p) => Model::Knn(KnnModel::fit(x, y, n_classes, p)?),
        Hyperparameters::NaiveBayes(p) => Model::NaiveBayes(NaiveBayesModel::fit(x, y, n_classes, p)),
        Hyperparameters::Tree(p) => {
            let idx: Vec<usize> = (0..x.rows()).collect();
            Model::Tree(Tree::fit_classifier(x, y, n_classes, &idx, p, &mut crate::rng::seeded(seed)))
        }
        Hyperparameters::Forest(p) => Model::Forest(ForestModel::fit(x, y, n_classes, p, seed)),
    };
    Ok(TrainedLearner { spec: spec.clone(), n_features: x.cols(), n_classes, model })
}


#[cfg(test)]
mod tests {
    use super::testdata::*;
    use super::*;

    fn accuracy(m: &TrainedLearner, x: &Matrix, y: &[usize]) -> f64 {
        let pred = m.predict_label_dense(x).unwrap();
        pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    fn quick(kind: LearnerKind) -> LearnerSpec {
        let mut spec = LearnerSpec::new(kind, 3);
        if let Hyperparameters::Forest(p) = &mut spec.params {
            p.n_estimators = 50;
        }
        spec
    }

    #[test]
    fn every_learner_fits_separable_data_perfectly() {
        let (x, y) = separable(1);
        for kind in LearnerKind::ALL {
            let m = fit_dense(&quick(kind), &x, &y, 2).unwrap();
            assert_eq!(accuracy(&m, &x, &y), 1.0, "{kind:?}");
        }
    }

    #[test]
    fn probabilities_are_distributions_and_agree_with_labels() {
        let (x, y) = blobs(30, 0.7, 2);
        let (probe, _) = blobs(10, 1.0, 99);
        for kind in LearnerKind::ALL {
            let m = fit_dense(&quick(kind), &x, &y, 2).unwrap();
            let p = m.predict_proba_dense(&probe).unwrap();
            let labels = m.predict_label_dense(&probe).unwrap();
            for (row, &l) in p.iter_rows().zip(&labels) {
                assert!(row.iter().all(|&v| v >= 0.0), "{kind:?}");
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind:?}");
                assert_eq!(matrix::argmax(row), l);
            }
        }
    }

    #[test]
    fn multiclass_probabilities_sum_to_one() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.2], [5.0, 5.0], [5.2, 4.9], [0.0, 5.0], [0.3, 5.1]]);
        let y = vec![0, 0, 1, 1, 2, 2];
        for kind in LearnerKind::ALL {
            let m = fit_dense(&quick(kind), &x, &y, 3).unwrap();
            let p = m.predict_proba_dense(&x).unwrap();
            for row in p.iter_rows() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind:?}");
            }
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        for kind in LearnerKind::ALL {
            assert!(matches!(fit_dense(&quick(kind), &x, &[1, 1], 2), Err(Error::DegenerateLabels)));
        }
    }

    #[test]
    fn width_mismatch_is_reported() {
        let (x, y) = separable(4);
        let m = fit_dense(&quick(LearnerKind::GaussianNaiveBayes), &x, &y, 2).unwrap();
        let bad = Matrix::from_rows(&[[1.0, 2.0, 3.0]]);
        assert!(matches!(m.predict_proba_dense(&bad), Err(Error::WidthMismatch { expected: 2, actual: 3 })));
    }

    #[test]
    fn fits_are_reproducible() {
        let (x, y) = blobs(25, 0.5, 8);
        let (probe, _) = blobs(5, 0.5, 9);
        for kind in LearnerKind::ALL {
            let a = fit_dense(&quick(kind), &x, &y, 2).unwrap().predict_proba_dense(&probe).unwrap();
            let b = fit_dense(&quick(kind), &x, &y, 2).unwrap().predict_proba_dense(&probe).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn label_ties_go_to_lower_class() {
        assert_eq!(matrix::argmax(&[0.5, 0.5]), 0);
        assert_eq!(matrix::argmax(&[0.9, 0.1]), 0);
    }

    #[test]
    fn frame_api_matches_dense_api() {
        use crate::tabular::FeatureSchema;
        let (x, y) = separable(5);
        let frame = FeatureFrame::from_matrix(FeatureSchema::numeric(2, &["a", "b"]), &x, Some(y.clone())).unwrap();
        let spec = quick(LearnerKind::LogisticRegression);
        let a = fit(&spec, &frame).unwrap();
        let b = fit_dense(&spec, &x, &y, 2).unwrap();
        assert_eq!(a.predict_proba(&frame).unwrap(), b.predict_proba_dense(&x).unwrap());
        assert_eq!(a.predict_label(&frame).unwrap().len(), 40);
    }
}
