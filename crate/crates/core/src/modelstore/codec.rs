//! Field-level binary encoding. Integers are little-endian fixed width,
//! `usize` travels as `u64`, floats as their IEEE-754 bit pattern, strings
//! and sequences carry a `u64` length prefix, and enums a one-byte tag.

use crate::cnn::{CnnModel, Layer};
use crate::learners::{
    BoostParams, BoostedModel, Criterion, ForestModel, ForestParams, Hyperparameters, KnnModel, KnnParams,
    LearnerSpec, LogisticModel, LogisticParams, MaxFeatures, Model, NaiveBayesModel, NaiveBayesParams, OneVsRest,
    SvmModel, SvmParams, TrainedLearner, Tree, TreeNode, TreeParams,
};
use crate::stacking::StackedModel;
use crate::tabular::{FeatureKind, FeatureSchema, KnnImputer, OneHotEncoder, StandardScaler};
use crate::{Error, Matrix, Result};

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn put<T: Codec + ?Sized>(&mut self, v: &T) {
        v.put(self);
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

fn malformed(what: impl Into<String>) -> Error {
    Error::Malformed(what.into())
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(malformed("truncated"));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    /// A length prefix, bounded by the bytes left so corrupt input cannot
    /// trigger huge allocations.
    pub fn len(&mut self, min_item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| malformed("length overflow"))?;
        if n.saturating_mul(min_item_bytes.max(1)) > self.remaining() {
            return Err(malformed("length prefix exceeds remaining data"));
        }
        Ok(n)
    }

    pub fn get<T: Codec>(&mut self) -> Result<T> {
        T::get(self)
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(malformed(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

pub(crate) trait Codec: Sized {
    /// Smallest possible encoding, used to bound length prefixes.
    const MIN_BYTES: usize = 1;
    fn put(&self, w: &mut Writer);
    fn get(r: &mut Reader) -> Result<Self>;
}

impl Codec for u8 {
    fn put(&self, w: &mut Writer) {
        w.u8(*self)
    }
    fn get(r: &mut Reader) -> Result<Self> {
        r.u8()
    }
}

impl Codec for u64 {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.u64(*self)
    }
    fn get(r: &mut Reader) -> Result<Self> {
        r.u64()
    }
}

impl Codec for usize {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.u64(*self as u64)
    }
    fn get(r: &mut Reader) -> Result<Self> {
        usize::try_from(r.u64()?).map_err(|_| malformed("integer overflow"))
    }
}

impl Codec for f64 {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.u64(self.to_bits())
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(f64::from_bits(r.u64()?))
    }
}

impl Codec for bool {
    fn put(&self, w: &mut Writer) {
        w.u8(u8::from(*self))
    }
    fn get(r: &mut Reader) -> Result<Self> {
        match r.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            t => Err(malformed(format!("bad bool {t}"))),
        }
    }
}

impl Codec for String {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.u64(self.len() as u64);
        w.buf.extend_from_slice(self.as_bytes());
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let n = r.len(1)?;
        String::from_utf8(r.bytes(n)?.to_vec()).map_err(|_| malformed("invalid utf-8"))
    }
}

impl<T: Codec> Codec for Vec<T> {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.u64(self.len() as u64);
        self.iter().for_each(|v| v.put(w));
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let n = r.len(T::MIN_BYTES)?;
        (0..n).map(|_| T::get(r)).collect()
    }
}

impl<T: Codec> Codec for Option<T> {
    fn put(&self, w: &mut Writer) {
        match self {
            None => w.u8(0),
            Some(v) => {
                w.u8(1);
                v.put(w);
            }
        }
    }
    fn get(r: &mut Reader) -> Result<Self> {
        match r.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::get(r)?)),
            t => Err(malformed(format!("bad option tag {t}"))),
        }
    }
}

impl Codec for Matrix {
    const MIN_BYTES: usize = 24;
    fn put(&self, w: &mut Writer) {
        w.put(&self.rows());
        w.put(&self.cols());
        w.put(&self.as_slice().to_vec());
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let rows: usize = r.get()?;
        let cols: usize = r.get()?;
        let data: Vec<f64> = r.get()?;
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(malformed("matrix dimensions"));
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

impl Codec for FeatureKind {
    fn put(&self, w: &mut Writer) {
        w.u8(match self {
            FeatureKind::Numeric => 0,
            FeatureKind::Categorical => 1,
            FeatureKind::Binary => 2,
        })
    }
    fn get(r: &mut Reader) -> Result<Self> {
        match r.u8()? {
            0 => Ok(FeatureKind::Numeric),
            1 => Ok(FeatureKind::Categorical),
            2 => Ok(FeatureKind::Binary),
            t => Err(malformed(format!("bad feature kind {t}"))),
        }
    }
}

impl Codec for FeatureSchema {
    fn put(&self, w: &mut Writer) {
        w.put(&self.feature_names);
        w.put(&self.feature_kinds);
        w.put(&self.label_name);
        w.put(&self.class_names);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        FeatureSchema::new(r.get()?, r.get()?, r.get::<String>()?, r.get()?).map_err(|e| malformed(e.to_string()))
    }
}

impl Codec for OneHotEncoder {
    fn put(&self, w: &mut Writer) {
        w.put(self.input_schema());
        w.put(&self.categories().to_vec());
        w.put(self.output_schema());
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let input: FeatureSchema = r.get()?;
        let categories: Vec<Option<Vec<f64>>> = r.get()?;
        let output: FeatureSchema = r.get()?;
        let derived: usize = categories.iter().map(|c| c.as_ref().map_or(1, Vec::len)).sum();
        if categories.len() != input.width() || derived != output.width() {
            return Err(malformed("one-hot layout"));
        }
        Ok(OneHotEncoder::from_parts(input, categories, output))
    }
}

impl Codec for KnnImputer {
    fn put(&self, w: &mut Writer) {
        w.put(&self.k());
        w.put(&self.width());
        w.put(&self.donors().to_vec());
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let k: usize = r.get()?;
        let width: usize = r.get()?;
        let donors: Vec<Option<f64>> = r.get()?;
        if (width == 0 && !donors.is_empty()) || (width > 0 && donors.len() % width != 0) {
            return Err(malformed("imputer donor matrix"));
        }
        KnnImputer::from_donors(k, width, donors).map_err(|e| malformed(e.to_string()))
    }
}

impl Codec for StandardScaler {
    fn put(&self, w: &mut Writer) {
        w.put(&self.mean);
        w.put(&self.std);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let (mean, std): (Vec<f64>, Vec<f64>) = (r.get()?, r.get()?);
        if mean.len() != std.len() {
            return Err(malformed("scaler widths"));
        }
        Ok(StandardScaler { mean, std })
    }
}

impl Codec for TreeParams {
    fn put(&self, w: &mut Writer) {
        w.u8(match self.criterion {
            Criterion::Gini => 0,
            Criterion::Entropy => 1,
        });
        w.put(&self.max_leaf_nodes);
        w.put(&self.max_depth);
        w.u8(match self.max_features {
            MaxFeatures::All => 0,
            MaxFeatures::Sqrt => 1,
        });
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let criterion = match r.u8()? {
            0 => Criterion::Gini,
            1 => Criterion::Entropy,
            t => return Err(malformed(format!("bad criterion {t}"))),
        };
        let max_leaf_nodes = r.get()?;
        let max_depth = r.get()?;
        let max_features = match r.u8()? {
            0 => MaxFeatures::All,
            1 => MaxFeatures::Sqrt,
            t => return Err(malformed(format!("bad max-features {t}"))),
        };
        Ok(TreeParams { criterion, max_leaf_nodes, max_depth, max_features })
    }
}

impl Codec for Hyperparameters {
    fn put(&self, w: &mut Writer) {
        match self {
            Hyperparameters::Logistic(p) => {
                w.u8(0);
                w.put(&p.l2);
                w.put(&p.max_iter);
                w.put(&p.tol);
            }
            Hyperparameters::Knn(p) => {
                w.u8(1);
                w.put(&p.k);
                w.put(&p.p);
            }
            Hyperparameters::Svm(p) => {
                w.u8(2);
                w.put(&p.c);
                w.put(&p.gamma);
                w.put(&p.tol);
                w.put(&p.cache_bytes);
            }
            Hyperparameters::NaiveBayes(p) => {
                w.u8(3);
                w.put(&p.var_floor);
            }
            Hyperparameters::Tree(p) => {
                w.u8(4);
                w.put(p);
            }
            Hyperparameters::Forest(p) => {
                w.u8(5);
                w.put(&p.n_estimators);
                w.put(&p.tree);
                w.put(&p.bootstrap);
            }
            Hyperparameters::Boosting(p) => {
                w.u8(6);
                w.put(&p.n_estimators);
                w.put(&p.max_depth);
                w.put(&p.learning_rate);
                w.put(&p.lambda);
                w.put(&p.gamma);
                w.put(&p.subsample);
                w.put(&p.min_child_weight);
            }
        }
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(match r.u8()? {
            0 => Hyperparameters::Logistic(LogisticParams { l2: r.get()?, max_iter: r.get()?, tol: r.get()? }),
            1 => Hyperparameters::Knn(KnnParams { k: r.get()?, p: r.get()? }),
            2 => Hyperparameters::Svm(SvmParams { c: r.get()?, gamma: r.get()?, tol: r.get()?, cache_bytes: r.get()? }),
            3 => Hyperparameters::NaiveBayes(NaiveBayesParams { var_floor: r.get()? }),
            4 => Hyperparameters::Tree(r.get()?),
            5 => Hyperparameters::Forest(ForestParams { n_estimators: r.get()?, tree: r.get()?, bootstrap: r.get()? }),
            6 => Hyperparameters::Boosting(BoostParams {
                n_estimators: r.get()?,
                max_depth: r.get()?,
                learning_rate: r.get()?,
                lambda: r.get()?,
                gamma: r.get()?,
                subsample: r.get()?,
                min_child_weight: r.get()?,
            }),
            t => return Err(malformed(format!("bad learner tag {t}"))),
        })
    }
}

impl Codec for Tree {
    const MIN_BYTES: usize = 8;
    fn put(&self, w: &mut Writer) {
        w.put(&self.nodes.len());
        for node in &self.nodes {
            match node {
                TreeNode::Leaf { value } => {
                    w.u8(0);
                    w.put(value);
                }
                TreeNode::Split { feature, threshold, left, right } => {
                    w.u8(1);
                    w.put(feature);
                    w.put(threshold);
                    w.put(left);
                    w.put(right);
                }
            }
        }
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let n = r.len(9)?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            nodes.push(match r.u8()? {
                0 => TreeNode::Leaf { value: r.get()? },
                1 => TreeNode::Split { feature: r.get()?, threshold: r.get()?, left: r.get()?, right: r.get()? },
                t => return Err(malformed(format!("bad tree node tag {t}"))),
            });
        }
        // Children must point forward so traversal always terminates.
        for (i, node) in nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = node {
                if *left <= i || *right <= i || *left >= n || *right >= n {
                    return Err(malformed("tree child index"));
                }
            }
        }
        if nodes.is_empty() {
            return Err(malformed("empty tree"));
        }
        Ok(Tree { nodes })
    }
}

impl Codec for LogisticModel {
    fn put(&self, w: &mut Writer) {
        w.put(&self.weights);
        w.put(&self.intercept);
        w.put(&self.iterations);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(LogisticModel { weights: r.get()?, intercept: r.get()?, iterations: r.get()? })
    }
}

impl Codec for SvmModel {
    fn put(&self, w: &mut Writer) {
        w.put(&self.gamma);
        w.put(&self.support_vectors);
        w.put(&self.dual_coef);
        w.put(&self.rho);
        w.put(&self.platt_a);
        w.put(&self.platt_b);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let m = SvmModel {
            gamma: r.get()?,
            support_vectors: r.get()?,
            dual_coef: r.get()?,
            rho: r.get()?,
            platt_a: r.get()?,
            platt_b: r.get()?,
        };
        if m.dual_coef.len() != m.support_vectors.rows() {
            return Err(malformed("svm coefficient count"));
        }
        Ok(m)
    }
}

impl Codec for BoostedModel {
    fn put(&self, w: &mut Writer) {
        w.put(&self.base_margin);
        w.put(&self.trees);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(BoostedModel { base_margin: r.get()?, trees: r.get()? })
    }
}

impl<M: Codec> Codec for OneVsRest<M> {
    fn put(&self, w: &mut Writer) {
        w.put(&self.models);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(OneVsRest { models: r.get()? })
    }
}

impl Codec for Model {
    fn put(&self, w: &mut Writer) {
        match self {
            Model::Logistic(m) => {
                w.u8(0);
                w.put(m);
            }
            Model::Knn(m) => {
                w.u8(1);
                w.put(&m.params.k);
                w.put(&m.params.p);
                w.put(&m.x);
                w.put(&m.y);
            }
            Model::Svm(m) => {
                w.u8(2);
                w.put(m);
            }
            Model::NaiveBayes(m) => {
                w.u8(3);
                w.put(&m.priors);
                w.put(&m.means);
                w.put(&m.variances);
            }
            Model::Tree(t) => {
                w.u8(4);
                w.put(t);
            }
            Model::Forest(f) => {
                w.u8(5);
                w.put(&f.trees);
            }
            Model::Boosting(m) => {
                w.u8(6);
                w.put(m);
            }
        }
    }
    fn get(r: &mut Reader) -> Result<Self> {
        Ok(match r.u8()? {
            0 => Model::Logistic(r.get()?),
            1 => {
                let params = KnnParams { k: r.get()?, p: r.get()? };
                let (x, y): (Matrix, Vec<usize>) = (r.get()?, r.get()?);
                if x.rows() != y.len() {
                    return Err(malformed("knn label count"));
                }
                Model::Knn(KnnModel { params, x, y })
            }
            2 => Model::Svm(r.get()?),
            3 => Model::NaiveBayes(NaiveBayesModel { priors: r.get()?, means: r.get()?, variances: r.get()? }),
            4 => Model::Tree(r.get()?),
            5 => Model::Forest(ForestModel { trees: r.get()? }),
            6 => Model::Boosting(r.get()?),
            t => return Err(malformed(format!("bad model tag {t}"))),
        })
    }
}

impl Codec for TrainedLearner {
    fn put(&self, w: &mut Writer) {
        w.put(&self.spec.params);
        w.put(&self.spec.seed);
        w.put(&self.n_features);
        w.put(&self.n_classes);
        w.put(&self.model);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let params: Hyperparameters = r.get()?;
        let seed: u64 = r.get()?;
        let learner = TrainedLearner {
            spec: LearnerSpec::with_params(params, seed),
            n_features: r.get()?,
            n_classes: r.get()?,
            model: r.get()?,
        };
        check_learner(&learner)?;
        Ok(learner)
    }
}

/// Dimension checks that keep inference on a decoded learner panic-free.
fn check_learner(l: &TrainedLearner) -> Result<()> {
    let (d, k) = (l.n_features, l.n_classes);
    let tree_ok = |t: &Tree, leaf_len: usize| {
        t.nodes.iter().all(|n| match n {
            TreeNode::Leaf { value } => value.len() == leaf_len,
            TreeNode::Split { feature, .. } => *feature < d,
        })
    };
    let ovr_ok = |n: usize| n == if k == 2 { 1 } else { k };
    let ok = k >= 2
        && match &l.model {
            Model::Logistic(m) => ovr_ok(m.models.len()) && m.models.iter().flatten().all(|m| m.weights.len() == d),
            Model::Knn(m) => m.x.cols() == d && m.y.iter().all(|&y| y < k) && m.params.k > 0,
            Model::Svm(m) => ovr_ok(m.models.len()) && m.models.iter().flatten().all(|m| m.support_vectors.cols() == d),
            Model::NaiveBayes(m) => {
                m.priors.len() == k
                    && m.means.len() == k
                    && m.variances.len() == k
                    && m.means.iter().chain(&m.variances).all(|v| v.len() == d)
            }
            Model::Tree(t) => tree_ok(t, k),
            Model::Forest(f) => !f.trees.is_empty() && f.trees.iter().all(|t| tree_ok(t, k)),
            Model::Boosting(m) => {
                ovr_ok(m.models.len()) && m.models.iter().flatten().all(|b| b.trees.iter().all(|t| tree_ok(t, 1)))
            }
        };
    use crate::learners::LearnerKind as K;
    let kind_ok = matches!(
        (l.kind(), &l.model),
        (K::LogisticRegression, Model::Logistic(_))
            | (K::KNearestNeighbors, Model::Knn(_))
            | (K::SvmRbf, Model::Svm(_))
            | (K::GaussianNaiveBayes, Model::NaiveBayes(_))
            | (K::DecisionTree, Model::Tree(_))
            | (K::RandomForest, Model::Forest(_))
            | (K::GradientBoostedTrees, Model::Boosting(_))
    );
    if ok && kind_ok {
        Ok(())
    } else {
        Err(malformed("learner dimensions"))
    }
}

impl Codec for StackedModel {
    fn put(&self, w: &mut Writer) {
        w.put(&self.bases);
        w.put(&self.meta);
        w.put(&self.n_features);
        w.put(&self.n_classes);
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let m = StackedModel { bases: r.get()?, meta: r.get()?, n_features: r.get()?, n_classes: r.get()? };
        let bases_ok = !m.bases.is_empty() && m.bases.iter().all(|b| b.n_features == m.n_features && b.n_classes == m.n_classes);
        if !bases_ok || m.meta.n_features != m.meta_feature_width() || m.meta.n_classes != m.n_classes {
            return Err(malformed("stack dimensions"));
        }
        Ok(m)
    }
}

impl Codec for CnnModel {
    fn put(&self, w: &mut Writer) {
        self.input_shape.iter().for_each(|d| w.put(d));
        w.put(&self.layers.len());
        for layer in &self.layers {
            match layer {
                Layer::Conv2D { in_channels, filters, kernel, bias } => {
                    w.u8(0);
                    w.put(in_channels);
                    w.put(filters);
                    w.put(kernel);
                    w.put(bias);
                }
                Layer::ReLU => w.u8(1),
                Layer::MaxPool => w.u8(2),
                Layer::Flatten => w.u8(3),
                Layer::Dense { inputs, units, weights, bias } => {
                    w.u8(4);
                    w.put(inputs);
                    w.put(units);
                    w.put(weights);
                    w.put(bias);
                }
                Layer::Softmax => w.u8(5),
            }
        }
    }
    fn get(r: &mut Reader) -> Result<Self> {
        let input_shape = [r.get()?, r.get()?, r.get()?];
        let n = r.len(1)?;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            layers.push(match r.u8()? {
                0 => Layer::Conv2D { in_channels: r.get()?, filters: r.get()?, kernel: r.get()?, bias: r.get()? },
                1 => Layer::ReLU,
                2 => Layer::MaxPool,
                3 => Layer::Flatten,
                4 => Layer::Dense { inputs: r.get()?, units: r.get()?, weights: r.get()?, bias: r.get()? },
                5 => Layer::Softmax,
                t => return Err(malformed(format!("bad layer tag {t}"))),
            });
        }
        CnnModel::from_layers(input_shape, layers).map_err(|e| malformed(e.to_string()))
    }
}
