//! Tabular ingestion and preprocessing.
//!
//! The canonical preprocessing order is one-hot → impute → split → SMOTE →
//! scale, with scaling statistics taken from the training partition only.

mod csv;
mod encode;
mod impute;
mod pearson;
mod scale;
mod smote;
mod split;

pub use self::csv::{read_csv, read_csv_path, CsvOptions};
pub use encode::{encode_one_hot, OneHotEncoder};
pub use impute::{impute_knn, KnnImputer};
pub use pearson::pearson_matrix;
pub use scale::{scale_standard, StandardScaler};
pub use smote::smote_balance;
pub use split::{split, split_indices, SplitIndices, SplitSpec, Splits};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binary,
}

/// Column layout of a dataset. Doubles as the JSON sidecar format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub label_name: String,
    pub class_names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
        label_name: impl Into<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let schema = Self { feature_names, feature_kinds, label_name: label_name.into(), class_names };
        schema.validate()?;
        Ok(schema)
    }

    /// All-numeric schema with generated feature names `x0, x1, ...`.
    pub fn numeric(width: usize, class_names: &[&str]) -> Self {
        Self {
            feature_names: (0..width).map(|i| format!("x{i}")).collect(),
            feature_kinds: vec![FeatureKind::Numeric; width],
            label_name: "label".into(),
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_names.len() != self.feature_kinds.len() {
            return Err(Error::Schema(format!(
                "{} feature names but {} feature kinds",
                self.feature_names.len(),
                self.feature_kinds.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &self.feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        if seen.contains(self.label_name.as_str()) {
            return Err(Error::Schema(format!("label {:?} is also a feature", self.label_name)));
        }
        if self.class_names.len() < 2 {
            return Err(Error::Schema("at least two class names are required".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

/// Rectangular table of optional reals. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    schema: FeatureSchema,
    values: Vec<Option<f64>>,
    labels: Option<Vec<usize>>,
    /// Category names per column, indexed by the stored code. Empty for
    /// non-categorical columns or when codes were supplied numerically.
    levels: Vec<Vec<String>>,
}

impl FeatureFrame {
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<Option<f64>>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let width = schema.width();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Schema(format!("row {i} has {} cells, schema has {width}", row.len())));
            }
            values.extend_from_slice(row);
        }
        Self::from_parts(schema, values, labels)
    }

    /// Fully observed frame from a dense matrix.
    pub fn from_matrix(schema: FeatureSchema, m: &Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if m.cols() != schema.width() && m.rows() > 0 {
            return Err(Error::WidthMismatch { expected: schema.width(), actual: m.cols() });
        }
        let values = m.as_slice().iter().map(|&v| Some(v)).collect();
        Self::from_parts(schema, values, labels)
    }

    pub(crate) fn from_parts(schema: FeatureSchema, values: Vec<Option<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        schema.validate()?;
        let width = schema.width();
        if width == 0 && !values.is_empty() {
            return Err(Error::Schema("values without columns".into()));
        }
        let n = if width == 0 { labels.as_ref().map_or(0, Vec::len) } else { values.len() / width };
        if width > 0 && values.len() % width != 0 {
            return Err(Error::Schema("values are not a multiple of the schema width".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch(labels.len(), n));
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= schema.class_names.len()) {
                return Err(Error::Schema(format!("label index {bad} out of range")));
            }
        }
        let levels = vec![Vec::new(); width];
        Ok(Self { schema, values, labels, levels })
    }

    pub(crate) fn with_levels(mut self, levels: Vec<Vec<String>>) -> Self {
        debug_assert_eq!(levels.len(), self.schema.width());
        self.levels = levels;
        self
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        match self.schema.width() {
            0 => self.labels.as_ref().map_or(0, Vec::len),
            w => self.values.len() / w,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.schema.width()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.class_names.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        self.values[r * self.n_cols() + c]
    }

    pub fn row(&self, r: usize) -> &[Option<f64>] {
        let w = self.n_cols();
        &self.values[r * w..(r + 1) * w]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels().ok_or(Error::Unlabeled)
    }

    pub fn levels(&self, c: usize) -> &[String] {
        &self.levels[c]
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    /// Dense copy; fails naming the first column with a missing cell.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let mut data = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            match v {
                Some(x) => data.push(*x),
                None => {
                    let col = i % self.n_cols();
                    return Err(Error::MissingValues(self.schema.feature_names[col].clone()));
                }
            }
        }
        Ok(Matrix::from_vec(self.n_rows(), self.n_cols(), data))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let w = self.n_cols();
        let mut values = Vec::with_capacity(idx.len() * w);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        Self { schema: self.schema.clone(), values, labels, levels: self.levels.clone() }
    }

    /// Same schema, rows appended. Panics if the row width is wrong.
    pub(crate) fn append_rows(&mut self, rows: &Matrix, labels: &[usize]) {
        assert_eq!(rows.cols(), self.n_cols());
        self.values.extend(rows.as_slice().iter().map(|&v| Some(v)));
        if let Some(l) = &mut self.labels {
            l.extend_from_slice(labels);
        }
    }

    /// Per-class row counts; requires labels.
    pub fn class_counts(&self) -> Result<Vec<usize>> {
        let labels = self.require_labels()?;
        let mut counts = vec![0; self.n_classes()];
        for &l in labels {
            counts[l] += 1;
        }
        Ok(counts)
    }
}

/// Keeps the named columns in the order given.
pub fn select_features<S: AsRef<str>>(frame: &FeatureFrame, keep: &[S]) -> Result<FeatureFrame> {
    let schema = frame.schema();
    let mut seen = HashSet::new();
    let mut idx = Vec::with_capacity(keep.len());
    let mut unknown = Vec::new();
    for name in keep {
        let name = name.as_ref();
        if !seen.insert(name) {
            return Err(Error::DuplicateFeature(name.to_string()));
        }
        match schema.index_of(name) {
            Some(i) => idx.push(i),
            None => unknown.push(name.to_string()),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownFeature(unknown.join(", ")));
    }
    let new_schema = FeatureSchema {
        feature_names: idx.iter().map(|&i| schema.feature_names[i].clone()).collect(),
        feature_kinds: idx.iter().map(|&i| schema.feature_kinds[i]).collect(),
        label_name: schema.label_name.clone(),
        class_names: schema.class_names.clone(),
    };
    let mut values = Vec::with_capacity(frame.n_rows() * idx.len());
    for r in 0..frame.n_rows() {
        values.extend(idx.iter().map(|&c| frame.get(r, c)));
    }
    let levels = idx.iter().map(|&i| frame.levels[i].clone()).collect();
    Ok(FeatureFrame::from_parts(new_schema, values, frame.labels.clone())?.with_levels(levels))
}
