use super::{FeatureFrame, FeatureKind, FeatureSchema};
use crate::{Error, Result};

/// Fitted one-hot layout: the observed categories of every categorical
/// column, in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotEncoder {
    input: FeatureSchema,
    /// For each input column: `None` for pass-through, otherwise the category codes.
    categories: Vec<Option<Vec<f64>>>,
    output: FeatureSchema,
}

impl OneHotEncoder {
    pub fn fit(frame: &FeatureFrame) -> Result<Self> {
        if frame.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let schema = frame.schema();
        let mut categories = Vec::with_capacity(schema.width());
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        for c in 0..schema.width() {
            if schema.feature_kinds[c] != FeatureKind::Categorical {
                categories.push(None);
                names.push(schema.feature_names[c].clone());
                kinds.push(schema.feature_kinds[c]);
                continue;
            }
            let mut cats: Vec<f64> = Vec::new();
            for r in 0..frame.n_rows() {
                if let Some(v) = frame.get(r, c) {
                    if !cats.contains(&v) {
                        cats.push(v);
                    }
                }
            }
            for &code in &cats {
                let level = frame
                    .levels(c)
                    .get(code as usize)
                    .filter(|_| code.fract() == 0.0 && code >= 0.0)
                    .cloned()
                    .unwrap_or_else(|| format!("{code}"));
                names.push(format!("{}={}", schema.feature_names[c], level));
                kinds.push(FeatureKind::Binary);
            }
            categories.push(Some(cats));
        }
        let output = FeatureSchema {
            feature_names: names,
            feature_kinds: kinds,
            label_name: schema.label_name.clone(),
            class_names: schema.class_names.clone(),
        };
        output.validate()?;
        Ok(Self { input: schema.clone(), categories, output })
    }

    pub fn output_schema(&self) -> &FeatureSchema {
        &self.output
    }

    pub fn is_identity(&self) -> bool {
        self.categories.iter().all(Option::is_none)
    }

    /// Unseen categories encode as all-zero; missing cells stay missing in
    /// every derived column.
    pub fn transform(&self, frame: &FeatureFrame) -> Result<FeatureFrame> {
        if frame.n_cols() != self.input.width() {
            return Err(Error::WidthMismatch { expected: self.input.width(), actual: frame.n_cols() });
        }
        let width = self.output.width();
        let mut values = Vec::with_capacity(frame.n_rows() * width);
        for r in 0..frame.n_rows() {
            for (c, cats) in self.categories.iter().enumerate() {
                let v = frame.get(r, c);
                match cats {
                    None => values.push(v),
                    Some(cats) => {
                        for &code in cats {
                            values.push(v.map(|x| if x == code { 1.0 } else { 0.0 }));
                        }
                    }
                }
            }
        }
        let levels = vec![Vec::new(); width];
        Ok(FeatureFrame::from_parts(self.output.clone(), values, frame.labels().map(<[usize]>::to_vec))?.with_levels(levels))
    }

    pub(crate) fn categories(&self) -> &[Option<Vec<f64>>] {
        &self.categories
    }

    pub(crate) fn input_schema(&self) -> &FeatureSchema {
        &self.input
    }

    pub(crate) fn from_parts(input: FeatureSchema, categories: Vec<Option<Vec<f64>>>, output: FeatureSchema) -> Self {
        Self { input, categories, output }
    }
}

pub fn encode_one_hot(frame: &FeatureFrame) -> Result<FeatureFrame> {
    OneHotEncoder::fit(frame)?.transform(frame)
}
