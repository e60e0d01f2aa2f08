use super::{argmax_rows, ExperimentReport, LabeledClip, LearnerScore, TrainOutcome};
use crate::audio::extract_features;
use crate::learners::Hyperparameters;
use crate::metrics::evaluate;
use crate::modelstore::{ModelArtifact, Payload, Preprocessing, TabularState};
use crate::presets::{Preset, PresetModel, COUGH_FEATURES};
use crate::stacking::{fit_stack_dense, StackSpec};
use crate::tabular::{
    select_features, smote_balance, split, FeatureFrame, FeatureKind, FeatureSchema, KnnImputer, OneHotEncoder,
    SplitSpec, StandardScaler,
};
use crate::{rng, Error, Result};

/// Positive class index for every preset.
const POSITIVE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularOptions {
    pub seed: u64,
    pub folds: usize,
    /// Balance classes before splitting instead of on the training split only.
    pub leaky_smote: bool,
    pub smote_k: usize,
    pub impute_k: usize,
    /// Overrides the forest size of every random forest in the stack.
    pub forest_trees: Option<usize>,
}

impl Default for TabularOptions {
    fn default() -> Self {
        Self { seed: 0, folds: 5, leaky_smote: false, smote_k: 5, impute_k: 5, forest_trees: None }
    }
}

/// Runs a stacking preset: select, one-hot, impute, split, SMOTE, scale,
/// fit the stack, then score every base and the stack on the test split.
pub fn train_tabular(preset: &Preset, frame: &FeatureFrame, opts: &TabularOptions) -> Result<TrainOutcome> {
    let PresetModel::Stack { bases, meta } = preset.model else {
        return Err(Error::InvalidInput(format!("{} is not a stacking preset", preset.id)));
    };
    frame.require_labels()?;
    if frame.n_classes() != 2 {
        return Err(Error::Schema(format!("{} expects 2 classes, schema lists {}", preset.id, frame.n_classes())));
    }
    let selected = select_features(frame, preset.features)?;
    let encoder = OneHotEncoder::fit(&selected)?;
    let encoded = encoder.transform(&selected)?;
    let (imputer, imputed) = if encoded.has_missing() {
        let imputer = KnnImputer::fit(&encoded, opts.impute_k)?;
        let imputed = imputer.transform(&encoded)?;
        (Some(imputer), imputed)
    } else {
        (None, encoded)
    };

    let split_spec = SplitSpec::train_test(preset.train_fraction, rng::derive(opts.seed, 1));
    let smote_seed = rng::derive(opts.seed, 2);
    let (train, test) = if opts.leaky_smote {
        let balanced = smote_balance(&imputed, opts.smote_k, smote_seed)?;
        let s = split(&balanced, split_spec)?;
        (s.train, s.test)
    } else {
        let s = split(&imputed, split_spec)?;
        (smote_balance(&s.train, opts.smote_k, smote_seed)?, s.test)
    };
    let scaler = StandardScaler::fit(&train)?;
    let (x_train, x_test) = (scaler.transform(&train)?.to_matrix()?, scaler.transform(&test)?.to_matrix()?);
    let (y_train, y_test) = (train.require_labels()?, test.require_labels()?);

    let mut spec = StackSpec::new(&bases, meta, rng::derive(opts.seed, 3));
    spec.folds = opts.folds;
    if let Some(trees) = opts.forest_trees {
        for s in spec.base_specs.iter_mut().chain(std::iter::once(&mut spec.meta_spec)) {
            if let Hyperparameters::Forest(p) = &mut s.params {
                p.n_estimators = trees;
            }
        }
    }
    let model = fit_stack_dense(&spec, &x_train, y_train, 2)?;

    let mut rows = Vec::with_capacity(bases.len() + 1);
    for base in &model.bases {
        let pred = argmax_rows(&base.predict_proba_dense(&x_test)?);
        rows.push(LearnerScore { learner: base.kind().short_name().into(), metrics: evaluate(y_test, &pred, POSITIVE)? });
    }
    let (_, pred) = model.predict_dense(&x_test)?;
    rows.push(LearnerScore { learner: "Stacked".into(), metrics: evaluate(y_test, &pred, POSITIVE)? });

    let report = ExperimentReport {
        experiment: preset.id.into(),
        mode: preset.mode,
        resolution: None,
        n_train: x_train.rows(),
        n_validation: 0,
        n_test: x_test.rows(),
        rows,
    };
    let artifact = ModelArtifact {
        mode: preset.mode,
        preset_id: preset.id.into(),
        class_names: frame.schema().class_names.clone(),
        preprocessing: Preprocessing::Tabular(TabularState {
            schema: selected.schema().clone(),
            encoder,
            imputer,
            scaler,
        }),
        payload: Payload::Stack(model),
    };
    Ok(TrainOutcome { artifact, report, history: None })
}

/// Extracts the cough feature columns from labelled clips.
pub fn features_frame_from_clips(clips: &[LabeledClip], class_names: &[String]) -> Result<FeatureFrame> {
    use rayon::prelude::*;
    let rows: Vec<Vec<Option<f64>>> = clips
        .par_iter()
        .map(|c| {
            extract_features(&c.clip)
                .map(|f| f.to_vec().into_iter().map(Some).collect())
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", c.name)))
        })
        .collect::<Result<_>>()?;
    let schema = FeatureSchema::new(
        COUGH_FEATURES.iter().map(|s| s.to_string()).collect(),
        vec![FeatureKind::Numeric; COUGH_FEATURES.len()],
        "label",
        class_names.to_vec(),
    )?;
    FeatureFrame::new(schema, rows, Some(clips.iter().map(|c| c.label).collect()))
}
