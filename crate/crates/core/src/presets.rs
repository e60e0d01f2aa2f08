//! Experiment configurations: the feature lists, splits and stack layouts of
//! every diagnostic mode.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::learners::LearnerKind;
use crate::{Error, Result};

pub const SYMPTOM_FEATURES: [&str; 5] = ["Headache", "Fever", "Cough", "Sore throat", "Shortness of breath"];

pub const COUGH_FEATURES: [&str; 7] =
    ["Minimum", "Maximum", "Mean", "Standard deviation", "Skewness", "Kurtosis", "Dominant Frequency"];

pub const BLOOD25_FEATURES: [&str; 25] = [
    "Age",
    "Hemoglobin",
    "RBC",
    "HCT",
    "MCV",
    "MCH",
    "MCHC",
    "RDW",
    "TWBC",
    "Neutrophils",
    "Eosinophils",
    "Basophils",
    "Lymphocytes",
    "Monocytes",
    "Platelets",
    "MPV",
    "Albumin",
    "Sodium",
    "Potassium",
    "Alanine transaminase",
    "Aspartate transaminase",
    "Hs-CRP",
    "Creatinine",
    "Urea",
    "PT",
];

pub const BLOOD5_FEATURES: [&str; 5] = ["Age", "TWBC", "Eosinophils", "Monocytes", "Platelets"];

pub const MORTALITY7_FEATURES: [&str; 7] =
    ["Neutrophils", "Lymphocytes", "Monocytes", "Platelets", "Albumin", "Hs-CRP", "PT"];

pub const MORTALITY9_FEATURES: [&str; 9] = ["Age", "MCHC", "RDW", "TWBC", "BE", "PT", "PTT", "RR", "SpO2"];

pub const COVID_CLASSES: [&str; 2] = ["COVID-negative", "COVID-positive"];
pub const MORTALITY_CLASSES: [&str; 2] = ["survived", "deceased"];

/// Diagnostic mode served by one artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Symptoms,
    Cough,
    Blood25,
    Blood5,
    Raman,
    Ecg,
    Mortality7,
    Mortality9,
}

/// What a mode consumes at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Named numeric or binary fields.
    Tabular,
    /// A WAV recording.
    Audio,
    /// A PNG image.
    Image,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Symptoms,
        Mode::Cough,
        Mode::Blood25,
        Mode::Blood5,
        Mode::Raman,
        Mode::Ecg,
        Mode::Mortality7,
        Mode::Mortality9,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Symptoms => "symptoms",
            Mode::Cough => "cough",
            Mode::Blood25 => "blood25",
            Mode::Blood5 => "blood5",
            Mode::Raman => "raman",
            Mode::Ecg => "ecg",
            Mode::Mortality7 => "mortality7",
            Mode::Mortality9 => "mortality9",
        }
    }

    pub fn code(self) -> u8 {
        Mode::ALL.iter().position(|&m| m == self).expect("listed") as u8
    }

    pub fn from_code(code: u8) -> Option<Mode> {
        Mode::ALL.get(code as usize).copied()
    }

    pub fn input_kind(self) -> InputKind {
        match self {
            Mode::Cough => InputKind::Audio,
            Mode::Raman | Mode::Ecg => InputKind::Image,
            _ => InputKind::Tabular,
        }
    }

    pub fn is_mortality(self) -> bool {
        matches!(self, Mode::Mortality7 | Mode::Mortality9)
    }

    /// Wire labels for the negative and positive outcome.
    pub fn outcome_labels(self) -> (&'static str, &'static str) {
        if self.is_mortality() {
            ("low-risk", "high-risk")
        } else {
            ("COVID-negative", "COVID-positive")
        }
    }

    pub fn preset(self) -> &'static Preset {
        PRESETS.iter().find(|p| p.mode == self).expect("every mode has a preset")
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown mode {s:?}")))
    }
}

/// Which model family a preset trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetModel {
    Stack { bases: [LearnerKind; 3], meta: LearnerKind },
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub id: &'static str,
    pub mode: Mode,
    /// Input columns, in model order. Empty for image modes.
    pub features: &'static [&'static str],
    pub class_names: [&'static str; 2],
    pub model: PresetModel,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    /// Default image side for image modes.
    pub resolution: Option<usize>,
}

const STACK_RXS_NB: PresetModel = PresetModel::Stack {
    bases: [LearnerKind::RandomForest, LearnerKind::GradientBoostedTrees, LearnerKind::SvmRbf],
    meta: LearnerKind::GaussianNaiveBayes,
};

const STACK_RXS_RF: PresetModel = PresetModel::Stack {
    bases: [LearnerKind::RandomForest, LearnerKind::GradientBoostedTrees, LearnerKind::SvmRbf],
    meta: LearnerKind::RandomForest,
};

pub const PRESETS: [Preset; 8] = [
    Preset {
        id: "exp1",
        mode: Mode::Symptoms,
        features: &SYMPTOM_FEATURES,
        class_names: COVID_CLASSES,
        model: STACK_RXS_NB,
        train_fraction: 0.7,
        validation_fraction: 0.0,
        resolution: None,
    },
    Preset {
        id: "exp2",
        mode: Mode::Cough,
        features: &COUGH_FEATURES,
        class_names: COVID_CLASSES,
        model: PresetModel::Stack {
            bases: [LearnerKind::RandomForest, LearnerKind::GradientBoostedTrees, LearnerKind::DecisionTree],
            meta: LearnerKind::LogisticRegression,
        },
        train_fraction: 0.7,
        validation_fraction: 0.0,
        resolution: None,
    },
    Preset {
        id: "exp31",
        mode: Mode::Blood25,
        features: &BLOOD25_FEATURES,
        class_names: COVID_CLASSES,
        model: STACK_RXS_NB,
        train_fraction: 0.7,
        validation_fraction: 0.0,
        resolution: None,
    },
    Preset {
        id: "exp32",
        mode: Mode::Blood5,
        features: &BLOOD5_FEATURES,
        class_names: COVID_CLASSES,
        model: PresetModel::Stack {
            bases: [LearnerKind::RandomForest, LearnerKind::GradientBoostedTrees, LearnerKind::KNearestNeighbors],
            meta: LearnerKind::GaussianNaiveBayes,
        },
        train_fraction: 0.7,
        validation_fraction: 0.0,
        resolution: None,
    },
    Preset {
        id: "exp4",
        mode: Mode::Raman,
        features: &[],
        class_names: COVID_CLASSES,
        model: PresetModel::Cnn,
        train_fraction: 0.7,
        validation_fraction: 0.2,
        resolution: Some(64),
    },
    Preset {
        id: "exp5",
        mode: Mode::Ecg,
        features: &[],
        class_names: COVID_CLASSES,
        model: PresetModel::Cnn,
        train_fraction: 0.7,
        validation_fraction: 0.2,
        resolution: Some(224),
    },
    Preset {
        id: "exp61",
        mode: Mode::Mortality7,
        features: &MORTALITY7_FEATURES,
        class_names: MORTALITY_CLASSES,
        model: STACK_RXS_RF,
        train_fraction: 0.8,
        validation_fraction: 0.0,
        resolution: None,
    },
    Preset {
        id: "exp62",
        mode: Mode::Mortality9,
        features: &MORTALITY9_FEATURES,
        class_names: MORTALITY_CLASSES,
        model: STACK_RXS_RF,
        train_fraction: 0.8,
        validation_fraction: 0.0,
        resolution: None,
    },
];

/// Resolutions swept for the Raman experiment.
pub const RAMAN_RESOLUTIONS: [usize; 6] = [32, 64, 128, 256, 512, 800];

impl Preset {
    pub fn by_id(id: &str) -> Result<&'static Preset> {
        PRESETS.iter().find(|p| p.id == id).ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.id).collect();
            Error::InvalidInput(format!("unknown experiment {id:?}; expected one of {}", known.join(", ")))
        })
    }

    pub fn class_names(&self) -> Vec<String> {
        self.class_names.iter().map(|s| s.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_mode_has_one_preset() {
        for m in Mode::ALL {
            assert_eq!(PRESETS.iter().filter(|p| p.mode == m).count(), 1);
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
            assert_eq!(Mode::from_code(m.code()), Some(m));
        }
        assert!("xray".parse::<Mode>().is_err());
    }

    #[test]
    fn feature_counts() {
        let counts: Vec<(&str, usize)> = PRESETS.iter().map(|p| (p.id, p.features.len())).collect();
        assert_eq!(
            counts,
            [("exp1", 5), ("exp2", 7), ("exp31", 25), ("exp32", 5), ("exp4", 0), ("exp5", 0), ("exp61", 7), ("exp62", 9)]
        );
    }

    #[test]
    fn reduced_blood_panel_is_a_subset() {
        assert!(BLOOD5_FEATURES.iter().all(|f| BLOOD25_FEATURES.contains(f)));
    }

    #[test]
    fn splits_follow_experiment_family() {
        assert_eq!(Preset::by_id("exp31").unwrap().train_fraction, 0.7);
        assert_eq!(Preset::by_id("exp61").unwrap().train_fraction, 0.8);
        let raman = Preset::by_id("exp4").unwrap();
        assert_eq!((raman.train_fraction, raman.validation_fraction), (0.7, 0.2));
        assert!(Preset::by_id("exp7").is_err());
    }
}
