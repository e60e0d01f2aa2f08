use std::path::{Path, PathBuf};

use multidx_core::imaging::SpectralRecord;
use multidx_core::pipeline::{features_frame_from_clips, load_audio_dir, load_image_dir, read_spectra_csv, ImageSample};
use multidx_core::presets::{InputKind, COUGH_FEATURES};
use multidx_core::tabular::{read_csv_path, CsvOptions, FeatureFrame, FeatureKind, FeatureSchema};
use multidx_core::{Mode, Preset};

use crate::CliError;

/// Overrides for how a dataset is read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetOptions {
    /// Column schema JSON; defaults to the sidecar next to the CSV.
    pub schema: Option<PathBuf>,
    /// Label column name.
    pub label: Option<String>,
    /// Class names, negative first. Also the class directory names.
    pub classes: Option<Vec<String>>,
}

/// A loaded training set.
#[derive(Debug, Clone)]
pub enum Dataset {
    Frame(FeatureFrame),
    Spectra { records: Vec<SpectralRecord>, class_names: Vec<String> },
    Images { samples: Vec<ImageSample>, class_names: Vec<String> },
}

/// `data/blood.csv` -> `data/blood.schema.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("schema.json")
}

/// Reads `data` in the layout the preset's mode expects:
/// * tabular modes: a CSV, with an optional schema sidecar;
/// * cough: a directory of `<class>/*.wav`, or a CSV of extracted features;
/// * raman: a CSV with one spectrum per row and a label column;
/// * ecg: a directory of `<class>/*.png`.
pub fn load_dataset(preset: &Preset, data: &Path, opts: &DatasetOptions) -> Result<Dataset, CliError> {
    if !data.exists() {
        return Err(CliError::Data(format!("{}: no such file or directory", data.display())));
    }
    let classes = class_names(preset, opts)?;
    let label = opts.label.clone().unwrap_or_else(|| "label".into());
    let read = |e: multidx_core::Error| CliError::read(data, e);
    match preset.mode.input_kind() {
        InputKind::Audio if data.is_dir() => {
            let clips = load_audio_dir(data, &classes).map_err(read)?;
            Ok(Dataset::Frame(features_frame_from_clips(&clips, &classes).map_err(read)?))
        }
        InputKind::Tabular | InputKind::Audio => {
            expect_file(data)?;
            let schema = schema_for(preset, data, opts, &classes)?;
            Ok(Dataset::Frame(read_csv_path(data, &schema, CsvOptions::default()).map_err(read)?))
        }
        InputKind::Image if preset.mode == Mode::Raman => {
            expect_file(data)?;
            let (label, classes) = match sidecar(data, opts)? {
                Some(s) => (
                    opts.label.clone().unwrap_or(s.label_name),
                    if opts.classes.is_some() { classes } else { s.class_names },
                ),
                None => (label, classes),
            };
            let records = read_spectra_csv(data, &label, &classes).map_err(read)?;
            Ok(Dataset::Spectra { records, class_names: classes })
        }
        InputKind::Image => {
            if !data.is_dir() {
                return Err(CliError::Data(format!("{}: expected a directory of class folders", data.display())));
            }
            let samples = load_image_dir(data, &classes).map_err(read)?;
            Ok(Dataset::Images { samples, class_names: classes })
        }
    }
}

fn expect_file(data: &Path) -> Result<(), CliError> {
    if data.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{}: expected a CSV file", data.display())))
    }
}

fn class_names(preset: &Preset, opts: &DatasetOptions) -> Result<Vec<String>, CliError> {
    match &opts.classes {
        Some(c) if c.len() != 2 => Err(CliError::Usage(format!("expected 2 class names, got {}", c.len()))),
        Some(c) => Ok(c.clone()),
        None => Ok(preset.class_names()),
    }
}

/// The explicit schema file, else the sidecar when present.
fn sidecar(data: &Path, opts: &DatasetOptions) -> Result<Option<FeatureSchema>, CliError> {
    let Some(path) = opts.schema.clone().or_else(|| Some(sidecar_path(data)).filter(|p| p.is_file())) else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::read(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::read(&path, e))
}

/// Explicit schema, else the sidecar, else the preset's columns with the
/// default label column.
fn schema_for(preset: &Preset, data: &Path, opts: &DatasetOptions, classes: &[String]) -> Result<FeatureSchema, CliError> {
    let mut schema = match sidecar(data, opts)? {
        Some(schema) => schema,
        None => {
            let names: Vec<String> = if preset.mode == Mode::Cough {
                COUGH_FEATURES.iter().map(|s| s.to_string()).collect()
            } else {
                preset.features.iter().map(|s| s.to_string()).collect()
            };
            let kind = if preset.mode == Mode::Symptoms { FeatureKind::Binary } else { FeatureKind::Numeric };
            let kinds = vec![kind; names.len()];
            FeatureSchema { feature_names: names, feature_kinds: kinds, label_name: "label".into(), class_names: classes.to_vec() }
        }
    };
    if let Some(label) = &opts.label {
        schema.label_name = label.clone();
    }
    if opts.classes.is_some() {
        schema.class_names = classes.to_vec();
    }
    schema.validate().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(schema)
}
