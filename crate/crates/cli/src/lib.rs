//! Library side of the `multidx` command: dataset loading, training,
//! prediction and serving, callable without going through a process.

mod data;
mod error;
mod table;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use multidx_core::modelstore;
use multidx_core::pipeline::{
    predict_result, train_raman, train_report_images, train_tabular, ExperimentReport, ModeInput, PredictionResult,
    TabularOptions, TrainOutcome, VisionOptions,
};
use multidx_core::presets::{InputKind, PresetModel};
use multidx_core::Preset;
use multidx_service::{Config, Registry};

pub use data::{load_dataset, sidecar_path, Dataset, DatasetOptions};
pub use error::CliError;
pub use table::render_table;

/// Everything `train` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainArgs {
    pub experiment: String,
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    /// Image sides to sweep; the preset default when empty.
    pub resolutions: Vec<usize>,
    pub folds: usize,
    pub leaky_smote: bool,
    pub dataset: DatasetOptions,
    /// CNN epochs; the preset recipe when `None`.
    pub epochs: Option<usize>,
    /// Forest size override for every random forest in the stack.
    pub forest_trees: Option<usize>,
}

impl TrainArgs {
    pub fn new(experiment: impl Into<String>, data: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            experiment: experiment.into(),
            data: data.into(),
            out: out.into(),
            seed: 0,
            resolutions: Vec::new(),
            folds: 5,
            leaky_smote: false,
            dataset: DatasetOptions::default(),
            epochs: None,
            forest_trees: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub artifacts: Vec<PathBuf>,
    pub reports: Vec<ExperimentReport>,
    pub table: String,
}

/// Runs a preset end to end on one dataset and writes one artifact per
/// trained model. CNN presets also write `<artifact>.history.csv`.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary, CliError> {
    let preset = Preset::by_id(&args.experiment).map_err(|e| CliError::Usage(e.to_string()))?;
    if args.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    let is_cnn = preset.model == PresetModel::Cnn;
    if !is_cnn && !args.resolutions.is_empty() {
        return Err(CliError::Usage(format!("{} is not an image experiment; --resolution does not apply", preset.id)));
    }
    if is_cnn && (args.leaky_smote || args.forest_trees.is_some()) {
        return Err(CliError::Usage(format!("{} trains a CNN; --leaky-smote and --forest-trees do not apply", preset.id)));
    }
    let dataset = load_dataset(preset, &args.data, &args.dataset)?;

    let outcomes: Vec<TrainOutcome> = match &dataset {
        Dataset::Frame(frame) => {
            let opts = TabularOptions {
                seed: args.seed,
                folds: args.folds,
                leaky_smote: args.leaky_smote,
                forest_trees: args.forest_trees,
                ..TabularOptions::default()
            };
            vec![train_tabular(preset, frame, &opts)?]
        }
        Dataset::Spectra { records, class_names } => sides(preset, args)
            .into_iter()
            .map(|side| train_raman(preset, records, class_names, &vision(args, side)))
            .collect::<Result<_, _>>()?,
        Dataset::Images { samples, class_names } => sides(preset, args)
            .into_iter()
            .map(|side| train_report_images(preset, samples, class_names, &vision(args, side)))
            .collect::<Result<_, _>>()?,
    };

    let sweep = outcomes.len() > 1;
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for outcome in outcomes {
        let path = match (sweep, outcome.report.resolution) {
            (true, Some(side)) => with_suffix(&args.out, &format!("-r{side}")),
            _ => args.out.clone(),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
        }
        let bytes = outcome.artifact.to_bytes().map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, bytes).map_err(|e| CliError::write(&path, e))?;
        if let Some(history) = &outcome.history {
            let hpath = path.with_extension("history.csv");
            std::fs::write(&hpath, history.to_csv()).map_err(|e| CliError::write(&hpath, e))?;
        }
        artifacts.push(path);
        reports.push(outcome.report);
    }
    let table = render_table(&reports);
    Ok(TrainSummary { artifacts, reports, table })
}

fn sides(preset: &Preset, args: &TrainArgs) -> Vec<usize> {
    if args.resolutions.is_empty() {
        preset.resolution.into_iter().collect()
    } else {
        args.resolutions.clone()
    }
}

fn vision(args: &TrainArgs, side: usize) -> VisionOptions {
    let defaults = VisionOptions::default();
    VisionOptions { seed: args.seed, epochs: args.epochs.unwrap_or(defaults.epochs), resolution: Some(side), ..defaults }
}

/// `dir/name.mdx` with `suffix` -> `dir/name{suffix}.mdx`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// Predicts one input with one artifact. `.json` inputs use the service
/// request format and go through the same handler; `.wav` and `.png` files
/// are passed as raw bytes.
pub fn cmd_predict(model_path: &Path, input_path: &Path) -> Result<PredictionResult, CliError> {
    let model = modelstore::load_with_checksum(model_path).map_err(|e| CliError::read(model_path, e))?;
    let bytes = std::fs::read(input_path).map_err(|e| CliError::read(input_path, e))?;
    let ext = input_path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
    let mode = model.artifact.mode;
    let raw = match ext.as_str() {
        "json" => None,
        "wav" => Some(ModeInput::Wav(bytes.clone())),
        "png" => Some(ModeInput::Png(bytes.clone())),
        other => return Err(CliError::Usage(format!("unsupported input file type {other:?}; use .json, .wav or .png"))),
    };
    let kind_ok = match (&raw, mode.input_kind()) {
        (None, _) | (Some(ModeInput::Wav(_)), InputKind::Audio) | (Some(ModeInput::Png(_)), InputKind::Image) => true,
        _ => false,
    };
    if !kind_ok {
        return Err(CliError::Data(format!("{} cannot be used with a {mode} model", input_path.display())));
    }
    match raw {
        Some(input) => Ok(predict_result(&model, &input)?),
        None => {
            let mut registry = Registry::new();
            registry.insert(model, model_path.display().to_string()).map_err(|e| CliError::Internal(e.to_string()))?;
            multidx_service::handle_predict(&registry, mode.as_str(), &bytes).map_err(CliError::from)
        }
    }
}

/// Loads every artifact in `model_dir` and serves until Ctrl-C or SIGTERM.
/// Unset arguments fall back to the environment.
pub fn cmd_serve(model_dir: Option<PathBuf>, port: Option<u16>) -> Result<(), CliError> {
    let env = Config::from_env().map_err(CliError::Usage)?;
    let config = Config { port: port.unwrap_or(env.port), model_dir: model_dir.or(env.model_dir), ..env };
    let registry = match &config.model_dir {
        Some(dir) => Registry::from_dir(dir).map_err(|e| CliError::Data(e.to_string()))?,
        None => Registry::new(),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async move {
        let addr = std::net::SocketAddr::from(([0, 0, 0, 0], config.port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Internal(format!("cannot listen on {addr}: {e}")))?;
        let modes: Vec<String> = registry.iter().map(|(m, model)| format!("{m} ({})", model.version())).collect();
        eprintln!("listening on {addr} with {} model(s): {}", registry.len(), modes.join(", "));
        let app = multidx_service::router(Arc::new(registry), config.cors_origin.as_deref());
        multidx_service::serve(listener, app, multidx_service::shutdown_signal())
            .await
            .map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("shut down");
        Ok(())
    })
}
