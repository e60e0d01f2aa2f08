use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multidx_cli::{cmd_predict, cmd_serve, cmd_train, CliError, DatasetOptions, TrainArgs};

#[derive(Parser)]
#[command(name = "multidx", version, about = "Train, evaluate, predict with and serve multimodal diagnostic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an experiment preset, print its metrics table and write the artifact(s).
    Train {
        /// Preset id: exp1, exp2, exp31, exp32, exp4, exp5, exp61 or exp62.
        #[arg(long)]
        experiment: String,
        /// Dataset CSV file or class-folder directory.
        #[arg(long)]
        data: PathBuf,
        /// Output `.mdx` path. Resolution sweeps add `-r<side>` before the extension.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image side(s) for image presets, e.g. `32,64,128,256,512,800`.
        #[arg(long, value_delimiter = ',')]
        resolution: Vec<usize>,
        /// Cross-validation folds for the stacking meta-features.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Oversample before the train/test split instead of after it.
        #[arg(long)]
        leaky_smote: bool,
        /// Column schema JSON (default: `<data>.schema.json` when present).
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Label column name (default `label`).
        #[arg(long)]
        label: Option<String>,
        /// Class names, negative first, comma separated.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        /// CNN training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Trees per random forest.
        #[arg(long)]
        forest_trees: Option<usize>,
        /// Also write the metrics as JSON to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict one input (`.json` request body, `.wav` or `.png`) and print the result as JSON.
    Predict {
        model: PathBuf,
        input: PathBuf,
    },
    /// Serve every artifact in a directory over HTTP.
    Serve {
        /// Defaults to MULTIDX_PORT, then 8080.
        #[arg(long)]
        port: Option<u16>,
        /// Defaults to MULTIDX_MODEL_DIR; no models when neither is set.
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            experiment,
            data,
            out,
            seed,
            resolution,
            folds,
            leaky_smote,
            schema,
            label,
            classes,
            epochs,
            forest_trees,
            report,
        } => {
            let args = TrainArgs {
                seed,
                resolutions: resolution,
                folds,
                leaky_smote,
                dataset: DatasetOptions { schema, label, classes },
                epochs,
                forest_trees,
                ..TrainArgs::new(experiment, data, out)
            };
            let summary = cmd_train(&args)?;
            print!("{}", summary.table);
            for path in &summary.artifacts {
                eprintln!("wrote {}", path.display());
            }
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&summary.reports).map_err(|e| CliError::Internal(e.to_string()))?;
                std::fs::write(&path, json + "\n")
                    .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Predict { model, input } => {
            let result = cmd_predict(&model, &input)?;
            println!("{}", serde_json::to_string(&result).map_err(|e| CliError::Internal(e.to_string()))?);
            Ok(())
        }
        Command::Serve { port, model_dir } => cmd_serve(model_dir, port),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
