//! Multimodal diagnostic toolkit.
//!
//! Every pipeline in this crate is a pure function of its inputs plus an
//! explicit seed. Trained models are immutable and safe to share between
//! threads.
//!
//! * [`tabular`]: CSV ingestion, one-hot encoding, KNN imputation, SMOTE,
//!   standard scaling, Pearson correlation and seeded splitting.
//! * [`learners`]: seven classical classifiers written from scratch.
//! * [`stacking`]: two-layer stacked generalization over those learners.
//! * [`metrics`]: confusion-matrix statistics.
//! * [`audio`]: WAV decoding and hand-crafted cough features.
//! * [`imaging`]: spectrum rasterization and ECG report preprocessing.
//! * [`cnn`]: a small trainable convolutional network.
//! * [`modelstore`]: the `.mdx` artifact container.
//! * [`presets`] and [`pipeline`]: the experiment configurations and the
//!   end-to-end train/predict paths shared by the CLI and the service.
//! * [`synthetic`]: seeded stand-in datasets for every mode.

pub mod audio;
pub mod cnn;
pub mod error;
pub mod imaging;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod modelstore;
pub mod pipeline;
pub mod presets;
pub mod rng;
pub mod stacking;
pub mod synthetic;
pub mod tabular;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use presets::{Mode, Preset};
