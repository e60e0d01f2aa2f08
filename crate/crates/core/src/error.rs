use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("row unimputable: row {0} has no observed cells")]
    RowUnimputable(usize),
    #[error("insufficient minority samples: class {class} has {count} sample(s)")]
    InsufficientMinority { class: usize, count: usize },
    #[error("undefined correlation: need at least 2 rows, got {0}")]
    UndefinedCorrelation(usize),
    #[error("unknown feature(s): {0}")]
    UnknownFeature(String),
    #[error("duplicate feature: {0}")]
    DuplicateFeature(String),
    #[error("empty partition: {0}")]
    EmptyPartition(&'static str),
    #[error("degenerate labels: training set contains a single class")]
    DegenerateLabels,
    #[error("dataset is unlabeled")]
    Unlabeled,
    #[error("missing values present in column {0}")]
    MissingValues(String),
    #[error("width mismatch: expected {expected} columns, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("base learner {index} failed: {source}")]
    BaseLearner {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("malformed wav: {0}")]
    MalformedWav(String),
    #[error("clip too short: {got} samples, need at least {need}")]
    ClipTooShort { got: usize, need: usize },
    #[error("no tracing region: {0}")]
    NoTracingRegion(String),
    #[error("not a model file")]
    NotAModelFile,
    #[error("unsupported version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("image: {0}")]
    Image(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the caller's data rather than by this library.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
