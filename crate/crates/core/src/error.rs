use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("axis {axis} has zero range")]
    ZeroRange { axis: usize },

    #[error("no occupied bins")]
    NoOccupiedBins,

    #[error("second-order moment is ill-conditioned (eigenvalue ratio {ratio:e})")]
    IllConditioned { ratio: f64 },

    #[error("non-finite moments in bin")]
    NonFiniteMoments,

    #[error("singular matrix")]
    Singular,

    #[error("non-finite value at row {row}, column '{column}'")]
    NonFiniteValue { row: usize, column: String },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("unparseable value '{value}' at row {row}, column '{column}'")]
    Parse { row: usize, column: String, value: String },

    #[error("non-uniform timestamps at row {row}")]
    NonUniformTime { row: usize },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("unsupported audio encoding: {0}")]
    UnsupportedAudio(String),

    #[error("sample {index} (value {value}) outside transform domain [{lo}, {hi}]")]
    OutsideDomain { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("transform is not strictly monotonic on [{lo}, {hi}]")]
    NotMonotone { lo: f64, hi: f64 },

    #[error("zero variance in channel {channel}")]
    ZeroVariance { channel: usize },

    #[error("insufficient overlap: {found} jointly valid samples, need {needed}")]
    InsufficientOverlap { found: usize, needed: usize },

    #[error("frame field is empty")]
    EmptyField,

    #[error("initial state lies outside the frame field's grid")]
    OutsideGrid,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Attaches a pipeline stage name to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
