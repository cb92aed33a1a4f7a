use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the stage that produces them; the CLI maps them
/// onto exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("waveform parse error at line {line}: {msg}")]
    WaveformParse { line: usize, msg: String },

    #[error("waveform slice {slice}: {msg}")]
    BoundViolation { slice: usize, msg: String },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("decay step too large: rate * dt = {product} >= 1 (reduce the step or add Trotter steps)")]
    StepSize { product: f64 },

    #[error("measurement drain requested but disabled in the decay parameters")]
    DrainDisabled,

    #[error("negative twirled probability {value:e} for {label}")]
    NegativeProbability { label: String, value: f64 },

    #[error("expected {expected} pair channels, got {got}")]
    PairCount { expected: usize, got: usize },

    #[error("pauli strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("cannot parse pauli string {0:?}")]
    PauliParse(String),

    #[error("distribution has zero probability on {0} support entries (log divergence)")]
    ZeroProbability(usize),

    #[error("empty trace")]
    EmptyTrace,

    #[error("structure factor at k != 0 vanished; correlation length diverges")]
    DivergentCorrelationLength,

    #[error("no crossing found: {0}")]
    NoCrossing(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("insufficient loop statistics: {0}")]
    LoopStatistics(String),

    #[error("query point outside the phase diagram: {0}")]
    OutsideDiagram(String),

    #[error("invalid configuration at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error("digest mismatch for {path}: expected {expected}, found {found}")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime, 3 undetermined result.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WaveformParse { .. }
            | Error::BoundViolation { .. }
            | Error::Geometry(_)
            | Error::StepSize { .. }
            | Error::DrainDisabled
            | Error::PairCount { .. }
            | Error::LengthMismatch(..)
            | Error::PauliParse(_)
            | Error::Config { .. }
            | Error::InvalidArgument(_) => 1,
            Error::NoCrossing(_)
            | Error::Bracket(_)
            | Error::LoopStatistics(_)
            | Error::OutsideDiagram(_) => 3,
            _ => 2,
        }
    }

    /// Short machine-readable tag used in the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::WaveformParse { .. } => "waveform_parse",
            Error::BoundViolation { .. } => "bound_violation",
            Error::Geometry(_) => "geometry",
            Error::StepSize { .. } => "step_size",
            Error::DrainDisabled => "drain_disabled",
            Error::NegativeProbability { .. } => "negative_probability",
            Error::PairCount { .. } => "pair_count",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::PauliParse(_) => "pauli_parse",
            Error::ZeroProbability(_) => "zero_probability",
            Error::EmptyTrace => "empty_trace",
            Error::DivergentCorrelationLength => "divergent_correlation_length",
            Error::NoCrossing(_) => "no_crossing",
            Error::Bracket(_) => "bracket",
            Error::LoopStatistics(_) => "loop_statistics",
            Error::OutsideDiagram(_) => "outside_diagram",
            Error::Config { .. } => "config",
            Error::Checkpoint { .. } => "checkpoint",
            Error::DigestMismatch { .. } => "digest_mismatch",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
