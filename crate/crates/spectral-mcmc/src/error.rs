//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any part of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Structural problems in an input file (ragged rows, bad header, ...).
    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },

    /// A cell that is neither numeric nor a recognised missing token.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// Missing value at the first or last observation of a column.
    #[error("column {col} has a missing endpoint; interpolation needs observed endpoints")]
    MissingEndpoint { col: usize },

    /// Series still contains missing values where none are allowed.
    #[error("series contains missing values; interpolate before this step")]
    MissingValues,

    /// Series must be demeaned before spectral analysis.
    #[error("series is not demeaned; call demean() first")]
    NotDemeaned,

    #[error("input too short: T = {t}, need T >= {min}")]
    InputTooShort { t: usize, min: usize },

    /// Model spectral density is numerically singular.
    #[error("singular spectral density{}", match .freq_index { Some(i) => format!(" at frequency index {i}"), None => String::new() })]
    SingularSpectrum { freq_index: Option<usize> },

    /// Parameter or argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimension mismatch between a parameter vector and a model shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// Inverse of the stationarity map applied outside its domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Degenerate input (constant column, constant chain, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Non-finite value at a finite-difference stencil point.
    #[error("non-finite log-likelihood at stencil point for coordinate {coord}")]
    Stencil { coord: usize },

    /// Filter truncation length required to meet the tail bound is too large.
    #[error(
        "tempered filter needs {needed} terms to meet the tail bound; \
         increase lambda or set an explicit truncation"
    )]
    Truncation { needed: usize },

    #[error("empty subsample: m must be at least 1")]
    EmptySample,

    #[error("partition error: {0}")]
    Partition(String),

    /// Optimizer failed to satisfy its convergence tolerances.
    #[error("optimizer did not converge; best value found: {best}")]
    Convergence { best: f64 },

    #[error("initialization failed: {0}")]
    Initialization(String),

    /// Loss of positive definiteness or similar conditioning failure.
    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) => 2,
            Error::Io(_)
            | Error::Format { .. }
            | Error::Parse { .. }
            | Error::MissingEndpoint { .. }
            | Error::MissingValues
            | Error::NotDemeaned
            | Error::InputTooShort { .. }
            | Error::Data(_) => 3,
            _ => 4,
        }
    }
}
