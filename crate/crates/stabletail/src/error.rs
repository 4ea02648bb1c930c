//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Too few observations for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Zero-variance input where a nondegenerate sample is required.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A numeric intermediate left its valid domain (e.g. an empirical
    /// characteristic-function modulus outside (0, 1)).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Malformed or inconsistent input data during ingestion.
    #[error("ingest error: {0}")]
    Ingest(String),

    /// Invalid experiment or CLI configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Append provenance (e.g. "kind=… replicate=…") to the message so a
    /// failure deep inside a Monte Carlo run names the replicate that caused
    /// it. Wrapped I/O and CSV errors fold into ingest errors to take the
    /// annotation.
    pub fn with_context(self, ctx: String) -> Error {
        match self {
            Error::Parameter(m) => Error::Parameter(format!("{m} [{ctx}]")),
            Error::InsufficientData(m) => Error::InsufficientData(format!("{m} [{ctx}]")),
            Error::DegenerateSample(m) => Error::DegenerateSample(format!("{m} [{ctx}]")),
            Error::NumericDomain(m) => Error::NumericDomain(format!("{m} [{ctx}]")),
            Error::Ingest(m) => Error::Ingest(format!("{m} [{ctx}]")),
            Error::Config(m) => Error::Config(format!("{m} [{ctx}]")),
            Error::Io(e) => Error::Ingest(format!("{e} [{ctx}]")),
            Error::Csv(e) => Error::Ingest(format!("{e} [{ctx}]")),
        }
    }
}
