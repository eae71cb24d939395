use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall into three families that the command-line front end maps to
/// distinct exit codes: input/validation problems, numerical failures and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undefined correlation: series {0} has zero variance")]
    UndefinedCorrelation(&'static str),

    #[error("size error: {0}")]
    Size(String),

    #[error("graph is disconnected ({} components): {components:?}", components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),

    #[error("vertex sets differ: {0} vs {1}")]
    VertexMismatch(usize, usize),

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("degenerate spectrum: leading eigenvalue tied across layers {layers:?}")]
    DegenerateSpectrum { layers: Vec<usize> },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::InsufficientData(_)
                | Error::Domain(_)
                | Error::Config(_)
                | Error::UndefinedCorrelation(_)
                | Error::Size(_)
                | Error::Disconnected { .. }
                | Error::IsolatedVertex(_)
                | Error::VertexMismatch(..)
                | Error::SeriesTooShort { .. }
        )
    }

    /// True for solver failures (non-convergence, degenerate spectra).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_) | Error::DegenerateSpectrum { .. } | Error::Infeasible(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
