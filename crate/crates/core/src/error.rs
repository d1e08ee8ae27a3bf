use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite command at sample {index}")]
    NonFiniteCommand { index: usize },

    #[error("propellant depleted at sample {index} (t = {time:.3} s)")]
    Depleted { index: usize, time: f64 },

    #[error("insufficient history: index {index} < history length {n}")]
    InsufficientHistory { index: usize, n: usize },

    #[error("history length mismatch: expected {expected}, found {found}")]
    HistoryMismatch { expected: usize, found: usize },

    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("coordinate descent did not converge after {sweeps} sweeps (output {output}, KKT residual {kkt_residual:.3e})")]
    NotConverged { output: usize, sweeps: usize, kkt_residual: f64 },

    #[error("fit failed at history {n}, fold {fold}: {source}")]
    FoldFailed { n: usize, fold: usize, #[source] source: Box<Error> },

    #[error("rollout diverged at sample {index} (t = {time:.3} s)")]
    Diverged { index: usize, time: f64 },

    #[error("{path}: {source}")]
    Io { path: PathBuf, #[source] source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, #[source] source: serde_json::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, #[source] source: csv::Error },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidInput(_) => "invalid_input",
            Error::NonFiniteCommand { .. } => "non_finite_command",
            Error::Depleted { .. } => "depleted",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::HistoryMismatch { .. } => "history_mismatch",
            Error::WidthMismatch { .. } => "width_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NotConverged { .. } => "not_converged",
            Error::FoldFailed { .. } => "fold_failed",
            Error::Diverged { .. } => "diverged",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
