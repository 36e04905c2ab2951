use std::io;

use reductionlab_core::massdist::MassDistError;
use reductionlab_core::montecarlo::MonteCarloError;
use reductionlab_core::reduction::ReductionError;
use reductionlab_core::scenarios::ScenarioError;
use reductionlab_core::solidstate::SolidStateError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_STABLE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("stable superposition: {0}")]
    Stable(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema(_) => EXIT_SCHEMA,
            Self::Convergence(_) => EXIT_CONVERGENCE,
            Self::Stable(_) => EXIT_STABLE,
            Self::Other(_) => EXIT_OTHER,
        }
    }

    /// Error for a JSON document that failed to parse, with its position.
    pub fn json(path: &str, e: &serde_json::Error) -> Self {
        // Internally tagged documents are buffered before decoding and
        // lose their position.
        if e.line() == 0 {
            Self::Schema(format!("{path}: {e}"))
        } else {
            Self::Schema(format!("{path}:{}:{}: {e}", e.line(), e.column()))
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::NoDecay => Self::Stable(e.to_string()),
            ReductionError::MassDist(m) => m.into(),
            other => Self::Schema(other.to_string()),
        }
    }
}

impl From<MassDistError> for CliError {
    fn from(e: MassDistError) -> Self {
        match e {
            MassDistError::Convergence { .. } => Self::Convergence(e.to_string()),
            other => Self::Schema(other.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Reduction(r) => r.into(),
            other => Self::Schema(other.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Reduction(r) => r.into(),
            other => Self::Schema(other.to_string()),
        }
    }
}

impl From<SolidStateError> for CliError {
    fn from(e: SolidStateError) -> Self {
        Self::Schema(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Other(e.to_string())
    }
}
