//! Experiment pipeline: configuration, persistence, orchestration, and
//! report generation over the influence workbench.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod store;

use loi_core::allocator::AllocError;
use loi_core::eval::EvalError;
use loi_core::game::map::MapError;
use loi_core::game::payoff::PayoffError;
use loi_core::loi::LoIError;
use loi_core::pool::PoolError;
use loi_core::stats::StatError;
use loi_core::trainer::TrainError;

/// Errors carry the process exit code: 2 for configuration problems, 3 for
/// data and validation failures, 4 for numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Config(format!("map error: {e}"))
    }
}

impl From<PayoffError> for CliError {
    fn from(e: PayoffError) -> Self {
        CliError::Config(format!("payoff error: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        CliError::Config(format!("training error: {e}"))
    }
}

impl From<PoolError> for CliError {
    fn from(e: PoolError) -> Self {
        CliError::Data(format!("checkpoint pool error: {e}"))
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            // Absent baseline under requested normalization is a setup
            // mistake; degenerate numbers are numerical failures.
            EvalError::MissingBaseline | EvalError::BadConfig(_) | EvalError::BadFraction(_) => {
                CliError::Config(format!("evaluation error: {e}"))
            }
            EvalError::ZeroBaseline | EvalError::NonFinite | EvalError::ConstantInput => {
                CliError::Numeric(format!("evaluation error: {e}"))
            }
            other => CliError::Data(format!("evaluation error: {other}")),
        }
    }
}

impl From<LoIError> for CliError {
    fn from(e: LoIError) -> Self {
        match e {
            LoIError::Params(_) | LoIError::BadBinWidth(_) => {
                CliError::Config(format!("influence estimation error: {e}"))
            }
            LoIError::NonFiniteSample(_) => {
                CliError::Numeric(format!("influence estimation error: {e}"))
            }
            other => CliError::Data(format!("influence estimation error: {other}")),
        }
    }
}

impl From<StatError> for CliError {
    fn from(e: StatError) -> Self {
        match e {
            StatError::NonFinite
            | StatError::ZeroWithinVariance
            | StatError::ZeroPooledVariance
            | StatError::OutOfRange(_)
            | StatError::NoConvergence => CliError::Numeric(format!("statistics error: {e}")),
            other => CliError::Data(format!("statistics error: {other}")),
        }
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        match e {
            AllocError::NonFinite(_) => CliError::Numeric(format!("allocation error: {e}")),
            other => CliError::Data(format!("allocation error: {other}")),
        }
    }
}
