//! Command-line front end: file ingestion, run configuration, reports and
//! subcommand dispatch.

pub mod app;
pub mod config;
pub mod ingest;
pub mod report;

use thiserror::Error;

use crate::crisis::SimError;
use crate::portfolio::PortfolioError;
use crate::pricing::PricingError;
use crate::rate_model::RateError;
use crate::sources::EstimatorError;
use ingest::IngestError;

/// Exit code for bad flags, bad files and failed validation.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical failures on valid input.
pub const EXIT_NUMERICAL: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) | CliError::Output(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PortfolioError> for CliError {
    fn from(e: PortfolioError) -> Self {
        match e {
            PortfolioError::DegenerateTangency { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}
