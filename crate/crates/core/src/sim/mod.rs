//! Multi-period simulation of the interbank market under the three tax
//! regimes, with network statistics recorded every period.

mod config;
mod driver;
pub mod network;

pub use config::{Policy, ScenarioConfig, Uniform};
pub use driver::{
    Distributions, OptimizerStats, PolicyRun, ProbabilityRecord, ScenarioOutput, Simulation,
    TimeSeriesRecord,
};

use alloc::string::String;

use thiserror::Error;

use crate::cascade::CascadeError;
use crate::contracts::ContractError;
use crate::domain::DomainError;
use crate::matching::MatchingError;
use crate::tax::TaxError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("power iteration did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("the systemic risk tax did not realize its designated matching in period {period}")]
    TaxDidNotPin { period: u64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Tax(#[from] TaxError),
}

impl SimError {
    pub(crate) fn invalid(field: &'static str, reason: String) -> Self {
        SimError::InvalidConfig { field, reason }
    }
}
