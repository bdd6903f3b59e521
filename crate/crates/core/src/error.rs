use thiserror::Error;

use crate::cascade::CascadeError;
use crate::contracts::ContractError;
use crate::domain::DomainError;
use crate::matching::MatchingError;
use crate::sim::SimError;
use crate::tax::TaxError;

/// Any error the crate can produce.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
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
    #[error(transparent)]
    Sim(#[from] SimError),
}
