//! The per-period liquidity market: who lends, who borrows, who prefers
//! whom, and which matchings are stable.
//!
//! Borrowers rank lenders by the rate they would pay and accept any lender
//! quoting strictly below their reservation rate. In the base model lenders
//! are indifferent between all borrowers (fair premia make every loan worth
//! the same as the riskless asset); in [`LenderMode::Strict`] they rank
//! borrowers by default probability and prefer any borrower to not lending.
//!
//! Internally a matching is an *assignment*: one `Option<usize>` per borrower
//! position holding the lender position it is matched with.

mod enumerate;
mod market;
mod multiround;
mod select;
mod stability;
mod strict;

pub use enumerate::{
    enumerate_equilibria, feasible_assignments, for_each_assignment, satisfies_characterization,
    stable_matchings, ENUMERATION_LIMIT,
};
pub use market::{draw_shocks, LiquidityMarket, MarketSides, PreferenceList};
pub use multiround::{draw_sized_shocks, multi_round_matching, MultiRoundOutcome, WeightedEdge};
pub use select::{select_equilibrium, select_with_order, serial_dictatorship};
pub use stability::{is_stable, is_stable_assignment, Stability, Violation};
pub use strict::strict_stable_matching;

use alloc::vec::Vec;

use thiserror::Error;

use crate::contracts::ContractError;
use crate::domain::BankId;

/// Lender position per borrower position.
pub type Assignment = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchingError {
    #[error("bank {0} is both a lender and a borrower")]
    OverlappingSides(BankId),
    #[error("bank {0} appears twice on the same side of the market")]
    DuplicateBank(BankId),
    #[error("bank {0} is not a lender in this market")]
    UnknownLender(BankId),
    #[error("bank {0} is not a borrower in this market")]
    UnknownBorrower(BankId),
    #[error("bank {0} is matched more than once")]
    MatchedTwice(BankId),
    #[error("rate {rate} for lender {lender} and borrower {borrower} is not finite")]
    InvalidRate {
        lender: BankId,
        borrower: BankId,
        rate: f64,
    },
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("market with {lenders} lenders and {borrowers} borrowers exceeds the exhaustive limit of {limit} per side")]
    TooLarge {
        lenders: usize,
        borrowers: usize,
        limit: usize,
    },
    #[error("selected matching is not stable: {0:?}")]
    SelectionUnstable(Violation),
    #[error("operation needs lenders with strict preferences")]
    NotStrict,
    #[error("shock probability {0} is outside [0, 1]")]
    InvalidShockProbability(f64),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

/// How lenders rank borrowers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LenderMode {
    /// Every borrower (and not lending at all) is worth the same.
    #[default]
    Indifferent,
    /// Lower default probability is strictly better, and any borrower beats
    /// not lending.
    Strict,
}

/// A set of lender-borrower pairs; every other bank is matched to itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matching {
    /// `(lender, borrower)`, sorted by borrower.
    pairs: Vec<(BankId, BankId)>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching { pairs: Vec::new() }
    }

    /// Builds a matching from `(lender, borrower)` pairs, rejecting any bank
    /// that appears twice.
    pub fn from_pairs(pairs: &[(BankId, BankId)]) -> Result<Self, MatchingError> {
        let mut seen: Vec<BankId> = Vec::with_capacity(2 * pairs.len());
        for &(l, b) in pairs {
            for x in [l, b] {
                if seen.contains(&x) {
                    return Err(MatchingError::MatchedTwice(x));
                }
                seen.push(x);
            }
        }
        let mut pairs = pairs.to_vec();
        pairs.sort_by_key(|&(l, b)| (b, l));
        Ok(Matching { pairs })
    }

    pub fn pairs(&self) -> &[(BankId, BankId)] {
        &self.pairs
    }

    /// Number of loans.
    pub fn volume(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partner of `bank`, or `bank` itself when unmatched.
    pub fn mate(&self, bank: BankId) -> BankId {
        self.pairs
            .iter()
            .find_map(|&(l, b)| {
                if l == bank {
                    Some(b)
                } else if b == bank {
                    Some(l)
                } else {
                    None
                }
            })
            .unwrap_or(bank)
    }

    pub fn lender_of(&self, borrower: BankId) -> Option<BankId> {
        self.pairs.iter().find(|p| p.1 == borrower).map(|p| p.0)
    }

    /// Dense form over `n` banks: `mate[x]` is the partner of `x`.
    pub fn involution(&self, n: usize) -> Vec<BankId> {
        let mut mate: Vec<BankId> = (0..n).map(BankId).collect();
        for &(l, b) in &self.pairs {
            mate[l.index()] = b;
            mate[b.index()] = l;
        }
        mate
    }
}
