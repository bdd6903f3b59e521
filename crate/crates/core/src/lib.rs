//! Interbank network laboratory.
//!
//! Banks receive unit liquidity shocks each period and trade them on a
//! two-sided market where borrowers rank lenders by quoted rate and lenders
//! price default risk into a fair premium. The resulting loans accumulate
//! into a net exposure matrix over which insolvency cascades, systemic
//! impact and expected systemic loss (ESL) are computed. The [`tax`] module
//! compares an untaxed market, a uniform (Tobin-like) mark-up and a
//! transaction-specific systemic risk tax (SRT) that pins a chosen
//! low-ESL matching as the unique equilibrium.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! anything touching the filesystem live in the `srtlab` companion crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cascade;
pub mod contracts;
pub mod domain;
pub mod fixtures;
pub mod matching;
pub mod sim;
pub mod tax;

mod error;

pub use error::Error;

pub use cascade::{CascadeError, CascadeState, Status};
pub use contracts::{BeliefMode, ContractError, DefaultProbabilities, QuoteSet};
pub use domain::{BankId, BankState, DomainError, Loan, LoanBook, NetExposureMatrix};
pub use matching::{LenderMode, LiquidityMarket, MarketSides, Matching, MatchingError, Stability};
pub use sim::{Policy, ScenarioConfig, SimError, Simulation, TimeSeriesRecord};
pub use tax::{SrtParams, SrtSolution, TaxError, TaxKind, TaxMatrix};
