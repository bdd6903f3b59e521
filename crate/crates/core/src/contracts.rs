//! Loan pricing: exogenous and contagion default probabilities, the fair
//! risk premium, and both sides' payoffs.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cascade::{run_cascade, CascadeError};
use crate::domain::{BankId, NetExposureMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractError {
    #[error("aggregate hazard rate is zero; exogenous default probabilities are undefined")]
    ZeroAggregateHazard,
    #[error("hazard rate {gamma} is invalid for aggregate hazard {aggregate}")]
    InvalidHazard { gamma: f64, aggregate: f64 },
    #[error("default probability {0} is outside [0, 1)")]
    InvalidProbability(f64),
    #[error("loan maturity must be at least one period")]
    ZeroMaturity,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

/// Probability that bank `j` is the first bank to fail exogenously within
/// `maturity` periods: `(1 - exp(-gamma_agg * S)) * gamma_j / gamma_agg`.
pub fn exogenous_default_prob(
    gamma_j: f64,
    gamma_agg: f64,
    maturity: u32,
) -> Result<f64, ContractError> {
    if maturity == 0 {
        return Err(ContractError::ZeroMaturity);
    }
    if gamma_agg == 0.0 {
        return Err(ContractError::ZeroAggregateHazard);
    }
    if !(gamma_j >= 0.0 && gamma_agg.is_finite() && gamma_j <= gamma_agg * (1.0 + 1e-12)) {
        return Err(ContractError::InvalidHazard {
            gamma: gamma_j,
            aggregate: gamma_agg,
        });
    }
    let mass = -libm::expm1(-gamma_agg * f64::from(maturity));
    Ok(mass * gamma_j / gamma_agg)
}

/// Exogenous default probabilities of every bank over `maturity` periods.
///
/// When every hazard rate is zero nobody can fail and the vector is all
/// zeros; [`exogenous_default_prob`] itself refuses that case.
pub fn exogenous_default_probs(hazards: &[f64], maturity: u32) -> Result<Vec<f64>, ContractError> {
    if maturity == 0 {
        return Err(ContractError::ZeroMaturity);
    }
    if let Some(&bad) = hazards.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(ContractError::InvalidHazard {
            gamma: bad,
            aggregate: hazards.iter().sum(),
        });
    }
    let agg: f64 = hazards.iter().sum();
    if agg == 0.0 {
        return Ok(vec![0.0; hazards.len()]);
    }
    hazards
        .iter()
        .map(|&g| exogenous_default_prob(g, agg, maturity))
        .collect()
}

/// One-period failure mass `1 - exp(-gamma_agg)`, i.e. the sum of all
/// one-period exogenous default probabilities.
pub fn first_failure_mass(hazards: &[f64]) -> f64 {
    -libm::expm1(-hazards.iter().sum::<f64>())
}

/// Premium `h` that makes a lender at base rate `r` indifferent between a
/// loan defaulting with probability `rho` over `maturity` periods and a
/// riskless one.
pub fn risk_premium(base_rate: f64, rho: f64, maturity: u32) -> Result<f64, ContractError> {
    if maturity == 0 {
        return Err(ContractError::ZeroMaturity);
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(ContractError::InvalidProbability(rho));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let survival = libm::pow(1.0 - rho, 1.0 / f64::from(maturity));
    Ok((1.0 + base_rate) / survival - 1.0 - base_rate)
}

/// Lender's expected excess payoff over a riskless loan.
pub fn lender_payoff(base_rate: f64, premium: f64, rho: f64, maturity: u32) -> f64 {
    let growth = (1.0 + base_rate + premium) / (1.0 + base_rate);
    (1.0 - rho) * libm::pow(growth, f64::from(maturity)) - 1.0
}

/// Borrower's payoff from funding at `lender_rate + premium + tax` instead
/// of paying its own deposit rate.
pub fn borrower_payoff(
    own_rate: f64,
    lender_rate: f64,
    premium: f64,
    tax: f64,
    maturity: u32,
) -> f64 {
    let s = f64::from(maturity);
    1.0 - libm::pow(1.0 + lender_rate + premium + tax, s) / libm::pow(1.0 + own_rate, s)
}

/// Contagion default probability of every bank on the prior network.
///
/// Entry `j` is the total exogenous mass `rho_bar[k]` of the seeds `k != j`
/// whose failure drags `j` down. One cascade per seed.
pub fn endogenous_default_probs(
    prior: &NetExposureMatrix,
    equities: &[f64],
    rho_bar: &[f64],
) -> Result<Vec<f64>, ContractError> {
    let n = prior.size();
    if rho_bar.len() != n {
        return Err(ContractError::DimensionMismatch {
            expected: n,
            found: rho_bar.len(),
        });
    }
    let mut q = vec![0.0; n];
    for k in 0..n {
        if rho_bar[k] == 0.0 {
            continue;
        }
        let state = run_cascade(prior, equities, &[BankId(k)])?;
        for (j, qj) in q.iter_mut().enumerate() {
            if j != k && state.bankrupt[j] {
                *qj += rho_bar[k];
            }
        }
    }
    for qj in &mut q {
        *qj = qj.min(1.0);
    }
    Ok(q)
}

/// Contagion default probability of a single bank `j`.
pub fn endogenous_default_prob(
    j: BankId,
    prior: &NetExposureMatrix,
    equities: &[f64],
    rho_bar: &[f64],
) -> Result<f64, ContractError> {
    let n = prior.size();
    if j.index() >= n {
        return Err(ContractError::DimensionMismatch {
            expected: n,
            found: j.index() + 1,
        });
    }
    if rho_bar.len() != n {
        return Err(ContractError::DimensionMismatch {
            expected: n,
            found: rho_bar.len(),
        });
    }
    let mut q = 0.0;
    for k in (0..n).filter(|&k| k != j.index() && rho_bar[k] != 0.0) {
        if run_cascade(prior, equities, &[BankId(k)])?.bankrupt[j.index()] {
            q += rho_bar[k];
        }
    }
    Ok(q.min(1.0))
}

/// How lenders account for contagion when pricing a loan.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BeliefMode {
    /// Exogenous risk plus contagion risk on last period's network.
    Full,
    /// Everybody assumes the same contagion probability.
    CommonPrior(f64),
    /// Contagion is ignored altogether.
    #[default]
    Naive,
}

/// Total default probability under `mode`.
pub fn total_default_prob(rho_bar: f64, q: f64, mode: BeliefMode) -> f64 {
    match mode {
        BeliefMode::Full => rho_bar + (1.0 - rho_bar) * q,
        BeliefMode::CommonPrior(q_bar) => rho_bar + (1.0 - rho_bar) * q_bar,
        BeliefMode::Naive => rho_bar,
    }
}

/// Per-bank default probabilities for one period.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DefaultProbabilities {
    /// Exogenous probability over the loan maturity.
    pub exogenous: Vec<f64>,
    /// Contagion probability on the prior network.
    pub endogenous: Vec<f64>,
    /// What lenders price with, given `mode`.
    pub total: Vec<f64>,
    pub mode: BeliefMode,
}

impl DefaultProbabilities {
    /// Computes all three vectors from the prior network and equities.
    pub fn compute(
        prior: &NetExposureMatrix,
        equities: &[f64],
        hazards: &[f64],
        maturity: u32,
        mode: BeliefMode,
    ) -> Result<Self, ContractError> {
        let exogenous = exogenous_default_probs(hazards, maturity)?;
        let endogenous = endogenous_default_probs(prior, equities, &exogenous)?;
        let total = exogenous
            .iter()
            .zip(&endogenous)
            .map(|(&rb, &q)| total_default_prob(rb, q, mode))
            .collect();
        Ok(DefaultProbabilities {
            exogenous,
            endogenous,
            total,
            mode,
        })
    }
}

/// Quoted rates for every (lender, borrower) pair of a market.
///
/// Rows follow `lenders`, columns follow `borrowers`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuoteSet {
    pub lenders: Vec<BankId>,
    pub borrowers: Vec<BankId>,
    pub base_rates: Vec<f64>,
    pub premia: Vec<f64>,
    pub tax: Vec<f64>,
}

impl QuoteSet {
    /// Fair quotes: `r_i + h(r_i, rho_j, S)`, untaxed.
    ///
    /// `base_rates` is indexed like `lenders`, `rho` like `borrowers`.
    pub fn fair(
        lenders: Vec<BankId>,
        borrowers: Vec<BankId>,
        base_rates: Vec<f64>,
        rho: &[f64],
        maturity: u32,
    ) -> Result<Self, ContractError> {
        if base_rates.len() != lenders.len() {
            return Err(ContractError::DimensionMismatch {
                expected: lenders.len(),
                found: base_rates.len(),
            });
        }
        if rho.len() != borrowers.len() {
            return Err(ContractError::DimensionMismatch {
                expected: borrowers.len(),
                found: rho.len(),
            });
        }
        let mut premia = Vec::with_capacity(lenders.len() * borrowers.len());
        for &r in &base_rates {
            for &p in rho {
                premia.push(risk_premium(r, p, maturity)?);
            }
        }
        let tax = vec![0.0; premia.len()];
        Ok(QuoteSet {
            lenders,
            borrowers,
            base_rates,
            premia,
            tax,
        })
    }

    /// Same quotes with a tax mark-up per pair, laid out like `premia`.
    pub fn with_tax(&self, tax: Vec<f64>) -> Result<Self, ContractError> {
        if tax.len() != self.premia.len() {
            return Err(ContractError::DimensionMismatch {
                expected: self.premia.len(),
                found: tax.len(),
            });
        }
        Ok(QuoteSet { tax, ..self.clone() })
    }

    #[inline]
    fn at(&self, lender: usize, borrower: usize) -> usize {
        lender * self.borrowers.len() + borrower
    }

    /// Untaxed rate `r_i + h_ij` for lender and borrower positions.
    pub fn untaxed_rate(&self, lender: usize, borrower: usize) -> f64 {
        self.base_rates[lender] + self.premia[self.at(lender, borrower)]
    }

    pub fn premium(&self, lender: usize, borrower: usize) -> f64 {
        self.premia[self.at(lender, borrower)]
    }

    pub fn tax_rate(&self, lender: usize, borrower: usize) -> f64 {
        self.tax[self.at(lender, borrower)]
    }

    /// Rate the borrower actually pays, including tax.
    pub fn rate(&self, lender: usize, borrower: usize) -> f64 {
        self.untaxed_rate(lender, borrower) + self.tax[self.at(lender, borrower)]
    }

    pub fn is_taxed(&self) -> bool {
        self.tax.iter().any(|t| *t != 0.0)
    }
}
