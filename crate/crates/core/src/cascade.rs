//! Insolvency cascades on a net exposure matrix, systemic impact and
//! expected systemic loss.
//!
//! A failing bank wipes out its net borrowing from each creditor in a single
//! step and then goes inactive, so losses never reverberate. There is no
//! recovery on defaulted exposures.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::domain::{BankId, NetExposureMatrix};

/// Relative tolerance of the failure test, scaled by the largest initial
/// equity.
pub const FAILURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("a cascade needs at least one seed bank")]
    EmptySeeds,
    #[error("bank {bank} has negative equity {value}")]
    NegativeEquity { bank: BankId, value: f64 },
    #[error("seed bank {0} is out of range")]
    UnknownBank(BankId),
    #[error("expected {expected} equities, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Healthy,
    Failing,
    Inactive,
}

/// Where the lost equity went.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossLedger {
    /// Initial equity of the seed banks.
    pub seed_equity: f64,
    /// Initial equity of every other bank that went bankrupt.
    pub downstream_equity: f64,
    /// Total deduction each bank received from failing debtors, before
    /// clamping.
    pub received: Vec<f64>,
    /// Total deduction each bank passed on to its creditors.
    pub transmitted: Vec<f64>,
}

/// Outcome of a cascade.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CascadeState {
    /// Last step at which a bank entered the failing state.
    pub steps: u32,
    pub equities: Vec<f64>,
    pub status: Vec<Status>,
    pub bankrupt: Vec<bool>,
    /// Step at which each bank failed, if it did.
    pub failed_at: Vec<Option<u32>>,
    pub ledger: LossLedger,
}

impl CascadeState {
    pub fn bankrupt_count(&self) -> usize {
        self.bankrupt.iter().filter(|b| **b).count()
    }

    pub fn bankrupt_banks(&self) -> Vec<BankId> {
        self.bankrupt
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| BankId(i))
            .collect()
    }
}

/// Snapshot of one cascade step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStep {
    pub step: u32,
    pub status: Vec<Status>,
    pub equities: Vec<f64>,
}

fn check_inputs(
    a: &NetExposureMatrix,
    equities: &[f64],
    seeds: &[BankId],
) -> Result<(), CascadeError> {
    let n = a.size();
    if equities.len() != n {
        return Err(CascadeError::DimensionMismatch {
            expected: n,
            found: equities.len(),
        });
    }
    if let Some((i, &value)) = equities
        .iter()
        .enumerate()
        .find(|(_, e)| !(**e >= 0.0 && e.is_finite()))
    {
        return Err(CascadeError::NegativeEquity {
            bank: BankId(i),
            value,
        });
    }
    if seeds.is_empty() {
        return Err(CascadeError::EmptySeeds);
    }
    if let Some(&s) = seeds.iter().find(|s| s.index() >= n) {
        return Err(CascadeError::UnknownBank(s));
    }
    Ok(())
}

fn cascade(
    a: &NetExposureMatrix,
    equities: &[f64],
    seeds: &[BankId],
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<CascadeState, CascadeError> {
    check_inputs(a, equities, seeds)?;
    let n = a.size();
    let tol = FAILURE_TOLERANCE * equities.iter().fold(0.0_f64, |m, e| m.max(*e));

    let mut e = equities.to_vec();
    let mut status = vec![Status::Healthy; n];
    let mut failed_at = vec![None; n];
    let mut received = vec![0.0; n];
    let mut transmitted = vec![0.0; n];

    for &s in seeds {
        e[s.index()] = 0.0;
        status[s.index()] = Status::Failing;
        failed_at[s.index()] = Some(1);
    }
    let mut step = 1;
    if let Some(t) = trace.as_deref_mut() {
        t.push(TraceStep {
            step,
            status: status.clone(),
            equities: e.clone(),
        });
    }

    let mut hit = vec![false; n];
    loop {
        hit.iter_mut().for_each(|h| *h = false);
        for j in (0..n).filter(|&j| status[j] == Status::Failing) {
            for i in 0..n {
                let exposure = a.get(i, j);
                if exposure > 0.0 {
                    transmitted[j] += exposure;
                    received[i] += exposure;
                    if status[i] == Status::Healthy {
                        e[i] -= exposure;
                        hit[i] = true;
                    }
                }
            }
        }
        step += 1;
        let mut any = false;
        for i in 0..n {
            match status[i] {
                Status::Failing => status[i] = Status::Inactive,
                Status::Healthy if hit[i] && e[i] <= tol => {
                    e[i] = 0.0;
                    status[i] = Status::Failing;
                    failed_at[i] = Some(step);
                    any = true;
                }
                _ => {}
            }
            if e[i] < 0.0 {
                e[i] = 0.0;
            }
        }
        if !any {
            step -= 1;
            break;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep {
                step,
                status: status.clone(),
                equities: e.clone(),
            });
        }
    }

    let bankrupt: Vec<bool> = failed_at.iter().map(Option::is_some).collect();
    let mut seed_equity = 0.0;
    let mut downstream_equity = 0.0;
    for i in (0..n).filter(|&i| bankrupt[i]) {
        if failed_at[i] == Some(1) {
            seed_equity += equities[i];
        } else {
            downstream_equity += equities[i];
        }
    }
    Ok(CascadeState {
        steps: step,
        equities: e,
        status,
        bankrupt,
        failed_at,
        ledger: LossLedger {
            seed_equity,
            downstream_equity,
            received,
            transmitted,
        },
    })
}

/// Runs the cascade started by the simultaneous failure of `seeds`.
///
/// Seeds fail at step 1. A healthy bank fails at the step where the
/// deductions it has received bring its equity to (numerically) zero; a bank
/// that starts with zero equity stays healthy until something is deducted.
pub fn run_cascade(
    a: &NetExposureMatrix,
    equities: &[f64],
    seeds: &[BankId],
) -> Result<CascadeState, CascadeError> {
    cascade(a, equities, seeds, None)
}

/// Like [`run_cascade`] but also returns the per-step statuses.
pub fn run_cascade_traced(
    a: &NetExposureMatrix,
    equities: &[f64],
    seeds: &[BankId],
) -> Result<(CascadeState, Vec<TraceStep>), CascadeError> {
    let mut trace = Vec::new();
    let state = cascade(a, equities, seeds, Some(&mut trace))?;
    Ok((state, trace))
}

/// Equity of the banks brought down by the failure of `bank`, not counting
/// `bank` itself.
pub fn systemic_impact(
    a: &NetExposureMatrix,
    equities: &[f64],
    bank: BankId,
) -> Result<f64, CascadeError> {
    let state = run_cascade(a, equities, &[bank])?;
    Ok(state.ledger.downstream_equity)
}

/// Systemic impact of every bank.
pub fn systemic_impacts(a: &NetExposureMatrix, equities: &[f64]) -> Result<Vec<f64>, CascadeError> {
    (0..a.size())
        .map(|i| systemic_impact(a, equities, BankId(i)))
        .collect()
}

/// `sum_j rho_1[j] * SI_j`.
pub fn expected_systemic_loss(
    a: &NetExposureMatrix,
    equities: &[f64],
    rho_1: &[f64],
) -> Result<f64, CascadeError> {
    let n = a.size();
    if rho_1.len() != n {
        return Err(CascadeError::DimensionMismatch {
            expected: n,
            found: rho_1.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    check_inputs(a, equities, &[BankId(0)])?;
    let mut esl = 0.0;
    for (j, &p) in rho_1.iter().enumerate() {
        if p != 0.0 {
            esl += p * systemic_impact(a, equities, BankId(j))?;
        }
    }
    Ok(esl)
}

/// Change in ESL from adding a loan of `amount` from `lender` to `borrower`
/// on top of `prior`.
pub fn delta_esl(
    prior: &NetExposureMatrix,
    equities: &[f64],
    rho_1: &[f64],
    lender: BankId,
    borrower: BankId,
    amount: f64,
) -> Result<f64, CascadeError> {
    let base = expected_systemic_loss(prior, equities, rho_1)?;
    let with = expected_systemic_loss(&prior.with_loan(lender, borrower, amount), equities, rho_1)?;
    Ok(with - base)
}

/// Network formed by adding one loan of `amount` per `(lender, borrower)`
/// pair to `prior`.
pub fn network_with_pairs(
    prior: &NetExposureMatrix,
    pairs: &[(BankId, BankId)],
    amount: f64,
) -> NetExposureMatrix {
    let mut a = prior.clone();
    for &(l, b) in pairs {
        a.add_loan(l, b, amount);
    }
    a
}

/// Change in ESL from adding every pair of a matching to `prior`.
pub fn delta_esl_matching(
    prior: &NetExposureMatrix,
    equities: &[f64],
    rho_1: &[f64],
    pairs: &[(BankId, BankId)],
    amount: f64,
) -> Result<f64, CascadeError> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let base = expected_systemic_loss(prior, equities, rho_1)?;
    let with = expected_systemic_loss(&network_with_pairs(prior, pairs, amount), equities, rho_1)?;
    Ok(with - base)
}

/// ESL change from adding one new loan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeImpact {
    pub lender: BankId,
    pub borrower: BankId,
    pub delta_esl: f64,
}

/// Systemic impacts, ESL and the ESL change of every possible new loan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkReport {
    pub systemic_impact: Vec<f64>,
    pub esl: f64,
    /// Every ordered pair of distinct banks, lender-major.
    pub edges: Vec<EdgeImpact>,
}

/// Full report on `a`, pricing each hypothetical loan at `amount`.
pub fn analyze_network(
    a: &NetExposureMatrix,
    equities: &[f64],
    rho_1: &[f64],
    amount: f64,
) -> Result<NetworkReport, CascadeError> {
    let systemic_impact = systemic_impacts(a, equities)?;
    let esl = expected_systemic_loss(a, equities, rho_1)?;
    let n = a.size();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let with = expected_systemic_loss(&a.with_loan(BankId(i), BankId(j), amount), equities, rho_1)?;
            edges.push(EdgeImpact {
                lender: BankId(i),
                borrower: BankId(j),
                delta_esl: with - esl,
            });
        }
    }
    Ok(NetworkReport {
        systemic_impact,
        esl,
        edges,
    })
}
