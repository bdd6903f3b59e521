//! Taxes on interbank loans: a uniform mark-up on every transaction and a
//! transaction-specific systemic risk tax (SRT).
//!
//! The SRT leaves a chosen matching untaxed and marks every other pair up
//! just enough (plus a term proportional to the ESL the pair would add) for
//! each borrower to rank its designated lender first. The designated
//! matching then becomes the only stable one. [`optimize_srt`] picks the
//! designated matching as the lowest-ESL feasible matching at a given
//! volume.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use thiserror::Error;

use crate::cascade::{delta_esl, expected_systemic_loss, network_with_pairs, CascadeError};
use crate::domain::{BankId, NetExposureMatrix};
use crate::matching::{
    for_each_assignment, stable_matchings, LiquidityMarket, Matching, MatchingError,
};

/// Default minimal mark-up that separates the designated lender from the
/// rest, in rate units.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Largest side for which [`unique_equilibrium_under_tax`] confirms
/// uniqueness by checking every matching.
pub const UNIQUENESS_SCAN_LIMIT: usize = 6;

/// Cap on the number of matchings [`optimize_srt`] will evaluate.
pub const MAX_CANDIDATES: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaxError {
    #[error("designated pair {lender} -> {borrower} does not clear the borrower's reservation rate")]
    InfeasibleTarget { lender: BankId, borrower: BankId },
    #[error("borrowers {first} and {second} both rank lender {lender} first")]
    SharedTop {
        lender: BankId,
        first: BankId,
        second: BankId,
    },
    #[error("{count} stable matchings under the tax, expected exactly the designated one")]
    NotUnique { count: usize },
    #[error("no feasible matching with volume {volume}")]
    NoFeasibleMatching { volume: usize },
    #[error("more than {limit} candidate matchings")]
    TooManyCandidates { limit: usize },
    #[error("tax matrix was built for a different market")]
    MarketMismatch,
    #[error("tax rates must be finite and nonnegative, got {0}")]
    InvalidRate(f64),
    #[error("separation epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TaxKind {
    None,
    Tobin(f64),
    Systemic,
}

/// Mark-up per (lender, borrower) pair of one market, lender-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaxMatrix {
    pub lenders: Vec<BankId>,
    pub borrowers: Vec<BankId>,
    pub rates: Vec<f64>,
    /// ESL change the pair would cause on its own; zero where not computed.
    pub risk_component: Vec<f64>,
    pub kind: TaxKind,
}

impl TaxMatrix {
    pub fn none(market: &LiquidityMarket) -> Self {
        Self::uniform(market, 0.0, TaxKind::None)
    }

    /// The same rate `kappa` on every transaction.
    pub fn tobin(market: &LiquidityMarket, kappa: f64) -> Result<Self, TaxError> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(TaxError::InvalidRate(kappa));
        }
        Ok(Self::uniform(market, kappa, TaxKind::Tobin(kappa)))
    }

    fn uniform(market: &LiquidityMarket, rate: f64, kind: TaxKind) -> Self {
        let size = market.lender_count() * market.borrower_count();
        TaxMatrix {
            lenders: market.lenders().to_vec(),
            borrowers: market.borrowers().to_vec(),
            rates: vec![rate; size],
            risk_component: vec![0.0; size],
            kind,
        }
    }

    /// Rate for lender position `i` and borrower position `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.borrowers.len() + j]
    }

    pub fn risk(&self, i: usize, j: usize) -> f64 {
        self.risk_component[i * self.borrowers.len() + j]
    }

    /// `(lender, borrower, rate, risk component)` for every pair.
    pub fn entries(&self) -> impl Iterator<Item = (BankId, BankId, f64, f64)> + '_ {
        let nb = self.borrowers.len();
        self.rates.iter().enumerate().map(move |(k, &t)| {
            (
                self.lenders[k / nb.max(1)],
                self.borrowers[k % nb.max(1)],
                t,
                self.risk_component[k],
            )
        })
    }
}

/// Market with `tax` added to every quote.
pub fn apply_tax(market: &LiquidityMarket, tax: &TaxMatrix) -> Result<LiquidityMarket, TaxError> {
    if tax.lenders != market.lenders() || tax.borrowers != market.borrowers() {
        return Err(TaxError::MarketMismatch);
    }
    if let Some(&bad) = tax.rates.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(TaxError::InvalidRate(bad));
    }
    Ok(market.with_tax(tax.rates.clone())?)
}

/// Equilibria under a uniform mark-up `kappa`.
pub fn tobin_equilibria(market: &LiquidityMarket, kappa: f64) -> Result<Vec<Matching>, TaxError> {
    let taxed = apply_tax(market, &TaxMatrix::tobin(market, kappa)?)?;
    Ok(crate::matching::enumerate_equilibria(&taxed)?)
}

/// Tuning of the SRT construction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SrtParams {
    /// Minimal gap between the designated lender and every other one.
    pub epsilon: f64,
    /// Rate mark-up per unit of ESL a pair would add; `None` scales it from
    /// the market (see [`auto_zeta`]).
    pub zeta: Option<f64>,
}

impl Default for SrtParams {
    fn default() -> Self {
        SrtParams {
            epsilon: DEFAULT_EPSILON,
            zeta: None,
        }
    }
}

/// Scale for the ESL term: ten times the spread of untaxed quotes divided by
/// the largest ESL a single loan can plausibly move (largest equity times
/// largest one-period default probability). Zero when that scale is zero.
pub fn auto_zeta(market: &LiquidityMarket, equities: &[f64], rho_1: &[f64]) -> f64 {
    let q = market.quotes();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..market.lender_count() {
        for j in 0..market.borrower_count() {
            let r = q.untaxed_rate(i, j);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let spread = if hi > lo { hi - lo } else { 0.0 };
    let max_e = equities.iter().fold(0.0_f64, |m, e| m.max(*e));
    let max_rho = rho_1.iter().fold(0.0_f64, |m, p| m.max(*p));
    let scale = max_e * max_rho;
    if scale > 0.0 && spread > 0.0 {
        10.0 * spread / scale
    } else {
        0.0
    }
}

/// Builds the tax that makes `target` the unique equilibrium.
///
/// For a borrower matched to `m` in `target`, pair `(i, j)` pays
/// `max(0, r_mj - r_ij + epsilon + zeta * max(0, dESL(i, j)))` and `m` pays
/// nothing. For a borrower left unmatched every lender pays
/// `max(0, rbar_j - r_ij + epsilon)`, pushing all of them past the
/// reservation rate. `delta_esl(i, j)` is only asked for pairs that can be
/// taxed on the first rule.
pub fn build_srt<F>(
    market: &LiquidityMarket,
    target: &Matching,
    epsilon: f64,
    zeta: f64,
    mut delta_esl: F,
) -> Result<TaxMatrix, TaxError>
where
    F: FnMut(usize, usize) -> Result<f64, TaxError>,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(TaxError::InvalidEpsilon(epsilon));
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(TaxError::InvalidRate(zeta));
    }
    let assignment = market.assignment(target)?;
    let nl = market.lender_count();
    let nb = market.borrower_count();
    let q = market.quotes();
    let mut rates = vec![0.0; nl * nb];
    let mut risk = vec![0.0; nl * nb];
    for (j, m) in assignment.iter().enumerate() {
        match *m {
            Some(m) => {
                if !market.feasible_untaxed(m, j) {
                    return Err(TaxError::InfeasibleTarget {
                        lender: market.lenders()[m],
                        borrower: market.borrowers()[j],
                    });
                }
                let r_target = q.untaxed_rate(m, j);
                for i in (0..nl).filter(|&i| i != m) {
                    let d = delta_esl(i, j)?;
                    risk[i * nb + j] = d;
                    let raw = r_target - q.untaxed_rate(i, j) + epsilon + zeta * d.max(0.0);
                    rates[i * nb + j] = raw.max(0.0);
                }
            }
            None => {
                let rbar = market.reservation()[j];
                for i in 0..nl {
                    rates[i * nb + j] = (rbar - q.untaxed_rate(i, j) + epsilon).max(0.0);
                }
            }
        }
    }
    Ok(TaxMatrix {
        lenders: market.lenders().to_vec(),
        borrowers: market.borrowers().to_vec(),
        rates,
        risk_component: risk,
        kind: TaxKind::Systemic,
    })
}

/// Matching in which every borrower takes its top lender under `tax`, or
/// stays alone when it accepts none.
///
/// Fails when two borrowers share the same top lender, as happens under a
/// uniform tax.
pub fn realize_under_tax(market: &LiquidityMarket, tax: &TaxMatrix) -> Result<Matching, TaxError> {
    let taxed = apply_tax(market, tax)?;
    top_choice_matching(&taxed)
}

fn top_choice_matching(taxed: &LiquidityMarket) -> Result<Matching, TaxError> {
    let mut owner: Vec<Option<usize>> = vec![None; taxed.lender_count()];
    let mut assignment = vec![None; taxed.borrower_count()];
    for (j, slot) in assignment.iter_mut().enumerate() {
        if taxed.cut(j) == 0 {
            continue;
        }
        let top = taxed.ranking(j)[0];
        if let Some(k) = owner[top] {
            return Err(TaxError::SharedTop {
                lender: taxed.lenders()[top],
                first: taxed.borrowers()[k],
                second: taxed.borrowers()[j],
            });
        }
        owner[top] = Some(j);
        *slot = Some(top);
    }
    Ok(taxed.to_matching(&assignment))
}

/// [`realize_under_tax`], confirmed to be the only stable matching by an
/// exhaustive scan when neither side exceeds [`UNIQUENESS_SCAN_LIMIT`].
pub fn unique_equilibrium_under_tax(
    market: &LiquidityMarket,
    tax: &TaxMatrix,
) -> Result<Matching, TaxError> {
    let taxed = apply_tax(market, tax)?;
    let matching = top_choice_matching(&taxed)?;
    if taxed.lender_count() <= UNIQUENESS_SCAN_LIMIT && taxed.borrower_count() <= UNIQUENESS_SCAN_LIMIT {
        let stable = stable_matchings(&taxed)?;
        let expected = taxed.assignment(&matching)?;
        if stable.len() != 1 || stable[0] != expected {
            return Err(TaxError::NotUnique { count: stable.len() });
        }
    }
    Ok(matching)
}

/// Inputs to the SRT optimizer besides the market.
#[derive(Debug, Clone, Copy)]
pub struct SystemicContext<'a> {
    /// Net exposures after removing loans that mature this period.
    pub prior: &'a NetExposureMatrix,
    pub equities: &'a [f64],
    /// One-period exogenous default probabilities.
    pub rho_1: &'a [f64],
    /// Size of each new loan.
    pub loan_size: f64,
}

impl SystemicContext<'_> {
    fn pairs(&self, market: &LiquidityMarket, assignment: &[Option<usize>]) -> Vec<(BankId, BankId)> {
        assignment
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|i| (market.lenders()[i], market.borrowers()[j])))
            .collect()
    }

    /// ESL of the network formed by `prior` plus the assignment's loans.
    pub fn esl_with(
        &self,
        market: &LiquidityMarket,
        assignment: &[Option<usize>],
    ) -> Result<f64, CascadeError> {
        let a = network_with_pairs(self.prior, &self.pairs(market, assignment), self.loan_size);
        expected_systemic_loss(&a, self.equities, self.rho_1)
    }
}

/// Result of [`optimize_srt`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SrtSolution {
    pub tax: TaxMatrix,
    pub matching: Matching,
    /// ESL of the prior network plus the chosen matching.
    pub esl: f64,
    pub candidates: usize,
    pub zeta: f64,
}

/// Finds the lowest-ESL matching among those with exactly `volume` pairs
/// that all clear their reservation rate untaxed, and the tax that pins it.
///
/// Ties (within a relative 1e-12) go to the lexicographically smallest
/// assignment: borrowers in id order, unmatched before matched, lenders in
/// id order.
pub fn optimize_srt(
    market: &LiquidityMarket,
    ctx: &SystemicContext<'_>,
    volume: usize,
    params: &SrtParams,
) -> Result<SrtSolution, TaxError> {
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    let mut candidates = 0usize;
    let mut failure: Option<TaxError> = None;
    let _ = for_each_assignment(
        market.lender_count(),
        market.borrower_count(),
        |i, j| market.feasible_untaxed(i, j),
        Some(volume),
        |a| {
            candidates += 1;
            if candidates > MAX_CANDIDATES {
                failure = Some(TaxError::TooManyCandidates { limit: MAX_CANDIDATES });
                return ControlFlow::Break(());
            }
            match ctx.esl_with(market, a) {
                Ok(esl) => {
                    let better = match &best {
                        None => true,
                        Some((b, _)) => esl < b - 1e-12 * b.abs(),
                    };
                    if better {
                        best = Some((esl, a.to_vec()));
                    }
                    ControlFlow::Continue(())
                }
                Err(e) => {
                    failure = Some(e.into());
                    ControlFlow::Break(())
                }
            }
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (esl, assignment) = best.ok_or(TaxError::NoFeasibleMatching { volume })?;
    let matching = market.to_matching(&assignment);
    let zeta = params
        .zeta
        .unwrap_or_else(|| auto_zeta(market, ctx.equities, ctx.rho_1));

    let mut memo: Vec<Option<f64>> = vec![None; market.lender_count() * market.borrower_count()];
    let nb = market.borrower_count();
    let tax = build_srt(market, &matching, params.epsilon, zeta, |i, j| {
        if zeta == 0.0 {
            return Ok(0.0);
        }
        if let Some(d) = memo[i * nb + j] {
            return Ok(d);
        }
        let d = delta_esl(
            ctx.prior,
            ctx.equities,
            ctx.rho_1,
            market.lenders()[i],
            market.borrowers()[j],
            ctx.loan_size,
        )?;
        memo[i * nb + j] = Some(d);
        Ok(d)
    })?;
    Ok(SrtSolution {
        tax,
        matching,
        esl,
        candidates,
        zeta,
    })
}

/// Largest volume any untaxed-feasible matching reaches.
pub fn max_feasible_volume(market: &LiquidityMarket) -> usize {
    // augmenting paths; markets are small
    let nl = market.lender_count();
    let nb = market.borrower_count();
    let mut holder: Vec<Option<usize>> = vec![None; nl];
    let mut volume = 0;
    for j in 0..nb {
        let mut seen = vec![false; nl];
        if augment(market, j, &mut holder, &mut seen) {
            volume += 1;
        }
    }
    volume
}

fn augment(
    market: &LiquidityMarket,
    j: usize,
    holder: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for i in 0..holder.len() {
        if seen[i] || !market.feasible_untaxed(i, j) {
            continue;
        }
        seen[i] = true;
        let free = match holder[i] {
            None => true,
            Some(k) => augment(market, k, holder, seen),
        };
        if free {
            holder[i] = Some(j);
            return true;
        }
    }
    false
}
