//! Several matching rounds per period with divisible shocks.
//!
//! Each bank's shock is scaled by an exponential draw, so supplies and
//! demands differ in size. Every round runs the single-round market on the
//! banks that still have something to lend or borrow, and each matched pair
//! moves as much as it can. Agents are myopic: a round's matching is only
//! stable within that round.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{select_equilibrium, LiquidityMarket, MarketSides, MatchingError};
use crate::domain::{BankId, BankState};

/// Amount moved from a lender to a borrower in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedEdge {
    pub lender: BankId,
    pub borrower: BankId,
    pub amount: f64,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiRoundOutcome {
    pub edges: Vec<WeightedEdge>,
    /// Rounds that produced at least one transfer.
    pub rounds: usize,
    /// Lenders and borrowers still active at the start of each round.
    pub active: Vec<MarketSides>,
    /// Unused supply per lender position of the input market.
    pub residual_supply: Vec<f64>,
    /// Unmet demand per borrower position of the input market.
    pub residual_demand: Vec<f64>,
}

impl MultiRoundOutcome {
    pub fn total_transferred(&self) -> f64 {
        self.edges.iter().map(|e| e.amount).sum()
    }
}

/// Draws a signed shock per bank: the unit shock of [`super::draw_shocks`]
/// times an independent unit-mean exponential. Positive values are supply,
/// negative values demand, zero for banks without a shock or bankrupt.
pub fn draw_sized_shocks<R: Rng + ?Sized>(
    banks: &[BankState],
    y: f64,
    rng: &mut R,
) -> Result<Vec<f64>, MatchingError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(MatchingError::InvalidShockProbability(y));
    }
    Ok(banks
        .iter()
        .map(|bank| {
            let u: f64 = rng.random();
            let size: f64 = Exp1.sample(rng);
            if bank.bankrupt {
                0.0
            } else if u < 0.5 * y {
                size
            } else if u < y {
                -size
            } else {
                0.0
            }
        })
        .collect())
}

/// Runs matching rounds on `market` until one side is exhausted or a round
/// matches nobody.
///
/// `supply` is indexed by lender position and `demand` by borrower position
/// of `market`; banks with zero entries never take part.
pub fn multi_round_matching<R: Rng + ?Sized>(
    market: &LiquidityMarket,
    supply: &[f64],
    demand: &[f64],
    rng: &mut R,
) -> Result<MultiRoundOutcome, MatchingError> {
    for (expected, found) in [
        (market.lender_count(), supply.len()),
        (market.borrower_count(), demand.len()),
    ] {
        if expected != found {
            return Err(MatchingError::DimensionMismatch { expected, found });
        }
    }
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut edges = Vec::new();
    let mut active_sets = Vec::new();
    let mut rounds = 0;
    loop {
        let lenders: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
        let borrowers: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
        if lenders.is_empty() || borrowers.is_empty() {
            break;
        }
        active_sets.push(MarketSides {
            period: market.period(),
            lenders: lenders.iter().map(|&i| market.lenders()[i]).collect(),
            borrowers: borrowers.iter().map(|&j| market.borrowers()[j]).collect(),
        });
        let sub = market.restrict(&lenders, &borrowers)?;
        let matching = select_equilibrium(&sub, rng)?;
        if matching.is_empty() {
            break;
        }
        rounds += 1;
        for &(l, b) in matching.pairs() {
            let i = market.lender_position(l).ok_or(MatchingError::UnknownLender(l))?;
            let j = market.borrower_position(b).ok_or(MatchingError::UnknownBorrower(b))?;
            let amount = supply[i].min(demand[j]);
            supply[i] -= amount;
            demand[j] -= amount;
            // exact exits even when the two sides agree only to rounding
            if supply[i] <= f64::EPSILON * amount {
                supply[i] = 0.0;
            }
            if demand[j] <= f64::EPSILON * amount {
                demand[j] = 0.0;
            }
            edges.push(WeightedEdge {
                lender: l,
                borrower: b,
                amount,
                round: rounds,
            });
        }
    }
    Ok(MultiRoundOutcome {
        edges,
        rounds,
        active: active_sets,
        residual_supply: supply,
        residual_demand: demand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::QuoteSet;
    use crate::matching::LenderMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn market(l: usize, b: usize) -> LiquidityMarket {
        let lenders: Vec<BankId> = (0..l).map(BankId).collect();
        let borrowers: Vec<BankId> = (l..l + b).map(BankId).collect();
        let rates = (0..l).map(|i| 0.01 * (i + 1) as f64).collect();
        let q = QuoteSet::fair(lenders, borrowers, rates, &alloc::vec![0.0; b], 1).unwrap();
        LiquidityMarket::new(0, q, alloc::vec![0.5; b], alloc::vec![0.0; b], LenderMode::Indifferent, 1)
            .unwrap()
    }

    #[test]
    fn supply_five_demand_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = multi_round_matching(&market(1, 1), &[5.0], &[3.0], &mut rng).unwrap();
        assert_eq!(out.rounds, 1);
        assert_eq!(out.edges.len(), 1);
        assert_eq!(out.edges[0].amount, 3.0);
        assert_eq!(out.residual_supply, alloc::vec![2.0]);
        assert_eq!(out.residual_demand, alloc::vec![0.0]);
    }

    #[test]
    fn zero_shocks_mean_zero_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = multi_round_matching(&market(2, 2), &[0.0, 0.0], &[0.0, 0.0], &mut rng).unwrap();
        assert_eq!(out.rounds, 0);
        assert!(out.edges.is_empty());
    }

    #[test]
    fn transfers_bounded_by_both_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let supply: Vec<f64> = (0..3).map(|_| Exp1.sample(&mut rng)).collect();
            let demand: Vec<f64> = (0..4).map(|_| Exp1.sample(&mut rng)).collect();
            let out = multi_round_matching(&market(3, 4), &supply, &demand, &mut rng).unwrap();
            let s: f64 = supply.iter().sum();
            let d: f64 = demand.iter().sum();
            assert!(out.total_transferred() <= s.min(d) + 1e-12);
            for w in out.active.windows(2) {
                let shrinks = w[1].lenders.len() + w[1].borrowers.len()
                    < w[0].lenders.len() + w[0].borrowers.len();
                assert!(shrinks);
                assert!(w[1].lenders.iter().all(|x| w[0].lenders.contains(x)));
                assert!(w[1].borrowers.iter().all(|x| w[0].borrowers.contains(x)));
            }
        }
    }
}
