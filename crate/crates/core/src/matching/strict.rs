use alloc::vec;
use alloc::vec::Vec;

use super::{LenderMode, LiquidityMarket, Matching, MatchingError};

/// The unique stable matching when lenders rank borrowers strictly.
///
/// Lenders move in the borrowers' common order (cheapest first); each takes
/// its favourite among the still unmatched borrowers that accept it.
/// That construction needs every borrower to rank lenders the same way,
/// which holds for fair untaxed quotes; taxed markets whose rankings differ
/// fall back to borrower-proposing deferred acceptance.
pub fn strict_stable_matching(market: &LiquidityMarket) -> Result<Matching, MatchingError> {
    if market.lender_mode() != LenderMode::Strict {
        return Err(MatchingError::NotStrict);
    }
    if market.borrower_count() == 0 {
        return Ok(Matching::empty());
    }
    if market.homogeneous_borrowers().is_err() {
        return Ok(deferred_acceptance(market));
    }

    let mut out = vec![None; market.borrower_count()];
    for &i in market.ranking(0) {
        let pick = market
            .lender_ranking()
            .iter()
            .copied()
            .find(|&j| out[j].is_none() && market.acceptable(i, j));
        if let Some(j) = pick {
            out[j] = Some(i);
        }
    }
    Ok(market.to_matching(&out))
}

fn deferred_acceptance(market: &LiquidityMarket) -> Matching {
    let nb = market.borrower_count();
    let mut holder: Vec<Option<usize>> = vec![None; market.lender_count()];
    let mut next = vec![0usize; nb];
    let mut free: Vec<usize> = (0..nb).rev().collect();
    while let Some(j) = free.pop() {
        if next[j] >= market.cut(j) {
            continue;
        }
        let i = market.ranking(j)[next[j]];
        next[j] += 1;
        if market.lender_prefers(j, holder[i]) {
            if let Some(k) = holder[i].replace(j) {
                free.push(k);
            }
        } else {
            free.push(j);
        }
    }
    let mut out = vec![None; nb];
    for (i, h) in holder.iter().enumerate() {
        if let Some(j) = *h {
            out[j] = Some(i);
        }
    }
    market.to_matching(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::QuoteSet;
    use crate::domain::BankId;

    #[test]
    fn cheapest_lender_takes_safest_borrower() {
        let q = QuoteSet::fair(
            vec![BankId(0), BankId(1)],
            vec![BankId(2), BankId(3)],
            vec![0.01, 0.02],
            &[0.1, 0.2],
            1,
        )
        .unwrap();
        let m = LiquidityMarket::new(0, q, vec![0.9, 0.9], vec![0.1, 0.2], LenderMode::Strict, 1).unwrap();
        let mu = strict_stable_matching(&m).unwrap();
        assert_eq!(mu.pairs(), &[(BankId(0), BankId(2)), (BankId(1), BankId(3))]);
    }

    #[test]
    fn excluded_borrower_stays_alone() {
        let q = QuoteSet::fair(vec![BankId(0)], vec![BankId(1), BankId(2)], vec![0.01], &[0.1, 0.0], 1)
            .unwrap();
        let m = LiquidityMarket::new(0, q, vec![0.001, 0.9], vec![0.1, 0.0], LenderMode::Strict, 1).unwrap();
        let mu = strict_stable_matching(&m).unwrap();
        assert_eq!(mu.pairs(), &[(BankId(0), BankId(2))]);
        assert_eq!(mu.mate(BankId(1)), BankId(1));
    }

    #[test]
    fn indifferent_market_rejected() {
        let q = QuoteSet::fair(vec![BankId(0)], vec![BankId(1)], vec![0.01], &[0.1], 1).unwrap();
        let m = LiquidityMarket::new(0, q, vec![0.5], vec![0.1], LenderMode::Indifferent, 1).unwrap();
        assert_eq!(strict_stable_matching(&m), Err(MatchingError::NotStrict));
    }
}
