use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    is_stable_assignment, strict_stable_matching, Assignment, LenderMode, LiquidityMarket,
    Matching, MatchingError, Stability,
};

/// Borrowers take turns in `order` (borrower positions), each claiming its
/// most preferred acceptable lender that is still free.
pub fn serial_dictatorship(market: &LiquidityMarket, order: &[usize]) -> Assignment {
    let mut taken = vec![false; market.lender_count()];
    let mut out = vec![None; market.borrower_count()];
    for &j in order {
        let cut = market.cut(j);
        if let Some(&i) = market.ranking(j)[..cut].iter().find(|&&i| !taken[i]) {
            taken[i] = true;
            out[j] = Some(i);
        }
    }
    out
}

/// Picks one equilibrium.
///
/// With indifferent lenders this is a serial dictatorship in random borrower
/// order; with strict lenders the stable matching is unique and the rng is
/// not used. The result is checked for stability either way.
pub fn select_equilibrium<R: Rng + ?Sized>(
    market: &LiquidityMarket,
    rng: &mut R,
) -> Result<Matching, MatchingError> {
    let mut order: Vec<usize> = (0..market.borrower_count()).collect();
    order.shuffle(rng);
    select_with_order(market, &order)
}

/// [`select_equilibrium`] with an explicit borrower order.
pub fn select_with_order(market: &LiquidityMarket, order: &[usize]) -> Result<Matching, MatchingError> {
    let assignment = match market.lender_mode() {
        LenderMode::Indifferent => serial_dictatorship(market, order),
        LenderMode::Strict => market.assignment(&strict_stable_matching(market)?)?,
    };
    match is_stable_assignment(market, &assignment) {
        Stability::Stable => Ok(market.to_matching(&assignment)),
        Stability::Unstable(v) => Err(MatchingError::SelectionUnstable(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::QuoteSet;
    use crate::domain::BankId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_market() {
        let q = QuoteSet::fair(vec![BankId(0)], vec![BankId(1)], vec![0.01], &[0.0], 1).unwrap();
        let m = LiquidityMarket::new(0, q, vec![0.09], vec![0.0], LenderMode::Indifferent, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mu = select_equilibrium(&m, &mut rng).unwrap();
        assert_eq!(mu.pairs(), &[(BankId(0), BankId(1))]);
    }
}
