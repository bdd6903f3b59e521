use alloc::vec;
use alloc::vec::Vec;

use super::{LenderMode, LiquidityMarket, Matching, MatchingError};
use crate::domain::BankId;

/// Why a matching is not stable.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Violation {
    /// A lender and a borrower both strictly prefer each other to their
    /// current partners.
    BlockingPair { lender: BankId, borrower: BankId },
    /// Borrowers whose lenders are indifferent could pass their lenders
    /// around this cycle, each taking the next one's lender, and all gain.
    SwapCycle { borrowers: Vec<BankId> },
    /// A matched borrower would rather not borrow at that rate.
    PrefersSelf { borrower: BankId },
    /// A borrower prefers a lender that is sitting idle.
    PrefersIdleLender { borrower: BankId, lender: BankId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Stability {
    Stable,
    Unstable(Violation),
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Stability::Stable => None,
            Stability::Unstable(v) => Some(v),
        }
    }
}

/// Checks `matching` against the market's preferences.
pub fn is_stable(market: &LiquidityMarket, matching: &Matching) -> Result<Stability, MatchingError> {
    let assignment = market.assignment(matching)?;
    Ok(is_stable_assignment(market, &assignment))
}

/// Stability of an assignment known to be valid for `market`.
///
/// Conditions are checked in order: pairwise blocking, coalitional swaps
/// among borrowers with indifferent lenders, then unilateral deviations.
pub fn is_stable_assignment(market: &LiquidityMarket, assignment: &[Option<usize>]) -> Stability {
    let nl = market.lender_count();
    let nb = market.borrower_count();
    let mut holder: Vec<Option<usize>> = vec![None; nl];
    for (j, l) in assignment.iter().enumerate() {
        if let Some(i) = *l {
            holder[i] = Some(j);
        }
    }

    if market.lender_mode() == LenderMode::Strict {
        for j in 0..nb {
            for &i in &market.ranking(j)[..market.cut(j)] {
                if assignment[j] == Some(i) {
                    // everything after this is worse than the current lender
                    break;
                }
                if market.borrower_prefers(j, i, assignment[j]) && market.lender_prefers(j, holder[i]) {
                    return Stability::Unstable(Violation::BlockingPair {
                        lender: market.lenders()[i],
                        borrower: market.borrowers()[j],
                    });
                }
            }
        }
    } else if let Some(cycle) = envy_cycle(market, assignment) {
        return Stability::Unstable(Violation::SwapCycle {
            borrowers: cycle.into_iter().map(|j| market.borrowers()[j]).collect(),
        });
    }

    for j in 0..nb {
        if let Some(i) = assignment[j] {
            if !market.acceptable(i, j) {
                return Stability::Unstable(Violation::PrefersSelf {
                    borrower: market.borrowers()[j],
                });
            }
        }
        for &i in &market.ranking(j)[..market.cut(j)] {
            if assignment[j] == Some(i) {
                break;
            }
            if holder[i].is_none() {
                return Stability::Unstable(Violation::PrefersIdleLender {
                    borrower: market.borrowers()[j],
                    lender: market.lenders()[i],
                });
            }
        }
    }
    Stability::Stable
}

/// Finds a cycle in the envy digraph over matched borrowers: `j -> k` when
/// `j` strictly prefers `k`'s lender to its own.
fn envy_cycle(market: &LiquidityMarket, assignment: &[Option<usize>]) -> Option<Vec<usize>> {
    let nb = assignment.len();
    let envies = |j: usize, k: usize| -> bool {
        match (assignment[j], assignment[k]) {
            (Some(a), Some(b)) => j != k && market.rank(j, b) < market.rank(j, a),
            _ => false,
        }
    };

    // 0 unvisited, 1 on stack, 2 done
    let mut color = vec![0u8; nb];
    let mut parent = vec![usize::MAX; nb];
    for root in (0..nb).filter(|&j| assignment[j].is_some()) {
        if color[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = 1;
        while let Some(&mut (j, ref mut next)) = stack.last_mut() {
            if *next == nb {
                color[j] = 2;
                stack.pop();
                continue;
            }
            let k = *next;
            *next += 1;
            if !envies(j, k) {
                continue;
            }
            match color[k] {
                0 => {
                    color[k] = 1;
                    parent[k] = j;
                    stack.push((k, 0));
                }
                1 => {
                    let mut cycle = vec![k];
                    let mut x = j;
                    while x != k {
                        cycle.push(x);
                        x = parent[x];
                    }
                    cycle.reverse();
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::QuoteSet;

    /// Two lenders, two borrowers; each borrower likes a different lender
    /// best via a tax.
    fn crossed() -> LiquidityMarket {
        let quotes = QuoteSet::fair(
            vec![BankId(0), BankId(1)],
            vec![BankId(2), BankId(3)],
            vec![0.01, 0.02],
            &[0.0, 0.0],
            1,
        )
        .unwrap()
        .with_tax(vec![0.05, 0.0, 0.0, 0.0])
        .unwrap();
        LiquidityMarket::new(0, quotes, vec![0.2, 0.2], vec![0.0, 0.0], LenderMode::Indifferent, 1)
            .unwrap()
    }

    #[test]
    fn swapped_assignment_has_envy_cycle() {
        let m = crossed();
        // borrower 2 prefers lender 1, borrower 3 prefers lender 0
        let s = is_stable_assignment(&m, &[Some(0), Some(1)]);
        assert!(matches!(s, Stability::Unstable(Violation::SwapCycle { .. })));
        assert!(is_stable_assignment(&m, &[Some(1), Some(0)]).is_stable());
    }

    #[test]
    fn idle_lender_is_a_witness() {
        let m = crossed();
        let s = is_stable_assignment(&m, &[None, None]);
        assert_eq!(
            s,
            Stability::Unstable(Violation::PrefersIdleLender {
                borrower: BankId(2),
                lender: BankId(1)
            })
        );
    }

    #[test]
    fn strict_lenders_block() {
        let quotes = QuoteSet::fair(
            vec![BankId(0), BankId(1)],
            vec![BankId(2), BankId(3)],
            vec![0.01, 0.02],
            &[0.1, 0.2],
            1,
        )
        .unwrap();
        let m = LiquidityMarket::new(0, quotes, vec![0.5, 0.5], vec![0.1, 0.2], LenderMode::Strict, 1)
            .unwrap();
        let s = is_stable_assignment(&m, &[Some(1), Some(0)]);
        assert_eq!(
            s,
            Stability::Unstable(Violation::BlockingPair {
                lender: BankId(0),
                borrower: BankId(2)
            })
        );
        assert!(is_stable_assignment(&m, &[Some(0), Some(1)]).is_stable());
    }
}
