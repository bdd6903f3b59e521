use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::{is_stable_assignment, Assignment, LiquidityMarket, Matching, MatchingError};

/// Largest number of lenders or borrowers for exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 8;

/// Calls `visit` on every injective partial assignment of `lenders` lender
/// positions to `borrowers` borrower positions.
///
/// `allowed(i, j)` filters pairs and `volume` restricts to assignments with
/// exactly that many pairs. Assignments are visited in lexicographic order
/// of their per-borrower lender (unmatched first, then ascending lender
/// position). Stops early when `visit` breaks.
pub fn for_each_assignment<A, F>(
    lenders: usize,
    borrowers: usize,
    allowed: A,
    volume: Option<usize>,
    mut visit: F,
) -> ControlFlow<()>
where
    A: Fn(usize, usize) -> bool,
    F: FnMut(&[Option<usize>]) -> ControlFlow<()>,
{
    let mut current: Assignment = vec![None; borrowers];
    let mut used = vec![false; lenders];
    walk(0, 0, &allowed, volume, &mut current, &mut used, &mut visit)
}

fn walk<A, F>(
    j: usize,
    matched: usize,
    allowed: &A,
    volume: Option<usize>,
    current: &mut Assignment,
    used: &mut [bool],
    visit: &mut F,
) -> ControlFlow<()>
where
    A: Fn(usize, usize) -> bool,
    F: FnMut(&[Option<usize>]) -> ControlFlow<()>,
{
    let nb = current.len();
    if j == nb {
        if volume.is_none_or(|v| v == matched) {
            return visit(current);
        }
        return ControlFlow::Continue(());
    }
    if let Some(v) = volume {
        // not enough borrowers left to reach the target
        if matched + (nb - j) < v {
            return ControlFlow::Continue(());
        }
    }
    current[j] = None;
    walk(j + 1, matched, allowed, volume, current, used, visit)?;
    if volume.is_some_and(|v| matched == v) {
        return ControlFlow::Continue(());
    }
    for i in 0..used.len() {
        if used[i] || !allowed(i, j) {
            continue;
        }
        used[i] = true;
        current[j] = Some(i);
        let flow = walk(j + 1, matched + 1, allowed, volume, current, used, visit);
        used[i] = false;
        current[j] = None;
        flow?;
    }
    ControlFlow::Continue(())
}

fn check_size(market: &LiquidityMarket) -> Result<(), MatchingError> {
    let (l, b) = (market.lender_count(), market.borrower_count());
    if l > ENUMERATION_LIMIT || b > ENUMERATION_LIMIT {
        return Err(MatchingError::TooLarge {
            lenders: l,
            borrowers: b,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Every stable assignment of `market`, found by checking all of them.
pub fn stable_matchings(market: &LiquidityMarket) -> Result<Vec<Assignment>, MatchingError> {
    check_size(market)?;
    let mut out = Vec::new();
    let _ = for_each_assignment(
        market.lender_count(),
        market.borrower_count(),
        |_, _| true,
        None,
        |a| {
            if is_stable_assignment(market, a).is_stable() {
                out.push(a.to_vec());
            }
            ControlFlow::Continue(())
        },
    );
    Ok(out)
}

/// The set of equilibrium matchings of `market`.
pub fn enumerate_equilibria(market: &LiquidityMarket) -> Result<Vec<Matching>, MatchingError> {
    Ok(stable_matchings(market)?
        .iter()
        .map(|a| market.to_matching(a))
        .collect())
}

/// Every assignment whose pairs all clear the borrower's reservation rate
/// before tax, optionally with exactly `volume` pairs.
pub fn feasible_assignments(
    market: &LiquidityMarket,
    volume: Option<usize>,
) -> Result<Vec<Assignment>, MatchingError> {
    check_size(market)?;
    let mut out = Vec::new();
    let _ = for_each_assignment(
        market.lender_count(),
        market.borrower_count(),
        |i, j| market.feasible_untaxed(i, j),
        volume,
        |a| {
            out.push(a.to_vec());
            ControlFlow::Continue(())
        },
    );
    Ok(out)
}

/// Closed-form description of equilibria under homogeneous borrower
/// preferences and indifferent lenders: every match is acceptable, every
/// matched borrower prefers its lender to every idle lender, and no
/// unmatched borrower accepts an idle lender.
pub fn satisfies_characterization(market: &LiquidityMarket, assignment: &[Option<usize>]) -> bool {
    let mut idle = vec![true; market.lender_count()];
    for i in assignment.iter().flatten() {
        idle[*i] = false;
    }
    assignment.iter().enumerate().all(|(j, l)| match *l {
        Some(i) => {
            market.acceptable(i, j)
                && (0..idle.len())
                    .filter(|&k| idle[k])
                    .all(|k| market.rank(j, i) < market.rank(j, k))
        }
        None => (0..idle.len()).all(|k| !(idle[k] && market.acceptable(k, j))),
    })
}
