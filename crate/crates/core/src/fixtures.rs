//! Small hand-checkable instances with known answers, the checks run by
//! `srtlab fixtures`, and random instance generators shared by the test
//! suites.
//!
//! Examples label banks from 1; label `k` maps to `BankId(k - 1)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cascade::{expected_systemic_loss, network_with_pairs, CascadeError};
use crate::contracts::QuoteSet;
use crate::domain::{BankId, BankState, Loan, LoanBook, NetExposureMatrix};
use crate::matching::{enumerate_equilibria, is_stable, LenderMode, LiquidityMarket, Matching};
use crate::tax::{build_srt, unique_equilibrium_under_tax, SystemicContext, TaxError};

fn id(label: usize) -> BankId {
    BankId(label - 1)
}

/// Net exposures of the 11-bank example book, row `i` column `j` being what
/// bank `i + 1` is net owed by bank `j + 1`.
pub const GOLDEN_EXPOSURES: [[i32; 11]; 11] = [
    [0, -2, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0],
    [1, 0, 0, 0, -1, 0, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0],
    [0, 0, -1, 0, 0, 0, 0, -1, 0, 1, 1],
    [0, 1, 0, 0, 0, 0, 1, 0, 0, 0, -1],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -1, 1, 0, 0, 0],
];

/// Loans outstanding before the example period, `(lender, borrower)` in
/// 1-based labels.
pub const GOLDEN_EARLIER_LOANS: [(usize, usize); 11] = [
    (2, 1),
    (2, 1),
    (3, 1),
    (4, 2),
    (5, 3),
    (7, 10),
    (7, 11),
    (8, 2),
    (8, 7),
    (9, 6),
    (11, 8),
];

/// Matches formed in the example period.
pub const GOLDEN_NEW_MATCHES: [(usize, usize); 2] = [(4, 6), (3, 7)];

/// Rebuilds the 11-bank example book: earlier loans booked at period 0 with
/// maturity 5, then one period advanced with [`GOLDEN_NEW_MATCHES`].
pub fn golden_loan_book() -> LoanBook {
    let mut banks: Vec<BankState> = (0..11)
        .map(|i| BankState::new(BankId(i), 10.0, 1.0, 0.0, 0.01, 0.09))
        .collect();
    let mut book = LoanBook::new(11);
    let new: Vec<(BankId, BankId)> = GOLDEN_NEW_MATCHES
        .iter()
        .map(|&(l, b)| (id(l), id(b)))
        .collect();
    for &(l, b) in &GOLDEN_EARLIER_LOANS {
        book.push_loan(Loan {
            lender: id(l),
            borrower: id(b),
            amount: 1.0,
            origination: 0,
            maturity: 5,
        })
        .expect("earlier loans are valid");
    }
    book.advance_period(&mut banks, &new, &[], 5, 1.0)
        .expect("new matches are valid");
    book
}

pub fn golden_exposure_matrix() -> NetExposureMatrix {
    let rows: Vec<Vec<f64>> = GOLDEN_EXPOSURES
        .iter()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    NetExposureMatrix::from_rows(&rows).expect("golden matrix is antisymmetric")
}

/// Equity of every bank in the three-lender example.
pub const EXAMPLE_EQUITY: f64 = 50.0;
/// Size of every loan in the three-lender example; larger than the equity,
/// so any creditor of a failed bank fails.
pub const EXAMPLE_LOAN: f64 = 60.0;
/// Uniform one-period default probability used for ESL in the example.
pub const EXAMPLE_RHO_1: f64 = 0.01;

/// Loans already on the books of the three-lender example. Bank 3's failure
/// topples 7, 8 and 9; bank 6's topples 5.
pub const EXAMPLE_PRIOR_LOANS: [(usize, usize); 4] = [(7, 3), (8, 7), (9, 8), (5, 6)];

/// A labelled set of `(lender, borrower)` loans and its ESL in units.
pub type ExampleConfiguration = (&'static str, &'static [(usize, usize)], u32);

/// The configurations compared in the example, with their ESL in units of
/// `EXAMPLE_RHO_1 * EXAMPLE_EQUITY`.
pub const EXAMPLE_CONFIGURATIONS: [ExampleConfiguration; 3] = [
    ("3->5, 2->4", &[(3, 5), (2, 4)], 16),
    ("3->4, 2->5", &[(3, 4), (2, 5)], 13),
    ("1->4, 2->5", &[(1, 4), (2, 5)], 10),
];

/// Three-lender example: nine banks, lenders 1, 2, 3 quoting 3%, 2% and 1%
/// base rates, borrowers 4, 5, 6 with default probabilities 1%, 2% and 20%
/// and a 9% reservation rate, one-period loans. Every lender is acceptable
/// to 4 and 5 and none to 6.
pub struct ThreeLenderExample {
    pub market: LiquidityMarket,
    pub prior: NetExposureMatrix,
    pub equities: Vec<f64>,
    pub rho_1: Vec<f64>,
}

impl ThreeLenderExample {
    pub fn new() -> Self {
        let quotes = QuoteSet::fair(
            vec![id(1), id(2), id(3)],
            vec![id(4), id(5), id(6)],
            vec![0.03, 0.02, 0.01],
            &[0.01, 0.02, 0.2],
            1,
        )
        .expect("valid quotes");
        let market = LiquidityMarket::new(
            0,
            quotes,
            vec![0.09; 3],
            vec![0.01, 0.02, 0.2],
            LenderMode::Indifferent,
            1,
        )
        .expect("valid market");
        let mut prior = NetExposureMatrix::zeros(9);
        for &(l, b) in &EXAMPLE_PRIOR_LOANS {
            prior.add_loan(id(l), id(b), EXAMPLE_LOAN);
        }
        ThreeLenderExample {
            market,
            prior,
            equities: vec![EXAMPLE_EQUITY; 9],
            rho_1: vec![EXAMPLE_RHO_1; 9],
        }
    }

    pub fn matching(pairs: &[(usize, usize)]) -> Matching {
        let pairs: Vec<(BankId, BankId)> = pairs.iter().map(|&(l, b)| (id(l), id(b))).collect();
        Matching::from_pairs(&pairs).expect("example matchings are one-to-one")
    }

    pub fn network(&self, pairs: &[(usize, usize)]) -> NetExposureMatrix {
        network_with_pairs(&self.prior, Self::matching(pairs).pairs(), EXAMPLE_LOAN)
    }

    pub fn context(&self) -> SystemicContext<'_> {
        SystemicContext {
            prior: &self.prior,
            equities: &self.equities,
            rho_1: &self.rho_1,
            loan_size: EXAMPLE_LOAN,
        }
    }
}

impl Default for ThreeLenderExample {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of one fixture check.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixtureReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl FixtureReport {
    fn new(name: &str, result: Result<String, String>) -> Self {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        FixtureReport {
            name: String::from(name),
            passed,
            detail,
        }
    }
}

/// Banks that fail when `seed` fails, found by re-scanning every bank until
/// nothing changes: a bank fails once its claims on failed banks reach its
/// equity.
pub fn brute_force_failures(a: &NetExposureMatrix, equities: &[f64], seed: BankId) -> Vec<bool> {
    let n = a.size();
    let mut failed = vec![false; n];
    failed[seed.index()] = true;
    loop {
        let mut changed = false;
        for i in 0..n {
            if failed[i] {
                continue;
            }
            let loss: f64 = (0..n)
                .filter(|&j| failed[j])
                .map(|j| a.get(i, j).max(0.0))
                .sum();
            if loss >= equities[i] {
                failed[i] = true;
                changed = true;
            }
        }
        if !changed {
            return failed;
        }
    }
}

/// The book rebuilt from the loan list nets to [`GOLDEN_EXPOSURES`].
pub fn check_golden_matrix() -> FixtureReport {
    let result = (|| {
        let book = golden_loan_book();
        let built = book.net_exposure();
        let golden = golden_exposure_matrix();
        for i in 0..11 {
            for j in 0..11 {
                if built.get(i, j) != golden.get(i, j) {
                    return Err(format!(
                        "entry ({}, {}) is {}, expected {}",
                        i + 1,
                        j + 1,
                        built.get(i, j),
                        golden.get(i, j)
                    ));
                }
            }
        }
        Ok(format!("11x11 matrix reproduced from {} loans", book.loans().len()))
    })();
    FixtureReport::new("golden exposure matrix", result)
}

/// Every loan in the example networks lets the borrower's failure take the
/// lender down, and bank 3 topples exactly 7, 8 and 9 on the prior network.
fn check_example_wiring(ex: &ThreeLenderExample) -> Result<(), String> {
    let topple = brute_force_failures(&ex.prior, &ex.equities, id(3));
    let expected: Vec<bool> = (1..=9).map(|k| matches!(k, 3 | 7 | 8 | 9)).collect();
    if topple != expected {
        return Err(format!("failure of bank 3 topples {topple:?}"));
    }
    for (label, pairs, _) in EXAMPLE_CONFIGURATIONS {
        let a = ex.network(pairs);
        let edges = EXAMPLE_PRIOR_LOANS.iter().chain(pairs.iter());
        for &(l, b) in edges {
            if !brute_force_failures(&a, &ex.equities, id(b))[id(l).index()] {
                return Err(format!("in {label}, failure of {b} does not take down lender {l}"));
            }
        }
    }
    Ok(())
}

/// Checks that `esl` ranks the example configurations 16 : 13 : 10 in units
/// of `EXAMPLE_RHO_1 * EXAMPLE_EQUITY`. The evaluator is a parameter so a
/// broken cascade can be shown to fail the check.
pub fn check_esl_ratios<F>(mut esl: F) -> FixtureReport
where
    F: FnMut(&NetExposureMatrix, &[f64], &[f64]) -> Result<f64, CascadeError>,
{
    let ex = ThreeLenderExample::new();
    let result = (|| {
        check_example_wiring(&ex)?;
        let unit = EXAMPLE_RHO_1 * EXAMPLE_EQUITY;
        let mut found = Vec::new();
        for (label, pairs, units) in EXAMPLE_CONFIGURATIONS {
            let value = esl(&ex.network(pairs), &ex.equities, &ex.rho_1)
                .map_err(|e| format!("{label}: {e}"))?;
            let ratio = value / unit;
            if (ratio - f64::from(units)).abs() > 1e-9 * f64::from(units) {
                return Err(format!("{label}: ESL is {ratio} units, expected {units}"));
            }
            found.push(format!("{ratio}"));
        }
        Ok(format!("ESL units {}", found.join(" : ")))
    })();
    FixtureReport::new("example ESL ratios", result)
}

/// Untaxed equilibria of the example market are exactly `3->5, 2->4` and
/// `3->4, 2->5`, and `1->4, 2->5` is not stable.
pub fn check_equilibrium_set() -> FixtureReport {
    let ex = ThreeLenderExample::new();
    let result = (|| {
        let found = enumerate_equilibria(&ex.market).map_err(|e| format!("{e}"))?;
        let expected = [
            ThreeLenderExample::matching(EXAMPLE_CONFIGURATIONS[0].1),
            ThreeLenderExample::matching(EXAMPLE_CONFIGURATIONS[1].1),
        ];
        if found.len() != 2 || !expected.iter().all(|m| found.contains(m)) {
            return Err(format!("equilibria are {found:?}"));
        }
        let low = ThreeLenderExample::matching(EXAMPLE_CONFIGURATIONS[2].1);
        if is_stable(&ex.market, &low).map_err(|e| format!("{e}"))?.is_stable() {
            return Err(String::from("1->4, 2->5 is stable without a tax"));
        }
        Ok(String::from("2 equilibria; low-ESL matching unstable untaxed"))
    })();
    FixtureReport::new("example equilibrium set", result)
}

/// The SRT targeting `1->4, 2->5` leaves both pairs untaxed, taxes every
/// other pair serving borrowers 4 and 5, and makes the target the only
/// stable matching.
pub fn check_srt_uniqueness() -> FixtureReport {
    let ex = ThreeLenderExample::new();
    let err = |e: TaxError| format!("{e}");
    let result = (|| -> Result<String, String> {
        let target = ThreeLenderExample::matching(EXAMPLE_CONFIGURATIONS[2].1);
        let ctx = ex.context();
        let m = &ex.market;
        let zeta = crate::tax::auto_zeta(m, &ex.equities, &ex.rho_1);
        let tax = build_srt(m, &target, crate::tax::DEFAULT_EPSILON, zeta, |i, j| {
            Ok(crate::cascade::delta_esl(
                ctx.prior,
                ctx.equities,
                ctx.rho_1,
                m.lenders()[i],
                m.borrowers()[j],
                ctx.loan_size,
            )?)
        })
        .map_err(err)?;
        let mut problems = Vec::new();
        for (l, b, rate, _) in tax.entries() {
            let on_target = target.lender_of(b) == Some(l);
            let served = b == id(4) || b == id(5);
            if on_target && rate != 0.0 {
                problems.push(format!("target pair {l}->{b} taxed {rate}"));
            }
            if !on_target && served && rate <= 0.0 {
                problems.push(format!("off-target pair {l}->{b} untaxed"));
            }
        }
        if !problems.is_empty() {
            return Err(problems.join("; "));
        }
        let realized = unique_equilibrium_under_tax(m, &tax).map_err(err)?;
        if realized != target {
            return Err(format!("tax realizes {realized:?}"));
        }
        Ok(String::from("target is the unique stable matching under the tax"))
    })();
    FixtureReport::new("example SRT uniqueness", result)
}

/// Every fixture check with the crate's own cascade.
pub fn run_all() -> Vec<FixtureReport> {
    vec![
        check_golden_matrix(),
        check_esl_ratios(expected_systemic_loss),
        check_equilibrium_set(),
        check_srt_uniqueness(),
    ]
}

/// A random market together with a network it trades on top of.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub market: LiquidityMarket,
    pub prior: NetExposureMatrix,
    pub equities: Vec<f64>,
    pub rho_1: Vec<f64>,
}

impl RandomInstance {
    pub fn context(&self) -> SystemicContext<'_> {
        SystemicContext {
            prior: &self.prior,
            equities: &self.equities,
            rho_1: &self.rho_1,
            loan_size: 1.0,
        }
    }
}

/// Random one-period market with 1 to `max_side` banks per side drawn from
/// `banks` ids: base rates in [0, 8%), default probabilities in [0, 0.3),
/// reservation rates in [2%, 12%).
pub fn random_market<R: Rng + ?Sized>(
    rng: &mut R,
    banks: usize,
    max_side: usize,
    mode: LenderMode,
) -> LiquidityMarket {
    assert!(banks >= 2 && max_side >= 1);
    let mut ids: Vec<BankId> = (0..banks).map(BankId).collect();
    ids.shuffle(rng);
    let nl = rng.random_range(1..=max_side.min(banks - 1));
    let nb = rng.random_range(1..=max_side.min(banks - nl));
    let lenders = ids[..nl].to_vec();
    let borrowers = ids[nl..nl + nb].to_vec();
    let base: Vec<f64> = (0..nl).map(|_| rng.random_range(0.0..0.08)).collect();
    let rho: Vec<f64> = (0..nb).map(|_| rng.random_range(0.0..0.3)).collect();
    let reservation: Vec<f64> = (0..nb).map(|_| rng.random_range(0.02..0.12)).collect();
    let quotes = QuoteSet::fair(lenders, borrowers, base, &rho, 1).expect("valid random quotes");
    LiquidityMarket::new(0, quotes, reservation, rho, mode, 1).expect("valid random market")
}

/// [`random_market`] on `n` in `[L + B, 8]` banks with a random integer
/// exposure network (each pair linked with probability 0.4, up to 3 units
/// either way), equities in [0.5, 3) and one-period default probabilities
/// in [0, 0.01).
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_side: usize) -> RandomInstance {
    let n = rng.random_range(2..=8usize).max(2);
    let market = random_market(rng, n, max_side, LenderMode::Indifferent);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                let v = f64::from(rng.random_range(-3..=3i32));
                rows[i][j] = v;
                rows[j][i] = -v;
            }
        }
    }
    RandomInstance {
        market,
        prior: NetExposureMatrix::from_rows(&rows).expect("antisymmetric by construction"),
        equities: (0..n).map(|_| rng.random_range(0.5..3.0)).collect(),
        rho_1: (0..n).map(|_| rng.random_range(0.0..0.01)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_fixtures_pass() {
        for r in run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn random_instances_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let inst = random_instance(&mut rng, 4);
            let n = inst.prior.size();
            assert!(n <= 8);
            let m = &inst.market;
            assert!(m.lender_count() <= 4 && m.borrower_count() <= 4);
            assert!(m.lenders().iter().chain(m.borrowers()).all(|b| b.index() < n));
        }
    }
}
