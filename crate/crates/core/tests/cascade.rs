use proptest::prelude::*;
use srtlab_core::cascade::{
    expected_systemic_loss, run_cascade, systemic_impact, systemic_impacts, FAILURE_TOLERANCE,
};
use srtlab_core::{BankId, NetExposureMatrix};

/// Fixed point of "a bank fails once the claims it holds on failed banks
/// use up its equity", found by rescanning until nothing changes.
fn oracle(a: &[Vec<f64>], e: &[f64], seeds: &[usize]) -> Vec<bool> {
    let n = e.len();
    let tol = FAILURE_TOLERANCE * e.iter().cloned().fold(0.0, f64::max);
    let mut failed = vec![false; n];
    for &s in seeds {
        failed[s] = true;
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if failed[i] {
                continue;
            }
            let loss: f64 = (0..n).filter(|&j| failed[j]).map(|j| a[i][j].max(0.0)).sum();
            if loss > 0.0 && e[i] - loss <= tol {
                failed[i] = true;
                changed = true;
            }
        }
        if !changed {
            return failed;
        }
    }
}

fn network() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(-3i32..=3, n * n),
            prop::collection::vec(prop_oneof![(0u32..5).prop_map(f64::from), 0.0..5.0f64], n),
        )
            .prop_map(move |(raw, e)| {
                let mut a = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        a[i][j] = f64::from(raw[i * n + j]);
                        a[j][i] = -a[i][j];
                    }
                }
                (a, e)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_fixed_point_oracle((a, e) in network(), seed in any::<prop::sample::Index>()) {
        let m = NetExposureMatrix::from_rows(&a).unwrap();
        let s = seed.index(e.len());
        let state = run_cascade(&m, &e, &[BankId(s)]).unwrap();
        prop_assert_eq!(state.bankrupt.clone(), oracle(&a, &e, &[s]));
        let downstream: f64 = (0..e.len()).filter(|&i| i != s && state.bankrupt[i]).map(|i| e[i]).sum();
        prop_assert!((systemic_impact(&m, &e, BankId(s)).unwrap() - downstream).abs() < 1e-12);
        for (i, &x) in state.equities.iter().enumerate() {
            prop_assert!(x >= 0.0 && x <= e[i]);
        }
    }

    #[test]
    fn more_seeds_never_save_a_bank((a, e) in network(), s1 in any::<prop::sample::Index>(), s2 in any::<prop::sample::Index>()) {
        let m = NetExposureMatrix::from_rows(&a).unwrap();
        let (x, y) = (s1.index(e.len()), s2.index(e.len()));
        let one = run_cascade(&m, &e, &[BankId(x)]).unwrap();
        let two = run_cascade(&m, &e, &[BankId(x), BankId(y)]).unwrap();
        for i in 0..e.len() {
            prop_assert!(!one.bankrupt[i] || two.bankrupt[i]);
        }
        prop_assert_eq!(two.bankrupt, oracle(&a, &e, &[x, y]));
    }

    #[test]
    fn esl_is_linear_in_probabilities((a, e) in network(), scale in 0.0..10.0f64) {
        let m = NetExposureMatrix::from_rows(&a).unwrap();
        let n = e.len();
        let p: Vec<f64> = (0..n).map(|i| 0.001 * (i + 1) as f64).collect();
        let q: Vec<f64> = (0..n).map(|i| 0.002 * ((i * 7) % 5) as f64).collect();
        let pq: Vec<f64> = p.iter().zip(&q).map(|(x, y)| x + scale * y).collect();
        let lhs = expected_systemic_loss(&m, &e, &pq).unwrap();
        let rhs = expected_systemic_loss(&m, &e, &p).unwrap() + scale * expected_systemic_loss(&m, &e, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let si = systemic_impacts(&m, &e).unwrap();
        let direct: f64 = si.iter().zip(&p).map(|(s, r)| s * r).sum();
        prop_assert!((expected_systemic_loss(&m, &e, &p).unwrap() - direct).abs() < 1e-12);
    }
}

#[test]
fn example_prior_network_topples_the_chain() {
    let ex = srtlab_core::fixtures::ThreeLenderExample::new();
    let state = run_cascade(&ex.prior, &ex.equities, &[BankId(2)]).unwrap();
    assert_eq!(state.bankrupt_banks(), vec![BankId(2), BankId(6), BankId(7), BankId(8)]);
    assert_eq!(state.steps, 4);
}

#[test]
fn lenders_in_low_esl_configuration_have_no_impact() {
    let ex = srtlab_core::fixtures::ThreeLenderExample::new();
    let a = ex.network(&[(1, 4), (2, 5)]);
    let si = systemic_impacts(&a, &ex.equities).unwrap();
    assert_eq!(si[0], 0.0);
    assert_eq!(si[1], 0.0);
}
