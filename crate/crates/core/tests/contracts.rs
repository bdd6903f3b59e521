use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use srtlab_core::contracts::{exogenous_default_probs, lender_payoff, risk_premium};

/// First-failure frequencies from simulated exponential jump times.
fn simulate(hazards: &[f64], horizon: u32, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<Exp<f64>> = hazards.iter().map(|&g| Exp::new(g).unwrap()).collect();
    let mut counts = vec![0usize; hazards.len()];
    for _ in 0..draws {
        let times: Vec<f64> = dists.iter().map(|d| d.sample(&mut rng)).collect();
        let (first, t) = times
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &t)| if t < acc.1 { (i, t) } else { acc });
        if t <= f64::from(horizon) {
            counts[first] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

#[test]
fn first_failure_probabilities_match_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..4u64 {
        let hazards: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..0.6)).collect();
        let horizon = rng.random_range(1..4);
        let formula = exogenous_default_probs(&hazards, horizon).unwrap();
        let freq = simulate(&hazards, horizon, 200_000, case);
        for (f, s) in formula.iter().zip(&freq) {
            assert!((f - s).abs() < 5e-3, "{hazards:?} S={horizon}: {formula:?} vs {freq:?}");
        }
    }
}

#[test]
fn fair_premium_is_break_even_across_grid() {
    for r in [0.0, 0.01, 0.05, 0.08] {
        for rho in [0.0, 1e-6, 0.01, 0.2, 0.7] {
            for s in [1, 5, 30] {
                let h = risk_premium(r, rho, s).unwrap();
                assert!(lender_payoff(r, h, rho, s).abs() < 1e-9);
            }
        }
    }
}
