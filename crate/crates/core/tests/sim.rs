use srtlab_core::sim::Uniform;
use srtlab_core::{BeliefMode, LenderMode, Policy, ScenarioConfig, Simulation};

fn config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        steps: 60,
        maturity: 8,
        ..ScenarioConfig::default()
    }
}

#[test]
fn same_seed_same_output() {
    let a = Simulation::run(config(3), &Policy::ALL).unwrap();
    let b = Simulation::run(config(3), &Policy::ALL).unwrap();
    assert_eq!(a, b);
    let c = Simulation::run(config(4), &Policy::ALL).unwrap();
    assert_ne!(a, c);
}

#[test]
fn paired_volumes() {
    for seed in 0..3 {
        let out = Simulation::run(config(seed), &Policy::ALL).unwrap();
        let (n, t, s) = (
            out.run(Policy::NoTax).unwrap(),
            out.run(Policy::Tobin).unwrap(),
            out.run(Policy::Srt).unwrap(),
        );
        let mut last = 0;
        for ((a, b), c) in n.records.iter().zip(&t.records).zip(&s.records) {
            assert_eq!(a.cum_volume, c.cum_volume);
            assert!(b.cum_volume <= a.cum_volume);
            assert!(a.cum_volume >= last);
            last = a.cum_volume;
        }
        assert!(s.mean_esl() <= n.mean_esl());
    }
}

#[test]
fn policy_subset_does_not_change_results() {
    let all = Simulation::run(config(9), &Policy::ALL).unwrap();
    let srt = Simulation::run(config(9), &[Policy::Srt]).unwrap();
    assert_eq!(all.run(Policy::Srt), srt.run(Policy::Srt));
}

#[test]
fn other_modes_run() {
    for (beliefs, mode) in [
        (BeliefMode::Full, LenderMode::Indifferent),
        (BeliefMode::CommonPrior(0.01), LenderMode::Strict),
        (BeliefMode::Naive, LenderMode::Strict),
    ] {
        let cfg = ScenarioConfig {
            beliefs,
            lender_mode: mode,
            hazard_rate: Uniform::new(0.0, 0.01),
            ..config(1)
        };
        let out = Simulation::run(cfg, &Policy::ALL).unwrap();
        let n = out.run(Policy::NoTax).unwrap();
        let s = out.run(Policy::Srt).unwrap();
        assert!(n.records.last().unwrap().cum_volume > 0);
        assert!(s.records.last().unwrap().cum_volume <= n.records.last().unwrap().cum_volume);
        assert_eq!(n.probabilities.len(), 60 * 10);
    }
}

#[test]
fn histograms_count_every_period() {
    let out = Simulation::run(config(2), &[Policy::NoTax]).unwrap();
    let d = &out.runs[0].distributions;
    assert_eq!(d.in_degree.total(), 600);
    assert_eq!(d.systemic_impact.total(), 600);
    assert_eq!(d.avg_clustering.total(), 60);
    assert_eq!(d.spectral_radius.total(), 60);
}
