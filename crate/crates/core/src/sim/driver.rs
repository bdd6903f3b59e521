use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{average_clustering, degrees, spectral_radius, Histogram};
use super::{Policy, ScenarioConfig, SimError};
use crate::cascade::systemic_impacts;
use crate::contracts::{exogenous_default_probs, first_failure_mass, DefaultProbabilities};
use crate::domain::{BankId, BankState, LoanBook};
use crate::matching::{draw_shocks, select_with_order, LiquidityMarket, Matching};
use crate::tax::{
    apply_tax, max_feasible_volume, optimize_srt, realize_under_tax, SrtParams, SystemicContext,
    TaxMatrix,
};

const STREAM_INIT: u64 = 0;
const STREAM_SHOCKS: u64 = 1;
const STREAM_ORDER: u64 = 2;

/// One period of one policy's run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSeriesRecord {
    pub t: u64,
    pub policy: Policy,
    /// ESL of the network at the end of the period.
    pub esl: f64,
    /// ESL divided by the one-period probability that any bank fails.
    pub esl_conditional: f64,
    /// Loans extended so far.
    pub cum_volume: u64,
    pub volume: usize,
    pub avg_clustering: f64,
    pub spectral_radius: f64,
}

/// Default probabilities a policy's lenders priced with in one period.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilityRecord {
    pub t: u64,
    pub bank: BankId,
    pub exogenous: f64,
    pub endogenous: f64,
    pub total: f64,
}

/// Histograms pooled over every period of a run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Distributions {
    pub in_degree: Histogram,
    pub out_degree: Histogram,
    pub systemic_impact: Histogram,
    pub avg_clustering: Histogram,
    pub spectral_radius: Histogram,
    /// Sum and count of raw systemic impacts, for an unbinned mean.
    pub si_sum: f64,
    pub si_count: u64,
}

impl Distributions {
    fn new(config: &ScenarioConfig) -> Self {
        Distributions {
            in_degree: Histogram::new(1.0),
            out_degree: Histogram::new(1.0),
            systemic_impact: Histogram::new(config.si_bin_width),
            avg_clustering: Histogram::new(config.clustering_bin_width),
            spectral_radius: Histogram::new(config.spectral_bin_width),
            si_sum: 0.0,
            si_count: 0,
        }
    }

    /// `(metric name, histogram)` in output order.
    pub fn named(&self) -> [(&'static str, &Histogram); 5] {
        [
            ("in_degree", &self.in_degree),
            ("out_degree", &self.out_degree),
            ("systemic_impact", &self.systemic_impact),
            ("avg_clustering", &self.avg_clustering),
            ("spectral_radius", &self.spectral_radius),
        ]
    }

    pub fn mean_systemic_impact(&self) -> f64 {
        if self.si_count == 0 {
            0.0
        } else {
            self.si_sum / self.si_count as f64
        }
    }
}

/// Work done by the SRT optimizer over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerStats {
    pub periods: u64,
    pub candidates: u64,
    pub max_candidates: u64,
    /// Periods where the untaxed volume was out of reach and the largest
    /// feasible volume was used instead.
    pub volume_shortfalls: u64,
}

/// Everything recorded for one policy.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyRun {
    pub policy: Policy,
    pub records: Vec<TimeSeriesRecord>,
    pub distributions: Distributions,
    pub probabilities: Vec<ProbabilityRecord>,
    pub optimizer: OptimizerStats,
}

impl PolicyRun {
    pub fn mean_esl(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.esl).sum::<f64>() / self.records.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioOutput {
    /// Banks as drawn at the start of the run.
    pub banks: Vec<BankState>,
    pub runs: Vec<PolicyRun>,
}

impl ScenarioOutput {
    pub fn run(&self, policy: Policy) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.policy == policy)
    }
}

struct PolicyState {
    run: PolicyRun,
    banks: Vec<BankState>,
    book: LoanBook,
    cum_volume: u64,
    reported: bool,
}

/// Lockstep simulation of several policies on shared randomness.
///
/// Every policy sees the same banks, the same liquidity shocks and the same
/// borrower order each period; only the matching rule differs. The untaxed
/// market is always simulated because the SRT targets its volume.
/// Exogenous defaults are never realized: hazard rates only feed the
/// default probabilities, and ESL is the loss expected if a default
/// happened.
pub struct Simulation {
    config: ScenarioConfig,
    initial: Vec<BankState>,
    states: Vec<PolicyState>,
    equities: Vec<f64>,
    hazards: Vec<f64>,
    rho_1: Vec<f64>,
    failure_mass: f64,
    shocks: ChaCha8Rng,
    order: ChaCha8Rng,
    period: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Simulation {
    pub fn new(config: ScenarioConfig, policies: &[Policy]) -> Result<Self, SimError> {
        config.validate()?;
        let mut init = stream(config.seed, STREAM_INIT);
        let initial: Vec<BankState> = (0..config.banks)
            .map(|i| {
                let y = config.risky_asset.sample(&mut init);
                let r = config.deposit_rate.sample(&mut init);
                let g = config.hazard_rate.sample(&mut init);
                BankState::new(
                    BankId(i),
                    y,
                    config.external_liability,
                    g,
                    r,
                    config.reservation_rate,
                )
            })
            .collect();
        let equities: Vec<f64> = initial.iter().map(BankState::equity).collect();
        let hazards: Vec<f64> = initial.iter().map(|b| b.hazard_rate).collect();
        let rho_1 = exogenous_default_probs(&hazards, 1)?;
        let failure_mass = first_failure_mass(&hazards);

        let mut wanted: Vec<Policy> = policies.to_vec();
        wanted.sort();
        wanted.dedup();
        let mut states = Vec::new();
        for p in Policy::ALL {
            let reported = wanted.contains(&p);
            if !reported && p != Policy::NoTax {
                continue;
            }
            states.push(PolicyState {
                run: PolicyRun {
                    policy: p,
                    records: Vec::new(),
                    distributions: Distributions::new(&config),
                    probabilities: Vec::new(),
                    optimizer: OptimizerStats::default(),
                },
                banks: initial.clone(),
                book: LoanBook::new(config.banks),
                cum_volume: 0,
                reported,
            });
        }
        Ok(Simulation {
            shocks: stream(config.seed, STREAM_SHOCKS),
            order: stream(config.seed, STREAM_ORDER),
            config,
            initial,
            states,
            equities,
            hazards,
            rho_1,
            failure_mass,
            period: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn banks(&self) -> &[BankState] {
        &self.initial
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn is_finished(&self) -> bool {
        self.period >= self.config.steps
    }

    /// Loan book of `policy`, if it is being simulated.
    pub fn book(&self, policy: Policy) -> Option<&LoanBook> {
        self.states.iter().find(|s| s.run.policy == policy).map(|s| &s.book)
    }

    /// Advances every policy by one period.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.period + 1;
        let cfg = &self.config;
        let sides = draw_shocks(&self.initial, cfg.shock_prob, t, &mut self.shocks)?;
        let mut order: Vec<usize> = (0..sides.borrowers.len()).collect();
        order.shuffle(&mut self.order);

        // states[0] is always the untaxed market
        let mut reference_volume = 0;
        for state in self.states.iter_mut() {
            let prev = state.book.net_exposure();
            let probs = DefaultProbabilities::compute(
                &prev,
                &self.equities,
                &self.hazards,
                cfg.maturity,
                cfg.beliefs,
            )?;
            let market = LiquidityMarket::from_banks(
                &sides,
                &state.banks,
                &probs.total,
                cfg.maturity,
                cfg.lender_mode,
            )?;

            let matching: Matching = match state.run.policy {
                Policy::NoTax => select_with_order(&market, &order)?,
                Policy::Tobin => {
                    let taxed = apply_tax(&market, &TaxMatrix::tobin(&market, cfg.tobin_rate)?)?;
                    select_with_order(&taxed, &order)?
                }
                Policy::Srt => {
                    let prior = state.book.net_exposure_at(t);
                    let ctx = SystemicContext {
                        prior: &prior,
                        equities: &self.equities,
                        rho_1: &self.rho_1,
                        loan_size: cfg.loan_size,
                    };
                    let reachable = max_feasible_volume(&market);
                    let stats = &mut state.run.optimizer;
                    let volume = if reference_volume > reachable {
                        stats.volume_shortfalls += 1;
                        log::warn!(
                            "period {t}: untaxed volume {reference_volume} is not feasible for the SRT market, using {reachable}"
                        );
                        reachable
                    } else {
                        reference_volume
                    };
                    let params = SrtParams {
                        epsilon: cfg.epsilon,
                        zeta: cfg.zeta,
                    };
                    let solution = optimize_srt(&market, &ctx, volume, &params)?;
                    stats.periods += 1;
                    stats.candidates += solution.candidates as u64;
                    stats.max_candidates = stats.max_candidates.max(solution.candidates as u64);
                    let realized = realize_under_tax(&market, &solution.tax)?;
                    if realized != solution.matching {
                        return Err(SimError::TaxDidNotPin { period: t });
                    }
                    realized
                }
            };
            if state.run.policy == Policy::NoTax {
                reference_volume = matching.volume();
            }

            let idle: Vec<BankId> = sides
                .lenders
                .iter()
                .copied()
                .filter(|&l| matching.mate(l) == l)
                .collect();
            state
                .book
                .advance_period(&mut state.banks, matching.pairs(), &idle, cfg.maturity, cfg.loan_size)?;
            state.cum_volume += matching.volume() as u64;

            if !state.reported {
                continue;
            }
            let a = state.book.net_exposure();
            let si = systemic_impacts(&a, &self.equities)?;
            let esl: f64 = si.iter().zip(&self.rho_1).map(|(s, p)| s * p).sum();
            let clustering = average_clustering(&a);
            let radius = spectral_radius(&a)?;
            let (ins, outs) = degrees(&a);

            let dist = &mut state.run.distributions;
            for (&i, &o) in ins.iter().zip(&outs) {
                dist.in_degree.add(i as f64);
                dist.out_degree.add(o as f64);
            }
            for &s in &si {
                dist.systemic_impact.add(s);
                dist.si_sum += s;
                dist.si_count += 1;
            }
            dist.avg_clustering.add(clustering);
            dist.spectral_radius.add(radius);

            for (k, bank) in self.initial.iter().enumerate() {
                state.run.probabilities.push(ProbabilityRecord {
                    t,
                    bank: bank.id,
                    exogenous: probs.exogenous[k],
                    endogenous: probs.endogenous[k],
                    total: probs.total[k],
                });
            }
            state.run.records.push(TimeSeriesRecord {
                t,
                policy: state.run.policy,
                esl,
                esl_conditional: if self.failure_mass > 0.0 {
                    esl / self.failure_mass
                } else {
                    0.0
                },
                cum_volume: state.cum_volume,
                volume: matching.volume(),
                avg_clustering: clustering,
                spectral_radius: radius,
            });
        }
        self.period = t;
        Ok(())
    }

    /// Runs the remaining periods and hands back the recorded output.
    pub fn finish(mut self) -> Result<ScenarioOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(ScenarioOutput {
            banks: self.initial,
            runs: self
                .states
                .into_iter()
                .filter(|s| s.reported)
                .map(|s| s.run)
                .collect(),
        })
    }

    /// Simulates `policies` for the configured number of periods.
    pub fn run(config: ScenarioConfig, policies: &[Policy]) -> Result<ScenarioOutput, SimError> {
        Simulation::new(config, policies)?.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Uniform;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            banks: 6,
            steps: 40,
            maturity: 5,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn no_shocks_means_nothing_happens() {
        let cfg = ScenarioConfig {
            shock_prob: 0.0,
            ..small()
        };
        let out = Simulation::run(cfg, &Policy::ALL).unwrap();
        for run in &out.runs {
            assert!(run.records.iter().all(|r| r.cum_volume == 0 && r.esl == 0.0));
        }
    }

    #[test]
    fn zero_hazards_mean_zero_esl() {
        let cfg = ScenarioConfig {
            hazard_rate: Uniform::new(0.0, 0.0),
            ..small()
        };
        let out = Simulation::run(cfg, &[Policy::NoTax]).unwrap();
        let run = out.run(Policy::NoTax).unwrap();
        assert!(run.records.iter().all(|r| r.esl == 0.0));
        assert!(run.records.last().unwrap().cum_volume > 0);
    }

    #[test]
    fn srt_matches_untaxed_volume() {
        let out = Simulation::run(small(), &Policy::ALL).unwrap();
        let notax = out.run(Policy::NoTax).unwrap();
        let srt = out.run(Policy::Srt).unwrap();
        let tobin = out.run(Policy::Tobin).unwrap();
        for ((a, b), c) in notax.records.iter().zip(&srt.records).zip(&tobin.records) {
            assert_eq!(a.cum_volume, b.cum_volume);
            assert!(c.cum_volume <= a.cum_volume);
        }
    }

    #[test]
    fn reference_runs_even_when_not_reported() {
        let out = Simulation::run(small(), &[Policy::Srt]).unwrap();
        assert_eq!(out.runs.len(), 1);
        assert!(out.runs[0].records.last().unwrap().cum_volume > 0);
    }
}
