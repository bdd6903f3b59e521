use alloc::format;
use alloc::string::String;

use rand::Rng;

use super::SimError;
use crate::contracts::BeliefMode;
use crate::matching::LenderMode;

/// Uniform distribution on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Uniform {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Uniform { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }

    fn check(&self, field: &'static str) -> Result<(), SimError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(SimError::invalid(
                field,
                format!("bounds ({}, {}) must be finite with lo <= hi", self.lo, self.hi),
            ));
        }
        Ok(())
    }
}

/// Which regime a run is simulated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Policy {
    NoTax,
    Tobin,
    Srt,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::NoTax, Policy::Tobin, Policy::Srt];

    pub fn label(self) -> &'static str {
        match self {
            Policy::NoTax => "notax",
            Policy::Tobin => "tobin",
            Policy::Srt => "srt",
        }
    }

    pub fn from_label(s: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.label() == s)
    }
}

/// Everything a simulation run depends on. The defaults are the 10-bank,
/// 500-period experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub banks: usize,
    pub steps: u64,
    /// Loan maturity `S` in periods.
    pub maturity: u32,
    pub loan_size: f64,
    /// Probability `y` that a bank receives a liquidity shock.
    pub shock_prob: f64,
    /// External liability `Z`, the same for every bank.
    pub external_liability: f64,
    /// Initial risky asset `Y`.
    pub risky_asset: Uniform,
    pub deposit_rate: Uniform,
    pub hazard_rate: Uniform,
    pub reservation_rate: f64,
    /// Uniform mark-up of the Tobin regime.
    pub tobin_rate: f64,
    pub beliefs: BeliefMode,
    pub lender_mode: LenderMode,
    pub seed: u64,
    pub epsilon: f64,
    /// `None` derives the ESL weight from each period's market.
    pub zeta: Option<f64>,
    pub si_bin_width: f64,
    pub clustering_bin_width: f64,
    pub spectral_bin_width: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            banks: 10,
            steps: 500,
            maturity: 30,
            loan_size: 1.0,
            shock_prob: 1.0,
            external_liability: 0.5,
            risky_asset: Uniform::new(0.5, 2.5),
            deposit_rate: Uniform::new(0.0, 0.08),
            hazard_rate: Uniform::new(0.0, 0.0009),
            reservation_rate: 0.09,
            tobin_rate: 0.03,
            beliefs: BeliefMode::Naive,
            lender_mode: LenderMode::Indifferent,
            seed: 0,
            epsilon: crate::tax::DEFAULT_EPSILON,
            zeta: None,
            si_bin_width: 0.25,
            clustering_bin_width: 0.05,
            spectral_bin_width: 0.1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        fn finite(field: &'static str, v: f64) -> Result<(), SimError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(SimError::invalid(field, format!("{v} is not finite")))
            }
        }
        fn positive(field: &'static str, v: f64) -> Result<(), SimError> {
            finite(field, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(SimError::invalid(field, format!("{v} must be positive")))
            }
        }
        if self.banks == 0 {
            return Err(SimError::invalid("banks", String::from("need at least one bank")));
        }
        if self.steps == 0 {
            return Err(SimError::invalid("steps", String::from("need at least one period")));
        }
        if self.maturity == 0 {
            return Err(SimError::invalid("maturity", String::from("must be at least one period")));
        }
        positive("loan_size", self.loan_size)?;
        if !(0.0..=1.0).contains(&self.shock_prob) {
            return Err(SimError::invalid(
                "shock_prob",
                format!("{} is outside [0, 1]", self.shock_prob),
            ));
        }
        finite("external_liability", self.external_liability)?;
        if self.external_liability < 0.0 {
            return Err(SimError::invalid("external_liability", String::from("must be nonnegative")));
        }
        self.risky_asset.check("risky_asset")?;
        if self.risky_asset.lo < self.external_liability {
            return Err(SimError::invalid(
                "risky_asset",
                format!(
                    "lower bound {} is below the external liability {}, so equity could start negative",
                    self.risky_asset.lo, self.external_liability
                ),
            ));
        }
        self.deposit_rate.check("deposit_rate")?;
        if self.deposit_rate.lo < 0.0 {
            return Err(SimError::invalid("deposit_rate", String::from("rates must be nonnegative")));
        }
        self.hazard_rate.check("hazard_rate")?;
        if self.hazard_rate.lo < 0.0 {
            return Err(SimError::invalid("hazard_rate", String::from("hazard rates must be nonnegative")));
        }
        finite("reservation_rate", self.reservation_rate)?;
        finite("tobin_rate", self.tobin_rate)?;
        if self.tobin_rate < 0.0 {
            return Err(SimError::invalid("tobin_rate", String::from("must be nonnegative")));
        }
        if let BeliefMode::CommonPrior(q) = self.beliefs {
            if !(0.0..=1.0).contains(&q) {
                return Err(SimError::invalid("beliefs", format!("common prior {q} is outside [0, 1]")));
            }
        }
        positive("epsilon", self.epsilon)?;
        if let Some(z) = self.zeta {
            finite("zeta", z)?;
            if z < 0.0 {
                return Err(SimError::invalid("zeta", String::from("must be nonnegative")));
            }
        }
        positive("si_bin_width", self.si_bin_width)?;
        positive("clustering_bin_width", self.clustering_bin_width)?;
        positive("spectral_bin_width", self.spectral_bin_width)?;
        Ok(())
    }
}
