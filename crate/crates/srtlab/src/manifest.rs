//! JSON record of what a run was asked to do, written next to its outputs.
//! A manifest can be fed back to `run --manifest` to repeat the run.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use srtlab_core::{Policy, ScenarioConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub config: ScenarioConfig,
    pub policies: Vec<Policy>,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(
        config_path: Option<&Path>,
        config: ScenarioConfig,
        policies: Vec<Policy>,
        output_dir: &Path,
    ) -> Self {
        RunManifest {
            config_path: config_path.map(Path::to_path_buf),
            seed: config.seed,
            config,
            policies,
            output_dir: output_dir.to_path_buf(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp: now(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn now() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
    {
        return epoch;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use srtlab_core::sim::Uniform;
    use srtlab_core::BeliefMode;

    #[test]
    fn round_trips() {
        let config = ScenarioConfig {
            seed: 42,
            beliefs: BeliefMode::CommonPrior(0.1 + 0.2),
            zeta: Some(1.0 / 3.0),
            hazard_rate: Uniform::new(1e-5, 0.000_9),
            ..ScenarioConfig::default()
        };
        let m = RunManifest::new(Some(Path::new("a.cfg")), config, Policy::ALL.to_vec(), Path::new("out"));
        assert_eq!(m.seed, 42);
        assert_eq!(RunManifest::parse(&m.render()).unwrap(), m);
    }
}
