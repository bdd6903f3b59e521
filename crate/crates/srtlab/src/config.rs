//! Flat `key = value` scenario files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are the [`ScenarioConfig`] field names; distributions are written
//! `uniform(lo, hi)` and a bare number means a point mass. Beliefs are
//! `naive`, `full` or `common_prior(q)`, the lender mode `indifferent` or
//! `strict`, and `zeta` is either `auto` or a number.
//!
//! Settings are layered: defaults, then the file, then `SRTLAB_<KEY>`
//! environment variables, then `--set key=value` flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use srtlab_core::sim::Uniform;
use srtlab_core::{BeliefMode, LenderMode, ScenarioConfig, SimError};
use thiserror::Error;

pub const ENV_PREFIX: &str = "SRTLAB_";

pub const KEYS: [&str; 19] = [
    "banks",
    "steps",
    "maturity",
    "loan_size",
    "shock_prob",
    "external_liability",
    "risky_asset",
    "deposit_rate",
    "hazard_rate",
    "reservation_rate",
    "tobin_rate",
    "beliefs",
    "lender_mode",
    "seed",
    "epsilon",
    "zeta",
    "si_bin_width",
    "clustering_bin_width",
    "spectral_bin_width",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: expected `key = value`, got {text:?}")]
    Syntax { origin: String, text: String },
    #[error("{origin}: unknown key {key:?}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: bad value {value:?} for {key}: {reason}")]
    BadValue {
        origin: String,
        key: String,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Invalid(#[from] SimError),
}

fn bad(origin: &str, key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        origin: origin.to_string(),
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn call<'a>(value: &'a str, name: &str) -> Option<&'a str> {
    value
        .strip_prefix(name)?
        .trim_start()
        .strip_prefix('(')?
        .strip_suffix(')')
}

fn parse_uniform(value: &str) -> Result<Uniform, String> {
    if let Some(args) = call(value, "uniform") {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err("uniform takes two arguments".into());
        }
        let lo = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
        let hi = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
        return Ok(Uniform::new(lo, hi));
    }
    let x = value
        .parse::<f64>()
        .map_err(|_| "expected uniform(lo, hi) or a number".to_string())?;
    Ok(Uniform::new(x, x))
}

fn parse_beliefs(value: &str) -> Result<BeliefMode, String> {
    match value {
        "naive" => Ok(BeliefMode::Naive),
        "full" => Ok(BeliefMode::Full),
        _ => match call(value, "common_prior") {
            Some(q) => q
                .trim()
                .parse::<f64>()
                .map(BeliefMode::CommonPrior)
                .map_err(|e| e.to_string()),
            None => Err("expected naive, full or common_prior(q)".into()),
        },
    }
}

/// Applies one setting to `config`. `origin` names where it came from for
/// error messages.
pub fn apply(config: &mut ScenarioConfig, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
    let value = value.trim();
    let err = |reason: String| bad(origin, key, value, reason);
    macro_rules! num {
        ($t:ty) => {
            value.parse::<$t>().map_err(|e| err(e.to_string()))?
        };
    }
    match key {
        "banks" => config.banks = num!(usize),
        "steps" => config.steps = num!(u64),
        "maturity" => config.maturity = num!(u32),
        "loan_size" => config.loan_size = num!(f64),
        "shock_prob" => config.shock_prob = num!(f64),
        "external_liability" => config.external_liability = num!(f64),
        "risky_asset" => config.risky_asset = parse_uniform(value).map_err(err)?,
        "deposit_rate" => config.deposit_rate = parse_uniform(value).map_err(err)?,
        "hazard_rate" => config.hazard_rate = parse_uniform(value).map_err(err)?,
        "reservation_rate" => config.reservation_rate = num!(f64),
        "tobin_rate" => config.tobin_rate = num!(f64),
        "beliefs" => config.beliefs = parse_beliefs(value).map_err(err)?,
        "lender_mode" => {
            config.lender_mode = match value {
                "indifferent" => LenderMode::Indifferent,
                "strict" => LenderMode::Strict,
                _ => return Err(err("expected indifferent or strict".into())),
            }
        }
        "seed" => config.seed = num!(u64),
        "epsilon" => config.epsilon = num!(f64),
        "zeta" => {
            config.zeta = match value {
                "auto" => None,
                _ => Some(num!(f64)),
            }
        }
        "si_bin_width" => config.si_bin_width = num!(f64),
        "clustering_bin_width" => config.clustering_bin_width = num!(f64),
        "spectral_bin_width" => config.spectral_bin_width = num!(f64),
        _ => {
            return Err(ConfigError::UnknownKey {
                origin: origin.to_string(),
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

/// Splits `key=value`, as used on the command line.
pub fn split_assignment(text: &str, origin: &str) -> Result<(String, String), ConfigError> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ConfigError::Syntax {
            origin: origin.to_string(),
            text: text.to_string(),
        }),
    }
}

/// Applies the contents of a config file on top of `config`.
pub fn apply_text(config: &mut ScenarioConfig, text: &str, source: &str) -> Result<(), ConfigError> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("{source}:{}", n + 1);
        let (key, value) = split_assignment(line, &origin)?;
        apply(config, &key, &value, &origin)?;
    }
    Ok(())
}

/// Defaults overlaid with `text`, validated.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    apply_text(&mut config, text, "<config>")?;
    config.validate()?;
    Ok(config)
}

/// Applies every `SRTLAB_<KEY>` variable produced by `vars`.
pub fn apply_env<I>(config: &mut ScenarioConfig, vars: I) -> Result<(), ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut found: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let key = k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
            KEYS.contains(&key.as_str()).then_some((key, v))
        })
        .collect();
    found.sort();
    for (key, value) in found {
        let origin = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
        apply(config, &key, &value, &origin)?;
    }
    Ok(())
}

/// Layers the file at `path` (if any), the process environment and
/// `overrides` over the defaults, then validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut config = ScenarioConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        apply_text(&mut config, &text, &path.display().to_string())?;
    }
    apply_env(&mut config, std::env::vars())?;
    for o in overrides {
        let (key, value) = split_assignment(o, "--set")?;
        apply(&mut config, &key, &value, "--set")?;
    }
    config.validate()?;
    Ok(config)
}

fn uniform(u: Uniform) -> String {
    format!("uniform({:?}, {:?})", u.lo, u.hi)
}

/// Writes `config` in the file format; [`parse`] reads it back exactly.
pub fn render(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("banks", config.banks.to_string());
    put("steps", config.steps.to_string());
    put("maturity", config.maturity.to_string());
    put("loan_size", format!("{:?}", config.loan_size));
    put("shock_prob", format!("{:?}", config.shock_prob));
    put("external_liability", format!("{:?}", config.external_liability));
    put("risky_asset", uniform(config.risky_asset));
    put("deposit_rate", uniform(config.deposit_rate));
    put("hazard_rate", uniform(config.hazard_rate));
    put("reservation_rate", format!("{:?}", config.reservation_rate));
    put("tobin_rate", format!("{:?}", config.tobin_rate));
    put(
        "beliefs",
        match config.beliefs {
            BeliefMode::Naive => "naive".into(),
            BeliefMode::Full => "full".into(),
            BeliefMode::CommonPrior(q) => format!("common_prior({q:?})"),
        },
    );
    put(
        "lender_mode",
        match config.lender_mode {
            LenderMode::Indifferent => "indifferent".into(),
            LenderMode::Strict => "strict".into(),
        },
    );
    put("seed", config.seed.to_string());
    put("epsilon", format!("{:?}", config.epsilon));
    put(
        "zeta",
        config.zeta.map_or_else(|| "auto".into(), |z| format!("{z:?}")),
    );
    put("si_bin_width", format!("{:?}", config.si_bin_width));
    put("clustering_bin_width", format!("{:?}", config.clustering_bin_width));
    put("spectral_bin_width", format!("{:?}", config.spectral_bin_width));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let text = "
            # ten banks
            banks = 12
            steps=7
            maturity = 3
            loan_size = 2
            shock_prob = 0.5
            external_liability = 0.25
            risky_asset = uniform(1, 3)
            deposit_rate = 0.02   # point mass
            hazard_rate = uniform( 0 , 1e-3 )
            reservation_rate = 0.1
            tobin_rate = 0.05
            beliefs = common_prior(0.01)
            lender_mode = strict
            seed = 99
            epsilon = 1e-7
            zeta = 3.5
            si_bin_width = 0.5
            clustering_bin_width = 0.1
            spectral_bin_width = 0.2
        ";
        let c = parse(text).unwrap();
        assert_eq!(c.banks, 12);
        assert_eq!(c.risky_asset, Uniform::new(1.0, 3.0));
        assert_eq!(c.deposit_rate, Uniform::new(0.02, 0.02));
        assert_eq!(c.hazard_rate, Uniform::new(0.0, 1e-3));
        assert_eq!(c.beliefs, BeliefMode::CommonPrior(0.01));
        assert_eq!(c.lender_mode, LenderMode::Strict);
        assert_eq!(c.zeta, Some(3.5));
        assert_eq!(parse(&render(&c)).unwrap(), c);
    }

    #[test]
    fn defaults_round_trip() {
        let c = ScenarioConfig::default();
        assert_eq!(parse(&render(&c)).unwrap(), c);
        assert_eq!(parse("").unwrap(), c);
    }

    #[test]
    fn reports_line_and_key() {
        let e = parse("banks = 3\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("<config>:2") && e.contains("bogus"), "{e}");
        let e = parse("steps = ten").unwrap_err().to_string();
        assert!(e.contains("steps"), "{e}");
        assert!(matches!(parse("no equals sign"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(parse("shock_prob = 2"), Err(ConfigError::Invalid(_))));
        assert!(parse("beliefs = common_prior(x)").is_err());
        assert!(parse("risky_asset = uniform(1)").is_err());
    }

    #[test]
    fn environment_overrides_file() {
        let mut c = parse("seed = 1").unwrap();
        apply_env(
            &mut c,
            [
                ("SRTLAB_SEED".to_string(), "5".to_string()),
                ("SRTLAB_NOT_A_KEY".to_string(), "x".to_string()),
                ("HOME".to_string(), "/root".to_string()),
            ],
        )
        .unwrap();
        assert_eq!(c.seed, 5);
    }
}
