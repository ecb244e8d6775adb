//! Flat `key = value` experiment files.
//!
//! ```text
//! # reference environment
//! env.kind = linear
//! env.m = 3
//! env.d = 2
//! env.K = 10
//! env.seed = 11
//! algo.kind = full
//! run.T = 16384
//! run.B_factor = 4
//! run.repeats = 20
//! ```
//!
//! Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `env.kind` | `linear`, `bwk` or `ospp` |
//! | `env.m`, `env.d`, `env.K`, `env.seed` | linear environment shape and parameter seed |
//! | `env.noise` | `two-point` (default), `two-point:SCALE`, `bernoulli` or `none` |
//! | `env.reward_means` | bwk: `r_1,..,r_K` |
//! | `env.consumption_means` | bwk: `d` rows `c_1,..,c_K` separated by `;` |
//! | `env.options` | ospp: option sets separated by `\|`, options by `;`, entries by `,` |
//! | `algo.kind` | `full`, `core` or `baseline` |
//! | `algo.z` | required for `core` |
//! | `algo.baseline` | `oracle-static`, `unconstrained-linucb` or `uniform-random` |
//! | `run.T`, `run.B` | horizon and budget |
//! | `run.B_factor` | instead of `run.B`: `B = factor * m * T^(3/4)` |
//! | `run.T0` | exploration length, default `ceil(sqrt(T))` |
//! | `run.delta` | confidence, default 0.05 |
//! | `run.repeats`, `run.seed` | episode count and master seed |
//! | `run.oracle_samples` | override of `max(10^4, 10 T)` |
//! | `run.out` | output directory |
//!
//! Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bootstrap::default_t0;
use crate::environment::{make_bwk, make_ospp, LinearEnvironment, NoiseLaw};
use crate::error::{Error, Result};

use super::baseline::Baseline;

const KEYS: &[&str] = &[
    "env.kind",
    "env.m",
    "env.d",
    "env.K",
    "env.seed",
    "env.noise",
    "env.reward_means",
    "env.consumption_means",
    "env.options",
    "algo.kind",
    "algo.z",
    "algo.baseline",
    "run.T",
    "run.B",
    "run.B_factor",
    "run.T0",
    "run.delta",
    "run.repeats",
    "run.seed",
    "run.oracle_samples",
    "run.out",
];

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Linear { m: usize, d: usize, k: usize, param_seed: u64, noise: NoiseLaw },
    Bwk { reward_means: Vec<f64>, consumption_means: Vec<Vec<f64>>, noise: NoiseLaw },
    Ospp { option_sets: Vec<Vec<Vec<f64>>> },
}

impl EnvSpec {
    pub fn m(&self) -> usize {
        match self {
            EnvSpec::Linear { m, .. } => *m,
            EnvSpec::Bwk { reward_means, .. } => reward_means.len(),
            EnvSpec::Ospp { option_sets } => option_sets[0][0].len(),
        }
    }

    /// Environment with episode seed `seed`.
    pub fn build(&self, seed: u64) -> Result<LinearEnvironment> {
        match self {
            EnvSpec::Linear { m, d, k, param_seed, noise } => {
                LinearEnvironment::random_linear(*m, *d, *k, *param_seed, *noise, seed)
            }
            EnvSpec::Bwk { reward_means, consumption_means, noise } => {
                Ok(make_bwk(reward_means, consumption_means)?.with_noise(*noise).reseeded(seed))
            }
            EnvSpec::Ospp { option_sets } => Ok(make_ospp(option_sets)?.reseeded(seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgoSpec {
    /// Exploration, `Z` estimate, then the primal-dual rule.
    Full,
    /// Primal-dual rule with a given `Z`.
    Core { z: f64 },
    Baseline(Baseline),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BudgetSpec {
    Absolute(f64),
    /// `factor * m * T^(3/4)`.
    Factor(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algo: AlgoSpec,
    pub horizon: u64,
    pub budget: BudgetSpec,
    pub t0: Option<u64>,
    pub delta: f64,
    pub repeats: usize,
    pub seed: u64,
    pub oracle_samples: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn budget(&self) -> f64 {
        match self.budget {
            BudgetSpec::Absolute(b) => b,
            BudgetSpec::Factor(f) => f * self.env.m() as f64 * (self.horizon as f64).powf(0.75),
        }
    }

    pub fn t0(&self) -> u64 {
        self.t0.unwrap_or_else(|| default_t0(self.horizon))
    }

    pub fn oracle_samples(&self) -> usize {
        self.oracle_samples.unwrap_or_else(|| (10 * self.horizon as usize).max(10_000))
    }

    /// Re-checks the invariants after fields were edited in place.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.horizon == 0 {
            return bad("run.T must be positive".into());
        }
        let b = self.budget();
        if !(b.is_finite() && b > 0.0) {
            return bad(format!("budget must be positive, got {b}"));
        }
        if self.repeats == 0 {
            return bad("run.repeats must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("run.delta must lie in (0,1), got {}", self.delta));
        }
        if self.oracle_samples == Some(0) {
            return bad("run.oracle_samples must be positive".into());
        }
        if let AlgoSpec::Core { z } = self.algo {
            if !(z.is_finite() && z >= 0.0) {
                return bad(format!("algo.z must be finite and nonnegative, got {z}"));
            }
        }
        if self.algo == AlgoSpec::Full {
            let t0 = self.t0();
            if t0 < 2 || t0 > self.horizon {
                return bad(format!("run.T0 = {t0} must lie in [2, T]"));
            }
            if b <= 2.0 * t0 as f64 {
                return bad(format!("budget {b} must exceed 2 T0 = {}", 2 * t0));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::ConfigInvalid(format!("line {}: unknown key `{key}`", n + 1)));
            }
            if kv.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::ConfigInvalid(format!("line {}: repeated key `{key}`", n + 1)));
            }
        }
        let cfg = Keys(kv).into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::ConfigInvalid(format!("missing key `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::ConfigInvalid(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?;
        Ok(self.parse(key)?.expect("present"))
    }

    /// Rejects keys that belong to a different variant.
    fn forbid(&self, keys: &[&str], why: &str) -> Result<()> {
        match keys.iter().find(|k| self.0.contains_key(**k)) {
            Some(k) => Err(Error::ConfigInvalid(format!("`{k}` is not used {why}"))),
            None => Ok(()),
        }
    }

    fn noise(&self) -> Result<NoiseLaw> {
        match self.get("env.noise") {
            None => Ok(NoiseLaw::default()),
            Some(v) => parse_noise(v),
        }
    }

    fn into_config(self) -> Result<ExperimentConfig> {
        let env = match self.require("env.kind")? {
            "linear" => {
                self.forbid(&["env.reward_means", "env.consumption_means", "env.options"], "by env.kind = linear")?;
                EnvSpec::Linear {
                    m: self.parse_required("env.m")?,
                    d: self.parse_required("env.d")?,
                    k: self.parse_required("env.K")?,
                    param_seed: self.parse("env.seed")?.unwrap_or(0),
                    noise: self.noise()?,
                }
            }
            "bwk" => {
                self.forbid(&["env.m", "env.d", "env.K", "env.seed", "env.options"], "by env.kind = bwk")?;
                EnvSpec::Bwk {
                    reward_means: parse_list(self.require("env.reward_means")?)?,
                    consumption_means: parse_rows(self.require("env.consumption_means")?, ';')?,
                    noise: self.noise()?,
                }
            }
            "ospp" => {
                self.forbid(
                    &["env.m", "env.d", "env.K", "env.seed", "env.noise", "env.reward_means", "env.consumption_means"],
                    "by env.kind = ospp",
                )?;
                let option_sets = self
                    .require("env.options")?
                    .split('|')
                    .map(|set| parse_rows(set, ';'))
                    .collect::<Result<Vec<_>>>()?;
                if option_sets.is_empty() || option_sets[0].is_empty() {
                    return Err(Error::ConfigInvalid("env.options is empty".into()));
                }
                EnvSpec::Ospp { option_sets }
            }
            other => return Err(Error::ConfigInvalid(format!("unknown env.kind `{other}`"))),
        };

        let algo = match self.get("algo.kind").unwrap_or("full") {
            "full" => {
                self.forbid(&["algo.z", "algo.baseline"], "by algo.kind = full")?;
                AlgoSpec::Full
            }
            "core" => {
                self.forbid(&["algo.baseline"], "by algo.kind = core")?;
                AlgoSpec::Core { z: self.parse_required("algo.z")? }
            }
            "baseline" => {
                self.forbid(&["algo.z"], "by algo.kind = baseline")?;
                AlgoSpec::Baseline(self.require("algo.baseline")?.parse()?)
            }
            other => return Err(Error::ConfigInvalid(format!("unknown algo.kind `{other}`"))),
        };

        let budget = match (self.parse::<f64>("run.B")?, self.parse::<f64>("run.B_factor")?) {
            (Some(b), None) => BudgetSpec::Absolute(b),
            (None, Some(f)) => BudgetSpec::Factor(f),
            _ => return Err(Error::ConfigInvalid("exactly one of run.B and run.B_factor is required".into())),
        };

        Ok(ExperimentConfig {
            env,
            algo,
            horizon: self.parse_required("run.T")?,
            budget,
            t0: self.parse("run.T0")?,
            delta: self.parse("run.delta")?.unwrap_or(0.05),
            repeats: self.parse("run.repeats")?.unwrap_or(1),
            seed: self.parse("run.seed")?.unwrap_or(0),
            oracle_samples: self.parse("run.oracle_samples")?,
            out: self.get("run.out").map(PathBuf::from),
        })
    }
}

fn parse_noise(v: &str) -> Result<NoiseLaw> {
    let law = match v.split_once(':') {
        None if v == "none" => NoiseLaw::None,
        None if v == "bernoulli" => NoiseLaw::Bernoulli,
        None if v == "two-point" => NoiseLaw::default(),
        Some(("two-point", s)) => match s.trim().parse::<f64>() {
            Ok(scale) if (0.0..=1.0).contains(&scale) => NoiseLaw::TwoPoint { scale },
            _ => return Err(Error::ConfigInvalid(format!("two-point scale must lie in [0,1], got `{s}`"))),
        },
        _ => return Err(Error::ConfigInvalid(format!("unknown env.noise `{v}`"))),
    };
    Ok(law)
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::ConfigInvalid(format!("bad number `{}`", t.trim()))))
        .collect()
}

fn parse_rows(v: &str, sep: char) -> Result<Vec<Vec<f64>>> {
    v.split(sep).filter(|r| !r.trim().is_empty()).map(parse_list).collect()
}
