//! Batch experiments: seeded episodes, oracle regret, baselines and output.
//!
//! Episode `i` of an experiment with master seed `s` runs on the environment
//! reseeded with `derive(s, i)`, so results do not depend on whether repeats
//! run in parallel. `OPT` is computed once per experiment from the
//! environment seeded with `s`.

pub mod baseline;
pub mod config;
pub mod output;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bootstrap::run_full;
use crate::environment::LinearEnvironment;
use crate::error::{Error, Result};
use crate::packing::oracle_solution;
use crate::par::{self, Parallelism};
use crate::policy::{run_episode, EpisodeLog, StopReason};
use crate::seed;

pub use baseline::{run_baseline, Baseline, StaticPolicy};
pub use config::{AlgoSpec, BudgetSpec, EnvSpec, ExperimentConfig};
pub use output::{median, quantile, sig9, write_episode_csv, Quartiles};

/// Environment and oracle shared by all episodes of one experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub base: LinearEnvironment,
    pub opt: f64,
    pub oracle_samples: usize,
    pub policy: Option<StaticPolicy>,
}

pub fn prepare(config: &ExperimentConfig, mode: Parallelism) -> Result<Prepared> {
    config.validate()?;
    let base = config.env.build(config.seed)?;
    let n = config.oracle_samples();
    let (opt, policy) = if config.algo == AlgoSpec::Baseline(Baseline::OracleStatic) {
        let (policy, opt) = StaticPolicy::from_oracle(&base, config.budget(), config.horizon, n, mode)?;
        (opt, Some(policy))
    } else {
        (oracle_solution(&base, config.budget(), config.horizon, n, mode)?.1.value, None)
    };
    Ok(Prepared { base, opt, oracle_samples: n, policy })
}

pub fn episode_seed(master: u64, index: usize) -> u64 {
    seed::derive(master, index as u64)
}

/// Runs episode `index` of the experiment.
pub fn run_single(config: &ExperimentConfig, prepared: &Prepared, index: usize) -> Result<EpisodeLog> {
    let mut env = prepared.base.reseeded(episode_seed(config.seed, index));
    let (b, t) = (config.budget(), config.horizon);
    match config.algo {
        AlgoSpec::Full => run_full(&mut env, b, t, config.t0(), config.delta),
        AlgoSpec::Core { z } => run_episode(&mut env, b, t, z, config.delta),
        AlgoSpec::Baseline(name) => run_baseline(name, &mut env, b, t, config.delta, prepared.policy.as_ref()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub index: usize,
    pub seed: u64,
    pub total_reward: f64,
    pub regret: f64,
    pub stop_round: u64,
    pub stop_reason: StopReason,
    pub z_used: f64,
    pub consumed: Vec<f64>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub algorithm: String,
    pub horizon: u64,
    pub budget: f64,
    pub delta: f64,
    pub opt: f64,
    pub oracle_samples: usize,
    pub episodes: Vec<EpisodeSummary>,
    pub total_reward: Quartiles,
    pub regret: Quartiles,
}

fn algorithm_name(algo: &AlgoSpec) -> String {
    match algo {
        AlgoSpec::Full => "full".into(),
        AlgoSpec::Core { z } => format!("core(z={z})"),
        AlgoSpec::Baseline(b) => b.name().into(),
    }
}

/// Runs all repeats. With an output directory, writes `episode_NNN.csv` per
/// seed, `parameters.txt` and `summary.json`.
pub fn run(config: &ExperimentConfig, mode: Parallelism) -> Result<ExperimentSummary> {
    let prepared = prepare(config, mode)?;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("parameters.txt"), prepared.base.export_parameters())?;
    }
    let episodes = par::map_indices(config.repeats, mode, |i| -> Result<EpisodeSummary> {
        let log = run_single(config, &prepared, i)?;
        let csv = match &config.out {
            Some(dir) => {
                let path = dir.join(format!("episode_{i:03}.csv"));
                write_episode_csv(&log, BufWriter::new(File::create(&path)?))?;
                Some(path)
            }
            None => None,
        };
        Ok(EpisodeSummary {
            index: i,
            seed: episode_seed(config.seed, i),
            total_reward: log.total_reward,
            regret: prepared.opt - log.total_reward,
            stop_round: log.stop_round,
            stop_reason: log.stop_reason,
            z_used: log.z_used,
            consumed: log.consumed,
            csv,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let rewards: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
    let regrets: Vec<f64> = episodes.iter().map(|e| e.regret).collect();
    let summary = ExperimentSummary {
        algorithm: algorithm_name(&config.algo),
        horizon: config.horizon,
        budget: config.budget(),
        delta: config.delta,
        opt: prepared.opt,
        oracle_samples: prepared.oracle_samples,
        episodes,
        total_reward: Quartiles::of(&rewards),
        regret: Quartiles::of(&regrets),
    };
    if let Some(dir) = &config.out {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

/// `OPT` of the configured environment.
pub fn oracle(config: &ExperimentConfig, mode: Parallelism) -> Result<f64> {
    config.validate()?;
    let env = config.env.build(config.seed)?;
    Ok(oracle_solution(&env, config.budget(), config.horizon, config.oracle_samples(), mode)?.1.value)
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    T,
    B,
    M,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "T",
            Axis::B => "B",
            Axis::M => "m",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(Axis::T),
            "B" => Ok(Axis::B),
            "m" => Ok(Axis::M),
            other => Err(Error::ConfigInvalid(format!("unknown sweep axis `{other}` (expected T, B or m)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: ExperimentSummary,
    /// Median regret over the previous point's median regret.
    pub ratio: Option<f64>,
}

/// Copy of `base` with the axis set to `value`, written under
/// `base.out/<axis>=<value>` when an output directory is configured.
pub fn sweep_point(base: &ExperimentConfig, axis: Axis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let whole = |v: f64| {
        if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
            Ok(v as u64)
        } else {
            Err(Error::ConfigInvalid(format!("{} must be a positive integer, got {v}", axis.name())))
        }
    };
    match axis {
        Axis::T => cfg.horizon = whole(value)?,
        Axis::B => cfg.budget = BudgetSpec::Absolute(value),
        Axis::M => match &mut cfg.env {
            EnvSpec::Linear { m, .. } => *m = whole(value)? as usize,
            _ => return Err(Error::ConfigInvalid("sweeping m needs env.kind = linear".into())),
        },
    }
    cfg.out = base.out.as_ref().map(|d| d.join(format!("{}={}", axis.name(), value)));
    cfg.validate()?;
    Ok(cfg)
}

/// Runs each axis value in turn. With an output directory, also writes
/// `sweep.csv` with one row per value.
pub fn sweep(base: &ExperimentConfig, axis: Axis, values: &[f64], mode: Parallelism) -> Result<Vec<SweepPoint>> {
    let configs = values.iter().map(|&v| sweep_point(base, axis, v)).collect::<Result<Vec<_>>>()?;
    let mut points: Vec<SweepPoint> = Vec::with_capacity(values.len());
    for (cfg, &value) in configs.iter().zip(values) {
        let summary = run(cfg, mode)?;
        let ratio = points.last().map(|p| summary.regret.median / p.summary.regret.median);
        points.push(SweepPoint { value, summary, ratio });
    }
    if let Some(dir) = &base.out {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record([
            "axis", "value", "T", "B", "opt", "reward_median", "regret_q1", "regret_median", "regret_q3", "ratio",
        ])?;
        for p in &points {
            let s = &p.summary;
            w.write_record([
                axis.name().to_string(),
                sig9(p.value),
                s.horizon.to_string(),
                sig9(s.budget),
                sig9(s.opt),
                sig9(s.total_reward.median),
                sig9(s.regret.q1),
                sig9(s.regret.median),
                sig9(s.regret.q3),
                p.ratio.map(sig9).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(points)
}

/// Thread cap from `LINCBWK_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("LINCBWK_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}
