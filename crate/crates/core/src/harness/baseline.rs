//! Comparison policies. All of them go through the same budget ledger and
//! stopping rule as the learner.

use rand::Rng;

use crate::dual::DualVector;
use crate::environment::{Environment, LinearEnvironment};
use crate::error::{Error, Result};
use crate::packing::oracle_solution;
use crate::par::Parallelism;
use crate::policy::{argmax_first, run_episode, EpisodeLog, Phase, Runner, StopReason};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Best static policy from the oracle LP, with true parameters.
    OracleStatic,
    /// The primal-dual rule with `Z = 0`: plain optimistic linear bandit.
    UnconstrainedLinUcb,
    /// Uniform over the real arms.
    UniformRandom,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::OracleStatic => "oracle-static",
            Baseline::UnconstrainedLinUcb => "unconstrained-linucb",
            Baseline::UniformRandom => "uniform-random",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle-static" => Ok(Baseline::OracleStatic),
            "unconstrained-linucb" => Ok(Baseline::UnconstrainedLinUcb),
            "uniform-random" => Ok(Baseline::UniformRandom),
            other => Err(Error::UnknownBaseline(other.to_string())),
        }
    }
}

/// The oracle LP turned into a playable policy.
///
/// For laws with finitely many slates the per-block distributions are
/// averaged by slate, which is exactly the static LP policy. For continuous
/// laws a live slate never matches a sampled block, so the policy plays the
/// best response to the LP's resource prices instead.
#[derive(Debug, Clone)]
pub struct StaticPolicy {
    tables: Vec<Option<Vec<f64>>>,
    prices: Vec<f64>,
}

impl StaticPolicy {
    pub fn from_oracle(env: &LinearEnvironment, budget: f64, horizon: u64, n_samples: usize, mode: Parallelism) -> Result<(Self, f64)> {
        let (_, solution, indices) = oracle_solution(env, budget, horizon, n_samples, mode)?;
        let options = env.num_arms() + 1;
        let mut sums: Vec<(Vec<f64>, usize)> = Vec::new();
        for (i, idx) in indices.iter().enumerate() {
            if let Some(s) = *idx {
                if sums.len() <= s {
                    sums.resize(s + 1, (vec![0.0; options], 0));
                }
                sums[s].0.iter_mut().zip(solution.distribution(i)).for_each(|(a, p)| *a += p);
                sums[s].1 += 1;
            }
        }
        let tables = sums
            .into_iter()
            .map(|(sum, n)| (n > 0).then(|| sum.into_iter().map(|p| p / n as f64).collect()))
            .collect();
        Ok((Self { tables, prices: solution.duals.clone() }, solution.value))
    }

    /// Prices on the `d` resources.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    fn choose(&self, env: &LinearEnvironment, t: u64, rng: &mut impl Rng) -> usize {
        let (slate, index) = env.sample_slate_indexed(t);
        if let Some(Some(table)) = index.and_then(|i| self.tables.get(i)) {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (a, p) in table.iter().enumerate() {
                acc += p;
                if u < acc {
                    return a;
                }
            }
            return 0;
        }
        let mut scores = vec![0.0];
        for a in 1..=slate.num_arms() {
            let (r, v) = env.expected(&slate.context(a));
            scores.push(r - v.iter().zip(&self.prices).map(|(v, y)| v * y).sum::<f64>());
        }
        argmax_first(&scores)
    }
}

/// Runs one baseline episode. `policy` is required for
/// [`Baseline::OracleStatic`] and ignored otherwise.
pub fn run_baseline(
    baseline: Baseline,
    env: &mut LinearEnvironment,
    budget: f64,
    horizon: u64,
    delta: f64,
    policy: Option<&StaticPolicy>,
) -> Result<EpisodeLog> {
    if baseline == Baseline::UnconstrainedLinUcb {
        return run_episode(env, budget, horizon, 0.0, delta);
    }
    let policy = match baseline {
        Baseline::OracleStatic => {
            Some(policy.ok_or_else(|| Error::InvalidInput("oracle-static needs the oracle policy".into()))?)
        }
        _ => None,
    };
    let mut rng = seed::rng(seed::derive(env.seed(), stream::POLICY));
    let k = env.num_arms();
    let d = env.d();
    let snapshot = env.clone();
    let mut runner = Runner::new(env, budget, horizon, delta, ())?;
    let mut stop = StopReason::Horizon;
    for _ in 0..horizon {
        if runner.ledger.exhausted() {
            stop = StopReason::Budget;
            break;
        }
        let t = runner.next_t() - 1;
        let slate = runner.env.sample_slate(t);
        let arm = match policy {
            Some(p) => p.choose(&snapshot, t, &mut rng),
            None => rng.gen_range(1..=k),
        };
        runner.play(&slate, arm, Phase::Exploit, DualVector::zero(d), Vec::new())?;
    }
    Ok(runner.finish(stop, 0.0))
}

/// Expected reward per round of uniform play on a slate, for sanity checks.
pub fn uniform_mean_reward(env: &LinearEnvironment, t: u64) -> f64 {
    let slate = env.sample_slate(t);
    let k = slate.num_arms();
    let sum: f64 = (1..=k).map(|a| env.mu_star().dot(&slate.context(a))).sum();
    sum / k as f64
}
