//! Block-structured packing LPs.
//!
//! ```text
//! maximize    scale * sum_i sum_a pi_i(a) r_i(a)
//! subject to  scale * sum_i sum_a pi_i(a) c_i(a) <= caps      (d rows)
//!             pi_i in the simplex over options 0..=K             (per block)
//! ```
//!
//! Option 0 of every block is the no-op with zero reward and consumption.
//! Small instances go through a dense simplex on the full LP; large ones
//! through column generation on the aggregated master, whose duals are a
//! cutting-plane method on the d-dimensional Lagrangian. Every solve is
//! certified against the Lagrangian bound
//! `L(y) = y.caps + scale * sum_i max_a (r_i(a) - y.c_i(a))`.

mod decomposition;
mod simplex;
mod text;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, LinearEnvironment};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::seed::{self, stream};

pub use text::parse_instance;

/// Instances with at most this many real-arm variables use the dense simplex.
pub const SIMPLEX_MAX_VARIABLES: usize = 5000;
/// Absolute feasibility and complementary-slackness tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Relative duality-gap tolerance, scaled by `1 + |value|`.
pub const GAP_TOL: f64 = 1e-6;
const SIMPLEX_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PackingInstance {
    arms: usize,
    d: usize,
    scale: f64,
    caps: Vec<f64>,
    // Real arms only; option 0 is implicit.
    rewards: Vec<f64>,
    consumption: Vec<f64>,
}

impl PackingInstance {
    /// Empty instance with `arms` real options per block and `d` resources.
    pub fn new(arms: usize, d: usize, scale: f64, caps: Vec<f64>) -> Result<Self> {
        if arms == 0 || d == 0 {
            return Err(Error::InvalidDimension(format!("K = {arms}, d = {d}")));
        }
        if caps.len() != d || caps.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidInput("caps must be d finite nonnegative values".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { arms, d, scale, caps, rewards: Vec::new(), consumption: Vec::new() })
    }

    /// Appends a block. `rewards` has `K` entries and `consumption` is
    /// `K * d` values, arm-major.
    pub fn push_block(&mut self, rewards: &[f64], consumption: &[f64]) -> Result<()> {
        if rewards.len() != self.arms || consumption.len() != self.arms * self.d {
            return Err(Error::InvalidDimension("block shape does not match K and d".into()));
        }
        if rewards.iter().chain(consumption).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("block values must be finite".into()));
        }
        self.rewards.extend_from_slice(rewards);
        self.consumption.extend_from_slice(consumption);
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.rewards.len() / self.arms
    }

    /// Real arms per block (`K`); each block has `K + 1` options.
    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn with_caps(&self, caps: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.arms, self.d, self.scale, caps)?;
        out.rewards.clone_from(&self.rewards);
        out.consumption.clone_from(&self.consumption);
        Ok(out)
    }

    /// Reward of option `a` (0 = no-op) in block `i`.
    pub fn reward(&self, i: usize, a: usize) -> f64 {
        if a == 0 {
            0.0
        } else {
            self.rewards[i * self.arms + a - 1]
        }
    }

    /// Consumption of option `a` in block `i`; `None` for the no-op.
    pub fn consumption(&self, i: usize, a: usize) -> Option<&[f64]> {
        if a == 0 {
            None
        } else {
            let start = (i * self.arms + a - 1) * self.d;
            Some(&self.consumption[start..start + self.d])
        }
    }

    /// Option maximizing `r - y.c` in block `i`, lowest index on ties, and its value.
    pub(crate) fn best_response(&self, i: usize, y: &[f64]) -> (usize, f64) {
        let mut best = (0, 0.0);
        for a in 1..=self.arms {
            let c = self.consumption(i, a).unwrap_or_default();
            let v = self.reward(i, a) - c.iter().zip(y).map(|(c, y)| c * y).sum::<f64>();
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }

    /// Lagrangian upper bound on the optimum for multipliers `y >= 0`.
    pub fn lagrangian_bound(&self, y: &[f64], mode: Parallelism) -> f64 {
        let inner: f64 = par::map_chunks(self.num_blocks(), mode, |r| {
            r.map(|i| self.best_response(i, y).1).sum::<f64>()
        })
        .into_iter()
        .sum();
        y.iter().zip(&self.caps).map(|(y, c)| y * c).sum::<f64>() + self.scale * inner
    }

    /// Plain-text dump (see [`parse_instance`] for the format).
    pub fn to_text(&self) -> String {
        text::write_instance(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingSolution {
    pub value: f64,
    /// Per-block distributions over options `0..=K`, block-major.
    distributions: Vec<f64>,
    options: usize,
    /// Nonnegative multipliers on the `d` coupling rows.
    pub duals: Vec<f64>,
    /// Lagrangian bound at `duals`.
    pub dual_bound: f64,
}

impl PackingSolution {
    pub fn distribution(&self, block: usize) -> &[f64] {
        &self.distributions[block * self.options..(block + 1) * self.options]
    }

    pub fn num_blocks(&self) -> usize {
        self.distributions.len() / self.options
    }

    pub fn duality_gap(&self) -> f64 {
        self.dual_bound - self.value
    }
}

/// Which algorithm handles the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Simplex,
    Decomposition,
}

/// Residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub simplex_residual: f64,
    pub feasibility_residual: f64,
    pub slackness_residual: f64,
    pub gap: f64,
}

impl Certificate {
    pub fn holds(&self, value: f64) -> bool {
        self.simplex_residual <= SIMPLEX_SUM_TOL
            && self.feasibility_residual <= FEASIBILITY_TOL
            && self.slackness_residual <= FEASIBILITY_TOL
            && self.gap.abs() <= GAP_TOL * (1.0 + value.abs())
    }
}

pub fn solve(instance: &PackingInstance) -> Result<PackingSolution> {
    solve_with(instance, Method::Auto, Parallelism::default())
}

pub fn solve_with(instance: &PackingInstance, method: Method, mode: Parallelism) -> Result<PackingSolution> {
    let method = match method {
        Method::Auto if instance.num_blocks() * instance.arms <= SIMPLEX_MAX_VARIABLES => Method::Simplex,
        Method::Auto => Method::Decomposition,
        m => m,
    };
    let raw = match method {
        Method::Simplex => solve_simplex(instance),
        _ => decomposition::solve(instance, mode),
    }
    .map_err(|reason| numerics(instance, reason))?;
    let solution = finish(instance, raw.0, raw.1, mode);
    let cert = certify(instance, &solution, mode);
    if !cert.holds(solution.value) {
        return Err(numerics(instance, format!("certificate failed: {cert:?}")));
    }
    Ok(solution)
}

fn numerics(instance: &PackingInstance, reason: String) -> Error {
    Error::LpNumerics { reason, dump: Box::new(instance.to_text()) }
}

/// Builds the solution record from distributions and duals.
fn finish(instance: &PackingInstance, distributions: Vec<f64>, duals: Vec<f64>, mode: Parallelism) -> PackingSolution {
    let options = instance.arms + 1;
    let value = instance.scale
        * par::map_chunks(instance.num_blocks(), mode, |r| {
            r.map(|i| (1..options).map(|a| distributions[i * options + a] * instance.reward(i, a)).sum::<f64>())
                .sum::<f64>()
        })
        .into_iter()
        .sum::<f64>();
    let dual_bound = instance.lagrangian_bound(&duals, mode);
    PackingSolution { value, distributions, options, duals, dual_bound }
}

/// Scaled consumption `scale * sum_i sum_a pi_i(a) c_i(a)`.
pub fn scaled_consumption(instance: &PackingInstance, solution: &PackingSolution, mode: Parallelism) -> Vec<f64> {
    let d = instance.d;
    let partial = par::map_chunks(instance.num_blocks(), mode, |r| {
        let mut acc = vec![0.0; d];
        for i in r {
            let pi = solution.distribution(i);
            for a in 1..=instance.arms {
                if pi[a] != 0.0 {
                    for (s, c) in acc.iter_mut().zip(instance.consumption(i, a).unwrap_or_default()) {
                        *s += pi[a] * c;
                    }
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; d];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.iter().map(|v| v * instance.scale).collect()
}

pub fn certify(instance: &PackingInstance, solution: &PackingSolution, mode: Parallelism) -> Certificate {
    let mut simplex_residual = 0.0f64;
    for i in 0..solution.num_blocks() {
        let pi = solution.distribution(i);
        let neg = pi.iter().fold(0.0f64, |m, &p| m.max(-p));
        simplex_residual = simplex_residual.max(neg).max((pi.iter().sum::<f64>() - 1.0).abs());
    }
    let used = scaled_consumption(instance, solution, mode);
    let mut feasibility_residual = 0.0f64;
    let mut slackness_residual = 0.0f64;
    for ((u, cap), y) in used.iter().zip(&instance.caps).zip(&solution.duals) {
        feasibility_residual = feasibility_residual.max(u - cap);
        slackness_residual = slackness_residual.max(y * (cap - u)).max(-y);
    }
    let gap = instance.lagrangian_bound(&solution.duals, mode) - solution.value;
    Certificate { simplex_residual, feasibility_residual, slackness_residual, gap }
}

fn solve_simplex(instance: &PackingInstance) -> Result<(Vec<f64>, Vec<f64>), String> {
    let blocks = instance.num_blocks();
    let k = instance.arms;
    let d = instance.d;
    let n = blocks * k;
    let rows = blocks + d;
    let c: Vec<f64> = instance.rewards.iter().map(|r| r * instance.scale).collect();
    let mut a = vec![0.0; rows * n];
    for i in 0..blocks {
        for arm in 0..k {
            let var = i * k + arm;
            a[i * n + var] = 1.0;
            for j in 0..d {
                a[(blocks + j) * n + var] = instance.scale * instance.consumption[var * d + j];
            }
        }
    }
    let mut b = vec![1.0; blocks];
    b.extend_from_slice(&instance.caps);
    let opt = simplex::maximize(&c, &a, &b)?;
    let mut dist = vec![0.0; blocks * (k + 1)];
    for i in 0..blocks {
        let row = &mut dist[i * (k + 1)..(i + 1) * (k + 1)];
        let mut mass = 0.0;
        for arm in 0..k {
            let p = opt.x[i * k + arm].clamp(0.0, 1.0);
            row[arm + 1] = p;
            mass += p;
        }
        if mass > 1.0 {
            row[1..].iter_mut().for_each(|p| *p /= mass);
            mass = 1.0;
        }
        row[0] = 1.0 - mass;
    }
    Ok((dist, opt.y[blocks..].to_vec()))
}

/// Sample-average value of the best static policy for a known environment:
/// `n_samples` slates from the oracle stream, true expected outcomes, caps
/// `budget` and scale `horizon / n_samples`.
pub fn opt_oracle(env: &LinearEnvironment, budget: f64, horizon: u64, n_samples: usize) -> Result<f64> {
    Ok(oracle_solution(env, budget, horizon, n_samples, Parallelism::default())?.1.value)
}

/// Instance and solution behind [`opt_oracle`], plus the finite-law slate
/// index of each block.
pub fn oracle_solution(
    env: &LinearEnvironment,
    budget: f64,
    horizon: u64,
    n_samples: usize,
    mode: Parallelism,
) -> Result<(PackingInstance, PackingSolution, Vec<Option<usize>>)> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("oracle needs at least one sample".into()));
    }
    let k = env.num_arms();
    let d = env.d();
    let sampler = env.reseeded(seed::derive(env.seed(), stream::ORACLE));
    let blocks = par::map_indices(n_samples, mode, |t| {
        let (slate, index) = sampler.sample_slate_indexed(t as u64);
        let rewards = sampler.mu_star().tr_mul(slate.matrix());
        let cons = slate.matrix().tr_mul(sampler.w_star());
        let cons: Vec<f64> = (0..k).flat_map(|a| (0..d).map(move |j| (a, j))).map(|(a, j)| cons[(a, j)]).collect();
        (rewards.iter().copied().collect::<Vec<f64>>(), cons, index)
    });
    let mut instance = PackingInstance::new(k, d, horizon as f64 / n_samples as f64, vec![budget.max(0.0); d])?;
    instance.rewards.reserve(n_samples * k);
    instance.consumption.reserve(n_samples * k * d);
    let mut indices = Vec::with_capacity(n_samples);
    for (r, c, idx) in blocks {
        instance.push_block(&r, &c)?;
        indices.push(idx);
    }
    let solution = solve_with(&instance, Method::Auto, mode)?;
    Ok((instance, solution, indices))
}
