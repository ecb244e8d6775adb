//! Estimating `Z` from an initial pure-exploration phase.
//!
//! For the first `T0` rounds the learner plays the arm whose context has the
//! largest `M^{-1}`-norm, i.e. the direction in which the ellipsoids are
//! widest. The estimates seen before each of those rounds define a sample
//! packing LP whose value, relaxed by `2 gamma`, estimates `OPT`. From it
//!
//! ```text
//! Z = 2 * ((OPT_hat + 2 gamma) / B' + 1),   B' = B - T0,
//! ```
//!
//! and the primal-dual rule runs for the remaining `T - T0` rounds with
//! budget `B'`, continuing the same estimator.

use nalgebra::{DMatrix, DVector};

use crate::dual::DualVector;
use crate::environment::{ContextSlate, Environment};
use crate::error::{Error, Result};
use crate::estimation::EstimatorState;
use crate::packing::{self, PackingInstance};
use crate::policy::{argmax_first, EpisodeLog, Phase, RoundObserver, Runner, StopReason};

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSample {
    pub slate: ContextSlate,
    pub played_arm: usize,
    pub played_context: DVector<f64>,
    pub reward: f64,
    pub consumption: DVector<f64>,
    /// Estimates before this round's update.
    pub mu_hat_snapshot: DVector<f64>,
    pub w_hat_snapshot: DMatrix<f64>,
}

/// Outcome of the exploration phase.
#[derive(Debug, Clone)]
pub struct Bootstrap {
    pub samples: Vec<ExplorationSample>,
    pub gamma: f64,
    pub opt_hat: f64,
    pub budget_prime: f64,
    pub z: f64,
}

/// Default exploration length `ceil(sqrt(T))`.
pub fn default_t0(horizon: u64) -> u64 {
    if horizon == 0 {
        return 0;
    }
    let r = (horizon as f64).sqrt().ceil() as u64;
    // guard against rounding in the float square root
    if (r - 1) * (r - 1) >= horizon {
        r - 1
    } else {
        r
    }
}

/// Arm (1-based) with the largest `M^{-1}`-norm, lowest index on ties.
pub fn exploration_arm(slate: &ContextSlate, est: &EstimatorState) -> Result<usize> {
    Ok(argmax_first(&exploration_scores(slate, est)?))
}

/// `M^{-1}`-norms with a leading `-inf` for the no-op, which never wins.
fn exploration_scores(slate: &ContextSlate, est: &EstimatorState) -> Result<Vec<f64>> {
    if slate.num_arms() == 0 {
        return Err(Error::EmptySlate);
    }
    let mut s = Vec::with_capacity(slate.num_arms() + 1);
    s.push(f64::NEG_INFINITY);
    s.extend(slate.matrix().column_iter().map(|c| est.mahalanobis_inv_norm(&c.into_owned())));
    Ok(s)
}

/// `(T / T0) * 2m * sqrt(T0 ln(T0) ln(T0 d / delta))`.
pub fn gamma(horizon: u64, t0: u64, m: usize, d: usize, delta: f64) -> Result<f64> {
    if t0 < 2 {
        return Err(Error::InvalidInput(format!("exploration length must be at least 2, got {t0}")));
    }
    Ok(gamma_expr(horizon as f64, t0 as f64, m as f64, d as f64, delta))
}

fn gamma_expr(t: f64, t0: f64, m: f64, d: f64, delta: f64) -> f64 {
    (t / t0) * 2.0 * m * (t0 * t0.ln() * (t0 * d / delta).ln()).sqrt()
}

/// Sample packing LP over the exploration rounds, using each round's snapshot
/// estimates, with caps `B + gamma_slack`.
pub fn sample_instance(samples: &[ExplorationSample], gamma_slack: f64, budget: f64, horizon: u64) -> Result<PackingInstance> {
    let first = samples.first().ok_or_else(|| Error::InvalidInput("no exploration samples".into()))?;
    if !(gamma_slack >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma slack must be nonnegative, got {gamma_slack}")));
    }
    let k = first.slate.num_arms();
    let d = first.w_hat_snapshot.ncols();
    let scale = horizon as f64 / samples.len() as f64;
    let mut inst = PackingInstance::new(k, d, scale, vec![(budget + gamma_slack).max(0.0); d])?;
    for s in samples {
        let rewards = s.mu_hat_snapshot.tr_mul(s.slate.matrix());
        let cons = s.slate.matrix().tr_mul(&s.w_hat_snapshot);
        let cons: Vec<f64> = (0..k).flat_map(|a| (0..d).map(move |j| (a, j))).map(|(a, j)| cons[(a, j)]).collect();
        inst.push_block(rewards.as_slice(), &cons)?;
    }
    Ok(inst)
}

pub fn estimate_opt(samples: &[ExplorationSample], gamma_slack: f64, budget: f64, horizon: u64) -> Result<f64> {
    let inst = sample_instance(samples, gamma_slack, budget, horizon)?;
    Ok(packing::solve(&inst)?.value.max(0.0))
}

/// `2 * ((opt_hat + 2 gamma) / B' + 1)`.
pub fn compute_z(opt_hat: f64, gamma: f64, budget_prime: f64) -> Result<f64> {
    if !(budget_prime > 0.0) {
        return Err(Error::InvalidBudget(format!("reduced budget must be positive, got {budget_prime}")));
    }
    Ok(2.0 * ((opt_hat + 2.0 * gamma) / budget_prime + 1.0))
}

fn check_lengths(budget: f64, horizon: u64, t0: u64) -> Result<()> {
    if t0 < 2 || t0 > horizon {
        return Err(Error::InvalidInput(format!("exploration length {t0} must lie in [2, T = {horizon}]")));
    }
    if !(budget > 2.0 * t0 as f64) {
        return Err(Error::InvalidBudget(format!("budget {budget} must exceed 2 T0 = {}", 2 * t0)));
    }
    Ok(())
}

impl<E: Environment, O: RoundObserver> Runner<'_, E, O> {
    fn explore(&mut self, t0: u64, horizon: u64) -> Result<Bootstrap> {
        let d = self.env.d();
        let mut samples = Vec::with_capacity(t0 as usize);
        for _ in 0..t0 {
            if self.ledger.exhausted() {
                break;
            }
            let slate = self.env.sample_slate(self.next_t() - 1);
            let scores = exploration_scores(&slate, &self.est)?;
            let arm = argmax_first(&scores);
            let mu_hat_snapshot = self.est.mu_hat().clone();
            let w_hat_snapshot = self.est.w_hat().clone();
            let outcome = self.play(&slate, arm, Phase::Explore, DualVector::zero(d), scores)?;
            samples.push(ExplorationSample {
                played_context: slate.context(arm),
                slate,
                played_arm: arm,
                reward: outcome.reward,
                consumption: outcome.consumption,
                mu_hat_snapshot,
                w_hat_snapshot,
            });
        }
        let budget = self.ledger.budget();
        let gamma = gamma(horizon, t0, self.env.m(), d, self.est.delta())?;
        let opt_hat = estimate_opt(&samples, 2.0 * gamma, budget, horizon)?;
        let budget_prime = budget - t0 as f64;
        let z = compute_z(opt_hat, gamma, budget_prime)?;
        Ok(Bootstrap { samples, gamma, opt_hat, budget_prime, z })
    }
}

/// Exploration phase only: `T0` rounds, then the `Z` computation.
pub fn explore_and_estimate<E: Environment>(env: &mut E, budget: f64, horizon: u64, t0: u64, delta: f64) -> Result<Bootstrap> {
    check_lengths(budget, horizon, t0)?;
    let mut runner = Runner::new(env, budget, horizon, delta, ())?;
    runner.explore(t0, horizon)
}

/// Exploration followed by the primal-dual rule with the estimated `Z`.
pub fn run_full<E: Environment>(env: &mut E, budget: f64, horizon: u64, t0: u64, delta: f64) -> Result<EpisodeLog> {
    Ok(run_full_observed(env, budget, horizon, t0, delta, ())?.0)
}

pub fn run_full_observed<E: Environment, O: RoundObserver>(
    env: &mut E,
    budget: f64,
    horizon: u64,
    t0: u64,
    delta: f64,
    observer: O,
) -> Result<(EpisodeLog, Bootstrap)> {
    check_lengths(budget, horizon, t0)?;
    let mut runner = Runner::new(env, budget, horizon, delta, observer)?;
    let boot = runner.explore(t0, horizon)?;
    let rest = horizon - t0;
    let stop = if runner.ledger.exhausted() {
        StopReason::Budget
    } else {
        runner.exploit(rest, boot.z, boot.budget_prime / rest.max(1) as f64)?
    };
    Ok((runner.finish(stop, boot.z), boot))
}
