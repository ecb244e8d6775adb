//! Optimistic primal-dual arm selection with a given trade-off parameter `Z`.
//!
//! Each round the learner scores every arm by
//! `UCB_reward(x) - Z * theta . LCB_consumption(x)`, plays the best arm or
//! the no-op (score 0), updates the ridge estimates with the observed outcome
//! and moves the dual multipliers with payoff `v_t - (B/T) 1`. An episode
//! stops at the horizon, or before a round in which some resource could be
//! pushed past the budget, so cumulative consumption never exceeds `B`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dual::{DualConfig, DualLearner, DualVector};
use crate::environment::{ContextSlate, Environment, Outcome};
use crate::estimation::{EstimatorState, Optimistic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Horizon,
    Budget,
}

/// Cumulative consumption against a per-resource budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    budget: f64,
    horizon: u64,
    consumed: Vec<f64>,
    rounds_played: u64,
}

impl BudgetLedger {
    pub fn new(budget: f64, horizon: u64, d: usize) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidBudget(format!("budget must be positive, got {budget}")));
        }
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidDimension("ledger needs d >= 1".into()));
        }
        Ok(Self { budget, horizon, consumed: vec![0.0; d], rounds_played: 0 })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn consumed(&self) -> &[f64] {
        &self.consumed
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds_played
    }

    pub fn remaining(&self) -> Vec<f64> {
        self.consumed.iter().map(|c| self.budget - c).collect()
    }

    /// True once another round could overshoot: per-round consumption is at
    /// most 1, so play continues only while every `consumed_j <= B - 1`.
    pub fn exhausted(&self) -> bool {
        self.consumed.iter().any(|&c| c > self.budget - 1.0)
    }

    pub fn charge(&mut self, consumption: &DVector<f64>) {
        for (c, v) in self.consumed.iter_mut().zip(consumption.iter()) {
            *c += v;
        }
        self.rounds_played += 1;
        debug_assert!(self.consumed.iter().all(|&c| c <= self.budget));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: u64,
    pub phase: Phase,
    /// 0 is the no-op, `1..=K` are arms.
    pub arm: usize,
    pub reward: f64,
    pub consumption: Vec<f64>,
    /// Multipliers used to score this round (all dummy during exploration).
    pub theta: DualVector,
    /// Score of the no-op followed by the `K` arms. During exploration these
    /// are the `M^{-1}`-norms of the contexts.
    pub adjusted_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub records: Vec<RoundRecord>,
    pub total_reward: f64,
    /// Number of rounds played.
    pub stop_round: u64,
    pub stop_reason: StopReason,
    pub z_used: f64,
    pub budget: f64,
    pub horizon: u64,
    pub consumed: Vec<f64>,
}

impl EpisodeLog {
    pub fn d(&self) -> usize {
        self.consumed.len()
    }

    /// Largest `consumed_j - B` over resources; nonpositive when feasible.
    pub fn budget_excess(&self) -> f64 {
        self.consumed.iter().map(|c| c - self.budget).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Read-only view of one round, handed to a [`RoundObserver`] after the arm
/// is chosen and before the estimates are updated.
pub struct RoundView<'a> {
    pub t: u64,
    pub phase: Phase,
    pub slate: &'a ContextSlate,
    pub estimator: &'a EstimatorState,
    pub theta: &'a DualVector,
    pub arm: usize,
    pub outcome: &'a Outcome,
}

pub trait RoundObserver {
    fn observe(&mut self, view: &RoundView<'_>);
}

impl RoundObserver for () {
    fn observe(&mut self, _: &RoundView<'_>) {}
}

impl<F: FnMut(&RoundView<'_>)> RoundObserver for F {
    fn observe(&mut self, view: &RoundView<'_>) {
        self(view)
    }
}

/// Score from precomputed optimistic estimates.
pub fn adjusted_from(opt: &Optimistic, theta: &DualVector, z: f64) -> f64 {
    opt.reward - z * theta.dot(opt.consumption.as_slice())
}

pub fn adjusted_score(x: &DVector<f64>, est: &EstimatorState, theta: &DualVector, z: f64) -> Result<f64> {
    Ok(adjusted_from(&est.optimistic(x)?, theta, z))
}

/// Scores of the no-op (always 0) and of every arm.
pub fn adjusted_scores(slate: &ContextSlate, est: &EstimatorState, theta: &DualVector, z: f64) -> Result<Vec<f64>> {
    if slate.num_arms() == 0 {
        return Err(Error::EmptySlate);
    }
    let mut scores = Vec::with_capacity(slate.num_arms() + 1);
    scores.push(0.0);
    for col in slate.matrix().column_iter() {
        scores.push(adjusted_from(&est.optimistic(&col.into_owned())?, theta, z));
    }
    Ok(scores)
}

/// Index of the largest score, lowest index on ties.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Best option among the no-op and the `K` arms.
pub fn select_arm(slate: &ContextSlate, est: &EstimatorState, theta: &DualVector, z: f64) -> Result<usize> {
    Ok(argmax_first(&adjusted_scores(slate, est, theta, z)?))
}

/// Shared episode machinery: one environment, one estimator, one global
/// ledger and the growing round log.
pub(crate) struct Runner<'a, E: Environment, O: RoundObserver> {
    pub env: &'a mut E,
    pub est: EstimatorState,
    pub ledger: BudgetLedger,
    pub records: Vec<RoundRecord>,
    pub total_reward: f64,
    pub observer: O,
}

impl<'a, E: Environment, O: RoundObserver> Runner<'a, E, O> {
    pub fn new(env: &'a mut E, budget: f64, horizon: u64, delta: f64, observer: O) -> Result<Self> {
        let est = EstimatorState::new(env.m(), env.d(), delta)?;
        let ledger = BudgetLedger::new(budget, horizon, env.d())?;
        Ok(Self { env, est, ledger, records: Vec::new(), total_reward: 0.0, observer })
    }

    pub fn next_t(&self) -> u64 {
        self.records.len() as u64 + 1
    }

    /// Plays `arm` on `slate`, charges the ledger, notifies the observer,
    /// updates the estimates and appends the record.
    pub fn play(
        &mut self,
        slate: &ContextSlate,
        arm: usize,
        phase: Phase,
        theta: DualVector,
        scores: Vec<f64>,
    ) -> Result<Outcome> {
        let t = self.next_t();
        let x = slate.context(arm);
        let outcome = if arm == 0 { Outcome::zero(self.env.d()) } else { self.env.realize(&x)? };
        self.ledger.charge(&outcome.consumption);
        self.observer.observe(&RoundView {
            t,
            phase,
            slate,
            estimator: &self.est,
            theta: &theta,
            arm,
            outcome: &outcome,
        });
        if arm != 0 {
            self.est.update(&x, outcome.reward, &outcome.consumption)?;
        }
        self.total_reward += outcome.reward;
        self.records.push(RoundRecord {
            t,
            phase,
            arm,
            reward: outcome.reward,
            consumption: outcome.consumption.iter().copied().collect(),
            theta,
            adjusted_scores: scores,
        });
        Ok(outcome)
    }

    /// Runs up to `rounds` rounds of the optimistic primal-dual rule. The dual
    /// learner targets `rate` consumption per round.
    pub fn exploit(&mut self, rounds: u64, z: f64, rate: f64) -> Result<StopReason> {
        if rounds == 0 {
            return Ok(StopReason::Horizon);
        }
        let d = self.env.d();
        let mut dual = DualLearner::new(DualConfig::tuned(d, rounds)?)?;
        let mut payoff = vec![0.0; d];
        for _ in 0..rounds {
            if self.ledger.exhausted() {
                return Ok(StopReason::Budget);
            }
            let slate = self.env.sample_slate(self.next_t() - 1);
            let theta = dual.theta().clone();
            let scores = adjusted_scores(&slate, &self.est, &theta, z)?;
            let arm = argmax_first(&scores);
            let outcome = self.play(&slate, arm, Phase::Exploit, theta, scores)?;
            for (p, v) in payoff.iter_mut().zip(outcome.consumption.iter()) {
                *p = (v - rate).clamp(-1.0, 1.0);
            }
            dual.step(&payoff);
        }
        Ok(StopReason::Horizon)
    }

    pub fn finish(self, stop_reason: StopReason, z_used: f64) -> EpisodeLog {
        EpisodeLog {
            stop_round: self.records.len() as u64,
            records: self.records,
            total_reward: self.total_reward,
            stop_reason,
            z_used,
            budget: self.ledger.budget(),
            horizon: self.ledger.horizon(),
            consumed: self.ledger.consumed().to_vec(),
        }
    }
}

/// One episode of the primal-dual rule with a fixed `z`.
pub fn run_episode<E: Environment>(env: &mut E, budget: f64, horizon: u64, z: f64, delta: f64) -> Result<EpisodeLog> {
    run_episode_observed(env, budget, horizon, z, delta, ())
}

pub fn run_episode_observed<E: Environment, O: RoundObserver>(
    env: &mut E,
    budget: f64,
    horizon: u64,
    z: f64,
    delta: f64,
    observer: O,
) -> Result<EpisodeLog> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidInput(format!("z must be finite and nonnegative, got {z}")));
    }
    let mut runner = Runner::new(env, budget, horizon, delta, observer)?;
    let stop = runner.exploit(horizon, z, budget / horizon as f64)?;
    Ok(runner.finish(stop, z))
}
