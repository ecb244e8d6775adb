//! Multiplicative-weights learner over `{theta >= 0, |theta|_1 <= 1}`.
//!
//! The domain is handled as the (d+1)-simplex whose last coordinate is a
//! dummy with payoff zero. The learner maximizes the cumulative linear payoff
//! `theta_t . g_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the dual domain: `d` active multipliers plus the dummy mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub active: Vec<f64>,
    pub dummy: f64,
}

impl DualVector {
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("dual dimension must be at least 1".into()));
        }
        let w = 1.0 / (d + 1) as f64;
        Ok(Self { active: vec![w; d], dummy: w })
    }

    /// The zero multiplier (all mass on the dummy).
    pub fn zero(d: usize) -> Self {
        Self { active: vec![0.0; d], dummy: 1.0 }
    }

    /// Coordinate vector `e_j`.
    pub fn vertex(d: usize, j: usize) -> Self {
        let mut active = vec![0.0; d];
        active[j] = 1.0;
        Self { active, dummy: 0.0 }
    }

    pub fn d(&self) -> usize {
        self.active.len()
    }

    /// `theta . payoff` over the active coordinates.
    pub fn dot(&self, payoff: &[f64]) -> f64 {
        self.active.iter().zip(payoff).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    pub d: usize,
    pub eta: f64,
    pub horizon: u64,
}

impl DualConfig {
    /// Step size `sqrt(ln(d+1) / T)`.
    pub fn tuned(d: usize, horizon: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("dual dimension must be at least 1".into()));
        }
        let eta = (((d + 1) as f64).ln() / horizon.max(1) as f64).sqrt();
        Ok(Self { d, eta, horizon })
    }
}

pub fn init(config: &DualConfig) -> Result<DualVector> {
    DualVector::uniform(config.d)
}

/// One exponentiated-gradient step. Payoff entries are clamped to `[-1, 1]`.
pub fn step(theta: &DualVector, payoff: &[f64], config: &DualConfig) -> DualVector {
    let logs: Vec<f64> = theta
        .active
        .iter()
        .zip(payoff)
        .map(|(&w, &g)| w.ln() + config.eta * g.clamp(-1.0, 1.0))
        .chain(std::iter::once(theta.dummy.ln()))
        .collect();
    softmax(&logs)
}

/// Best fixed point of the domain in hindsight and its cumulative payoff.
/// Linear payoffs put the maximizer at a vertex: `0` or some `e_j`.
pub fn hindsight_best(history: &[Vec<f64>]) -> Result<(DualVector, f64)> {
    let first = history.first().ok_or(Error::EmptyHistory)?;
    let d = first.len();
    let mut totals = vec![0.0; d];
    for g in history {
        for (t, x) in totals.iter_mut().zip(g) {
            *t += x.clamp(-1.0, 1.0);
        }
    }
    let mut best = (DualVector::zero(d), 0.0);
    for (j, &v) in totals.iter().enumerate() {
        if v > best.1 {
            best = (DualVector::vertex(d, j), v);
        }
    }
    Ok(best)
}

fn softmax(logs: &[f64]) -> DualVector {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = logs.len() - 1;
    DualVector {
        active: w[..d].iter().map(|x| x / z).collect(),
        dummy: w[d] / z,
    }
}

/// Stateful form of [`step`] for long episodes. Keeps cumulative log-weights
/// so multipliers that shrink for many rounds never underflow to zero.
#[derive(Debug, Clone)]
pub struct DualLearner {
    config: DualConfig,
    log_weights: Vec<f64>,
    theta: DualVector,
}

impl DualLearner {
    pub fn new(config: DualConfig) -> Result<Self> {
        let theta = init(&config)?;
        Ok(Self { config, log_weights: vec![0.0; config.d + 1], theta })
    }

    pub fn config(&self) -> &DualConfig {
        &self.config
    }

    pub fn theta(&self) -> &DualVector {
        &self.theta
    }

    pub fn step(&mut self, payoff: &[f64]) {
        for (l, g) in self.log_weights.iter_mut().zip(payoff) {
            *l += self.config.eta * g.clamp(-1.0, 1.0);
        }
        self.theta = softmax(&self.log_weights);
    }
}
