//! Synthetic stochastic environments with linear expected outcomes.
//!
//! Each round the environment reveals a slate of `K` contexts in `[0,1]^m`.
//! Playing the arm with context `x` returns a reward with mean `mu* . x` and
//! a consumption vector with mean `W*^T x`, both in `[0,1]`. Slates are a
//! pure function of `(seed, t)`; noise is drawn from two further streams so
//! changing one role never perturbs the others.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Contexts of the `K` arms for one round, one column per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSlate {
    contexts: DMatrix<f64>,
}

impl ContextSlate {
    pub fn new(contexts: DMatrix<f64>) -> Self {
        Self { contexts }
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Self {
        Self { contexts: DMatrix::from_columns(columns) }
    }

    /// Context dimension `m`.
    pub fn dim(&self) -> usize {
        self.contexts.nrows()
    }

    pub fn num_arms(&self) -> usize {
        self.contexts.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.contexts
    }

    /// Context of arm `arm` (1-based; arm 0 is the no-op and has the zero context).
    pub fn context(&self, arm: usize) -> DVector<f64> {
        if arm == 0 {
            DVector::zeros(self.dim())
        } else {
            self.contexts.column(arm - 1).into_owned()
        }
    }
}

/// Distribution of slates.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextLaw {
    /// Entries i.i.d. uniform on `[0, upper]`.
    UniformBox { upper: f64 },
    /// The `K x K` identity every round (bandits with knapsacks).
    Identity,
    /// Uniform draw from a fixed list of slates.
    Finite { slates: Vec<ContextSlate> },
}

/// Zero-mean noise added to expected outcomes. All variants keep realized
/// outcomes inside `[0,1]` without clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw {
    None,
    /// `p +/- scale * min(p, 1-p)` with equal probability, `scale` in `[0,1]`.
    TwoPoint { scale: f64 },
    /// `1` with probability `p`, else `0`.
    Bernoulli,
}

impl Default for NoiseLaw {
    fn default() -> Self {
        NoiseLaw::TwoPoint { scale: 1.0 }
    }
}

impl NoiseLaw {
    fn draw(self, mean: f64, rng: &mut ChaCha8Rng) -> f64 {
        let p = mean.clamp(0.0, 1.0);
        match self {
            NoiseLaw::None => p,
            NoiseLaw::TwoPoint { scale } => {
                let a = scale * p.min(1.0 - p);
                if rng.gen::<bool>() {
                    p + a
                } else {
                    p - a
                }
            }
            NoiseLaw::Bernoulli => {
                if rng.gen::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Conditional variance of an outcome with mean `p`.
    pub fn variance(self, p: f64) -> f64 {
        match self {
            NoiseLaw::None => 0.0,
            NoiseLaw::TwoPoint { scale } => (scale * p.min(1.0 - p)).powi(2),
            NoiseLaw::Bernoulli => p * (1.0 - p),
        }
    }
}

/// Realized outcome of one pull.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub reward: f64,
    pub consumption: DVector<f64>,
}

impl Outcome {
    pub fn zero(d: usize) -> Self {
        Self { reward: 0.0, consumption: DVector::zeros(d) }
    }
}

/// What the learner interacts with.
pub trait Environment {
    fn m(&self) -> usize;
    fn d(&self) -> usize;
    fn num_arms(&self) -> usize;
    /// Slate for round `t`; a pure function of the environment seed and `t`.
    fn sample_slate(&self, t: u64) -> ContextSlate;
    /// Outcome of playing context `x`. The zero context is the no-op.
    fn realize(&mut self, x: &DVector<f64>) -> Result<Outcome>;
}

#[derive(Debug, Clone)]
pub struct LinearEnvironment {
    k: usize,
    mu_star: DVector<f64>,
    w_star: DMatrix<f64>,
    context_law: ContextLaw,
    noise_law: NoiseLaw,
    seed: u64,
    reward_rng: ChaCha8Rng,
    consumption_rng: ChaCha8Rng,
}

impl LinearEnvironment {
    /// Builds an environment and checks that every reachable context yields
    /// expected outcomes in `[0,1]`.
    pub fn new(
        mu_star: DVector<f64>,
        w_star: DMatrix<f64>,
        k: usize,
        context_law: ContextLaw,
        noise_law: NoiseLaw,
        seed: u64,
    ) -> Result<Self> {
        let m = mu_star.len();
        if m == 0 || k == 0 || w_star.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "m = {m}, K = {k}, d = {}",
                w_star.ncols()
            )));
        }
        if w_star.nrows() != m {
            return Err(Error::InvalidDimension(format!(
                "W* has {} rows, expected m = {m}",
                w_star.nrows()
            )));
        }
        let root_m = (m as f64).sqrt();
        if mu_star.norm() > root_m || w_star.column_iter().any(|c| c.norm() > root_m) {
            return Err(Error::InvalidMeans("parameter norms must not exceed sqrt(m)".into()));
        }
        if let NoiseLaw::TwoPoint { scale } = noise_law {
            if !(0.0..=1.0).contains(&scale) {
                return Err(Error::InvalidInput(format!("two-point noise scale {scale} outside [0,1]")));
            }
        }
        let mut env = Self {
            k,
            mu_star,
            w_star,
            context_law,
            noise_law,
            seed,
            reward_rng: seed::rng(0),
            consumption_rng: seed::rng(0),
        };
        env.check_support()?;
        env.reseed(seed);
        Ok(env)
    }

    /// Parameters drawn once from `param_seed` for uniform-box contexts on
    /// `[0, 1/sqrt(m)]^m`. `mu*` and each column of `W*` are nonnegative with
    /// l1 norm `sqrt(m)`, so expected outcomes span `[0,1]`.
    pub fn random_linear(m: usize, d: usize, k: usize, param_seed: u64, noise_law: NoiseLaw, seed: u64) -> Result<Self> {
        if m == 0 || d == 0 || k == 0 {
            return Err(Error::InvalidDimension(format!("m = {m}, d = {d}, K = {k}")));
        }
        let mut rng = seed::rng(seed::derive(param_seed, stream::PARAMETERS));
        let root_m = (m as f64).sqrt();
        let mut draw = || {
            let raw = DVector::from_fn(m, |_, _| rng.gen::<f64>() + 1e-3);
            let l1 = raw.sum();
            raw * (root_m / l1)
        };
        let mu_star = draw();
        let columns: Vec<DVector<f64>> = (0..d).map(|_| draw()).collect();
        let w_star = DMatrix::from_columns(&columns);
        Self::new(mu_star, w_star, k, ContextLaw::UniformBox { upper: 1.0 / root_m }, noise_law, seed)
    }

    fn check_support(&self) -> Result<()> {
        let m = self.m();
        let in_unit = |v: f64| (-1e-12..=1.0 + 1e-12).contains(&v);
        let check_column = |x: DVector<f64>| -> Result<()> {
            if x.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
                return Err(Error::InvalidInput("context entries must lie in [0,1]".into()));
            }
            let r = self.mu_star.dot(&x);
            let v = self.w_star.tr_mul(&x);
            if !in_unit(r) || !v.iter().all(|&c| in_unit(c)) {
                return Err(Error::InvalidMeans(format!(
                    "expected outcomes leave [0,1] at context {:?}",
                    x.as_slice()
                )));
            }
            Ok(())
        };
        match &self.context_law {
            ContextLaw::UniformBox { upper } => {
                if !(*upper > 0.0 && *upper <= 1.0) {
                    return Err(Error::InvalidInput(format!("box upper bound {upper} outside (0,1]")));
                }
                // Linear functionals over a box attain their range at corners:
                // sum of negative parts and sum of positive parts.
                let range = |w: DVector<f64>| {
                    let lo: f64 = w.iter().map(|&c| c.min(0.0) * upper).sum();
                    let hi: f64 = w.iter().map(|&c| c.max(0.0) * upper).sum();
                    (lo, hi)
                };
                let mut ranges = vec![range(self.mu_star.clone())];
                ranges.extend(self.w_star.column_iter().map(|c| range(c.into_owned())));
                if ranges.iter().any(|&(lo, hi)| !in_unit(lo) || !in_unit(hi)) {
                    return Err(Error::InvalidMeans("expected outcomes leave [0,1] on the context box".into()));
                }
            }
            ContextLaw::Identity => {
                if m != self.k {
                    return Err(Error::InvalidDimension(format!("identity contexts need m = K, got {m} and {}", self.k)));
                }
                for a in 0..m {
                    check_column(DVector::from_fn(m, |i, _| if i == a { 1.0 } else { 0.0 }))?;
                }
            }
            ContextLaw::Finite { slates } => {
                if slates.is_empty() {
                    return Err(Error::InvalidOptions("finite context law needs at least one slate".into()));
                }
                for s in slates {
                    if s.dim() != m || s.num_arms() != self.k {
                        return Err(Error::InvalidDimension("slate shape does not match m x K".into()));
                    }
                    for a in 1..=self.k {
                        check_column(s.context(a))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Resets the noise streams to those of `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.reward_rng = seed::rng(seed::derive(seed, stream::REWARD_NOISE));
        self.consumption_rng = seed::rng(seed::derive(seed, stream::CONSUMPTION_NOISE));
    }

    /// Copy with the same parameters and fresh streams derived from `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut env = self.clone();
        env.reseed(seed);
        env
    }

    pub fn with_noise(mut self, noise_law: NoiseLaw) -> Self {
        self.noise_law = noise_law;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mu_star(&self) -> &DVector<f64> {
        &self.mu_star
    }

    pub fn w_star(&self) -> &DMatrix<f64> {
        &self.w_star
    }

    pub fn context_law(&self) -> &ContextLaw {
        &self.context_law
    }

    pub fn noise_law(&self) -> NoiseLaw {
        self.noise_law
    }

    /// Expected reward and consumption at `x`.
    pub fn expected(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.mu_star.dot(x), self.w_star.tr_mul(x))
    }

    /// Slate for round `t` together with its index when the law is finite.
    pub fn sample_slate_indexed(&self, t: u64) -> (ContextSlate, Option<usize>) {
        let m = self.m();
        match &self.context_law {
            ContextLaw::Identity => (ContextSlate::new(DMatrix::identity(m, m)), Some(0)),
            ContextLaw::UniformBox { upper } => {
                let mut rng = self.context_rng(t);
                let upper = *upper;
                (ContextSlate::new(DMatrix::from_fn(m, self.k, |_, _| rng.gen::<f64>() * upper)), None)
            }
            ContextLaw::Finite { slates } => {
                let i = self.context_rng(t).gen_range(0..slates.len());
                (slates[i].clone(), Some(i))
            }
        }
    }

    fn context_rng(&self, t: u64) -> ChaCha8Rng {
        seed::rng(seed::derive(seed::derive(self.seed, stream::CONTEXTS), t))
    }

    /// Plain-text dump of the ground truth for audit.
    pub fn export_parameters(&self) -> String {
        let mut out = String::new();
        let join = |it: &mut dyn Iterator<Item = &f64>| it.map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "m {} d {} K {}", self.m(), self.d(), self.k);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "mu_star {}", join(&mut self.mu_star.iter()));
        for (j, c) in self.w_star.column_iter().enumerate() {
            let _ = writeln!(out, "w_star_{} {}", j + 1, join(&mut c.iter()));
        }
        let law = match &self.context_law {
            ContextLaw::UniformBox { upper } => format!("uniform-box {upper}"),
            ContextLaw::Identity => "identity".to_string(),
            ContextLaw::Finite { slates } => format!("finite {}", slates.len()),
        };
        let _ = writeln!(out, "context_law {law}");
        let noise = match self.noise_law {
            NoiseLaw::None => "none".to_string(),
            NoiseLaw::TwoPoint { scale } => format!("two-point {scale}"),
            NoiseLaw::Bernoulli => "bernoulli".to_string(),
        };
        let _ = writeln!(out, "noise_law {noise}");
        out
    }
}

impl Environment for LinearEnvironment {
    fn m(&self) -> usize {
        self.mu_star.len()
    }

    fn d(&self) -> usize {
        self.w_star.ncols()
    }

    fn num_arms(&self) -> usize {
        self.k
    }

    fn sample_slate(&self, t: u64) -> ContextSlate {
        self.sample_slate_indexed(t).0
    }

    fn realize(&mut self, x: &DVector<f64>) -> Result<Outcome> {
        if x.len() != self.m() {
            return Err(Error::InvalidDimension(format!("context length {} != m = {}", x.len(), self.m())));
        }
        if x.iter().all(|&e| e == 0.0) {
            return Ok(Outcome::zero(self.d()));
        }
        let (r, v) = self.expected(x);
        let reward = self.noise_law.draw(r, &mut self.reward_rng);
        let noise = self.noise_law;
        let rng = &mut self.consumption_rng;
        let consumption = v.map(|c| noise.draw(c, rng));
        Ok(Outcome { reward, consumption })
    }
}

/// Bandits with knapsacks as a linear instance: identity contexts, `m = K`.
/// `consumption_means` is `d` rows of `K` entries.
pub fn make_bwk(reward_means: &[f64], consumption_means: &[Vec<f64>]) -> Result<LinearEnvironment> {
    let k = reward_means.len();
    let d = consumption_means.len();
    if k == 0 || d == 0 {
        return Err(Error::InvalidDimension(format!("K = {k}, d = {d}")));
    }
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    if !reward_means.iter().all(|&v| unit(v)) {
        return Err(Error::InvalidMeans("reward means must lie in [0,1]".into()));
    }
    if consumption_means.iter().any(|row| row.len() != k || !row.iter().all(|&v| unit(v))) {
        return Err(Error::InvalidMeans("consumption means must be d rows of K values in [0,1]".into()));
    }
    let mu_star = DVector::from_column_slice(reward_means);
    let w_star = DMatrix::from_fn(k, d, |a, j| consumption_means[j][a]);
    LinearEnvironment::new(mu_star, w_star, k, ContextLaw::Identity, NoiseLaw::default(), 0)
}

/// Online stochastic packing as a linear instance. Each option is the vector
/// `(r, v_1..v_d)` and is itself the context, so `mu* = e_1`, `W*` selects the
/// remaining coordinates and outcomes equal the option exactly.
pub fn make_ospp(option_sets: &[Vec<Vec<f64>>]) -> Result<LinearEnvironment> {
    let first = option_sets
        .first()
        .ok_or_else(|| Error::InvalidOptions("at least one option set is required".into()))?;
    let k = first.len();
    let m = first.first().map_or(0, Vec::len);
    if k == 0 || m < 2 {
        return Err(Error::InvalidOptions("options need a reward and at least one resource".into()));
    }
    for set in option_sets {
        if set.len() != k || set.iter().any(|o| o.len() != m) {
            return Err(Error::InvalidOptions("all option sets must have K options of length d+1".into()));
        }
        if set.iter().flatten().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidOptions("option entries must lie in [0,1]".into()));
        }
    }
    let d = m - 1;
    let slates = option_sets
        .iter()
        .map(|set| ContextSlate::new(DMatrix::from_fn(m, k, |i, a| set[a][i])))
        .collect();
    let mu_star = DVector::from_fn(m, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let w_star = DMatrix::from_fn(m, d, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    LinearEnvironment::new(mu_star, w_star, k, ContextLaw::Finite { slates }, NoiseLaw::None, 0)
}
