//! Ridge estimates and confidence ellipsoids for the reward vector and the
//! consumption matrix.
//!
//! The regularizer is fixed at `lambda = 1` and the noise range at one unit,
//! so the Gram matrix starts at the identity and the ellipsoid radius is
//! `sqrt(m ln((d + t m d) / delta)) + sqrt(m)` after `t` observations. The
//! same radius bounds the reward ellipsoid and every consumption column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of rank-one updates between full re-inversions of the Gram matrix.
pub const REINVERT_EVERY: u64 = 512;

const NORM_SLACK: f64 = 1e-12;

/// Confidence radius after `t` observations.
pub fn confidence_radius(m: usize, d: usize, t: u64, delta: f64) -> f64 {
    let (m, d, t) = (m as f64, d as f64, t as f64);
    (m * ((d + t * m * d) / delta).ln()).sqrt() + m.sqrt()
}

/// Closed-form optimistic estimates for one context.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimistic {
    /// Upper confidence bound on the expected reward.
    pub reward: f64,
    /// Per-resource lower confidence bounds on the expected consumption.
    pub consumption: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    m: usize,
    d: usize,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    reward_moment: DVector<f64>,
    consumption_moment: DMatrix<f64>,
    mu_hat: DVector<f64>,
    w_hat: DMatrix<f64>,
    rounds_seen: u64,
    delta: f64,
}

impl EstimatorState {
    pub fn new(m: usize, d: usize, delta: f64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::InvalidDimension(format!("m = {m}, d = {d}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfidence(delta));
        }
        Ok(Self {
            m,
            d,
            gram: DMatrix::identity(m, m),
            gram_inv: DMatrix::identity(m, m),
            reward_moment: DVector::zeros(m),
            consumption_moment: DMatrix::zeros(m, d),
            mu_hat: DVector::zeros(m),
            w_hat: DMatrix::zeros(m, d),
            rounds_seen: 0,
            delta,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rounds_seen(&self) -> u64 {
        self.rounds_seen
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn reward_moment(&self) -> &DVector<f64> {
        &self.reward_moment
    }

    pub fn consumption_moment(&self) -> &DMatrix<f64> {
        &self.consumption_moment
    }

    /// Ridge estimate of the reward vector.
    pub fn mu_hat(&self) -> &DVector<f64> {
        &self.mu_hat
    }

    /// Ridge estimate of the consumption matrix (`m x d`, one column per resource).
    pub fn w_hat(&self) -> &DMatrix<f64> {
        &self.w_hat
    }

    fn check_context(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::InvalidDimension(format!(
                "context has length {}, expected {}",
                x.len(),
                self.m
            )));
        }
        let bound = (self.m as f64).sqrt();
        let norm = x.norm();
        if !norm.is_finite() || norm > bound * (1.0 + NORM_SLACK) {
            return Err(Error::ContextOutOfRange(format!("|x| = {norm} exceeds sqrt(m) = {bound}")));
        }
        Ok(())
    }

    /// Folds one observation into the estimates.
    pub fn update(&mut self, x: &DVector<f64>, reward: f64, consumption: &DVector<f64>) -> Result<()> {
        self.check_context(x)?;
        if consumption.len() != self.d {
            return Err(Error::InvalidDimension(format!(
                "consumption has length {}, expected {}",
                consumption.len(),
                self.d
            )));
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(reward) || !consumption.iter().all(|&v| in_unit(v)) {
            return Err(Error::ContextOutOfRange(format!(
                "outcome outside [0,1]: reward {reward}, consumption {consumption:?}"
            )));
        }

        self.gram.ger(1.0, x, x, 1.0);
        self.rounds_seen += 1;
        if self.rounds_seen % REINVERT_EVERY == 0 {
            self.gram_inv = invert_spd(&self.gram);
        } else {
            // Sherman-Morrison: (M + x x^T)^{-1} = M^{-1} - (M^{-1}x)(M^{-1}x)^T / (1 + x^T M^{-1} x)
            let u = &self.gram_inv * x;
            let denom = 1.0 + x.dot(&u);
            self.gram_inv.ger(-1.0 / denom, &u, &u, 1.0);
        }

        self.reward_moment.axpy(reward, x, 1.0);
        self.consumption_moment.ger(1.0, x, consumption, 1.0);
        self.mu_hat = &self.gram_inv * &self.reward_moment;
        self.w_hat = &self.gram_inv * &self.consumption_moment;
        Ok(())
    }

    /// Ellipsoid radius at the current round count.
    pub fn radius(&self) -> f64 {
        confidence_radius(self.m, self.d, self.rounds_seen, self.delta)
    }

    /// `sqrt(x^T M^{-1} x)`.
    pub fn mahalanobis_inv_norm(&self, x: &DVector<f64>) -> f64 {
        quad_form(&self.gram_inv, x).max(0.0).sqrt()
    }

    /// `sqrt(y^T M y)`, the norm that defines the ellipsoids.
    pub fn gram_norm(&self, y: &DVector<f64>) -> f64 {
        quad_form(&self.gram, y).max(0.0).sqrt()
    }

    /// Both optimistic estimates for `x`, sharing one exploration bonus.
    pub fn optimistic(&self, x: &DVector<f64>) -> Result<Optimistic> {
        self.check_context(x)?;
        let bonus = self.radius() * self.mahalanobis_inv_norm(x);
        let reward = x.dot(&self.mu_hat) + bonus;
        let consumption = self.w_hat.tr_mul(x).add_scalar(-bonus);
        Ok(Optimistic { reward, consumption })
    }

    /// Maximum of `x . mu` over the reward ellipsoid. Not clipped.
    pub fn optimistic_reward(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_context(x)?;
        Ok(x.dot(&self.mu_hat) + self.radius() * self.mahalanobis_inv_norm(x))
    }

    /// Column-wise minimum of `x . w_j` over the consumption ellipsoids. For
    /// any nonnegative weights `theta`, `theta . result` is the minimum of
    /// `x^T W theta` over the product of ellipsoids. Not clipped.
    pub fn optimistic_consumption(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.optimistic(x)?.consumption)
    }

    /// Whether `mu` lies in the reward ellipsoid.
    pub fn reward_ellipsoid_contains(&self, mu: &DVector<f64>) -> bool {
        self.gram_norm(&(mu - &self.mu_hat)) <= self.radius()
    }

    /// Whether `w` lies in the ellipsoid of consumption column `j`.
    pub fn consumption_ellipsoid_contains(&self, j: usize, w: &DVector<f64>) -> bool {
        let center = self.w_hat.column(j);
        self.gram_norm(&(w - center)) <= self.radius()
    }
}

fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (a * x).dot(x)
}

fn invert_spd(a: &DMatrix<f64>) -> DMatrix<f64> {
    match a.clone().cholesky() {
        Some(c) => c.inverse(),
        // Unreachable for I + sum x x^T; LU keeps the call total.
        None => a.clone().try_inverse().expect("Gram matrix is invertible"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn init_is_empty_history() {
        let s = EstimatorState::new(2, 1, 0.05).unwrap();
        assert_eq!(s.gram(), &DMatrix::identity(2, 2));
        assert_eq!(s.mu_hat(), &v(&[0.0, 0.0]));
        let s = EstimatorState::new(1, 3, 0.1).unwrap();
        assert_eq!(s.w_hat(), &DMatrix::zeros(1, 3));
    }

    #[test]
    fn init_rejects_bad_arguments() {
        assert!(matches!(EstimatorState::new(0, 1, 0.1), Err(Error::InvalidDimension(_))));
        assert!(matches!(EstimatorState::new(1, 0, 0.1), Err(Error::InvalidDimension(_))));
        assert!(matches!(EstimatorState::new(1, 1, 0.0), Err(Error::InvalidConfidence(_))));
        assert!(matches!(EstimatorState::new(1, 1, 1.0), Err(Error::InvalidConfidence(_))));
    }

    #[test]
    fn rank_one_update_of_identity() {
        let mut s = EstimatorState::new(2, 1, 0.05).unwrap();
        s.update(&v(&[1.0, 0.0]), 0.3, &v(&[0.7])).unwrap();
        assert_eq!(s.gram(), &DMatrix::from_diagonal(&v(&[2.0, 1.0])));
        assert_abs_diff_eq!(s.gram_inv(), &DMatrix::from_diagonal(&v(&[0.5, 1.0])), epsilon = 1e-15);
    }

    #[test]
    fn scalar_ridge_estimate() {
        let mut s = EstimatorState::new(1, 1, 0.1).unwrap();
        s.update(&v(&[1.0]), 0.5, &v(&[0.5])).unwrap();
        // M = 2, moment = 0.5
        assert_abs_diff_eq!(s.mu_hat()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s.w_hat()[(0, 0)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn incremental_inverse_matches_direct_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [1usize, 3, 6] {
            let mut s = EstimatorState::new(m, 2, 0.05).unwrap();
            let mut brute = DMatrix::<f64>::identity(m, m);
            for _ in 0..50 {
                let x = DVector::from_fn(m, |_, _| rng.gen::<f64>());
                brute += &x * x.transpose();
                s.update(&x, rng.gen(), &DVector::from_fn(2, |_, _| rng.gen())).unwrap();
            }
            let direct = brute.clone().try_inverse().unwrap();
            assert!((s.gram() - &brute).norm() < 1e-8);
            assert!((s.gram_inv() - direct).norm() < 1e-6);
            let mu = s.gram_inv() * s.reward_moment();
            assert!((s.mu_hat() - mu).norm() < 1e-12);
        }
    }

    #[test]
    fn reinversion_keeps_identity_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = EstimatorState::new(4, 1, 0.05).unwrap();
        for _ in 0..(2 * REINVERT_EVERY + 37) {
            let x = DVector::from_fn(4, |_, _| rng.gen::<f64>());
            s.update(&x, rng.gen(), &v(&[rng.gen()])).unwrap();
            let err = (s.gram() * s.gram_inv() - DMatrix::identity(4, 4)).norm();
            assert!(err < 1e-6, "drift {err}");
        }
    }

    #[test]
    fn update_rejects_out_of_range() {
        let mut s = EstimatorState::new(2, 1, 0.05).unwrap();
        assert!(matches!(
            s.update(&v(&[1.5, 1.0]), 0.5, &v(&[0.5])),
            Err(Error::ContextOutOfRange(_))
        ));
        assert!(matches!(
            s.update(&v(&[0.5, 0.5]), 1.5, &v(&[0.5])),
            Err(Error::ContextOutOfRange(_))
        ));
        assert!(matches!(
            s.update(&v(&[0.5, 0.5]), 0.5, &v(&[-0.1])),
            Err(Error::ContextOutOfRange(_))
        ));
        assert_eq!(s.rounds_seen(), 0);
    }

    #[test]
    fn radius_closed_forms() {
        assert_abs_diff_eq!(confidence_radius(1, 1, 1, 0.5), 4f64.ln().sqrt() + 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(confidence_radius(1, 1, 1, 0.5), 2.177_410_022_515_474_5, epsilon = 1e-5);
        assert_abs_diff_eq!(confidence_radius(4, 1, 0, (-1.0f64).exp()), 4.0, epsilon = 1e-12);
        let mut prev = 0.0;
        for t in 0..200 {
            let r = confidence_radius(3, 2, t, 0.05);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn mahalanobis_examples() {
        let s = EstimatorState::new(2, 1, 0.05).unwrap();
        assert_abs_diff_eq!(s.mahalanobis_inv_norm(&v(&[1.0, 0.0])), 1.0);
        assert_abs_diff_eq!(s.mahalanobis_inv_norm(&v(&[3.0, 4.0])), 5.0, epsilon = 1e-14);
        let mut s = EstimatorState::new(2, 1, 0.05).unwrap();
        for _ in 0..3 {
            s.update(&v(&[1.0, 0.0]), 0.0, &v(&[0.0])).unwrap();
        }
        // gram = diag(4, 1)
        assert_abs_diff_eq!(s.mahalanobis_inv_norm(&v(&[1.0, 0.0])), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn optimistic_along_axis_and_at_zero() {
        let mut s = EstimatorState::new(2, 1, 0.05).unwrap();
        s.update(&v(&[1.0, 0.0]), 1.0, &v(&[1.0])).unwrap();
        // mu_hat = (0.5, 0), gram = diag(2,1)
        let x = v(&[1.0, 0.0]);
        let rho = s.radius();
        let bonus = rho * (0.5f64).sqrt();
        assert_abs_diff_eq!(s.optimistic_reward(&x).unwrap(), 0.5 + bonus, epsilon = 1e-14);
        assert_abs_diff_eq!(s.optimistic_consumption(&x).unwrap()[0], 0.5 - bonus, epsilon = 1e-14);
        let zero = v(&[0.0, 0.0]);
        assert_eq!(s.optimistic_reward(&zero).unwrap(), 0.0);
        assert_eq!(s.optimistic_consumption(&zero).unwrap(), v(&[0.0]));
    }

    #[test]
    fn optimistic_rejects_long_contexts() {
        let s = EstimatorState::new(1, 1, 0.05).unwrap();
        assert!(s.optimistic_reward(&v(&[1.01])).is_err());
        assert!(s.optimistic_consumption(&v(&[-1.01])).is_err());
    }
}
