use lincbwk::estimation::{confidence_radius, EstimatorState};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(m: usize, d: usize, updates: usize, seed: u64) -> EstimatorState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = EstimatorState::new(m, d, 0.05).unwrap();
    let upper = 1.0 / (m as f64).sqrt();
    for _ in 0..updates {
        let x = DVector::from_fn(m, |_, _| rng.gen::<f64>() * upper);
        let v = DVector::from_fn(d, |_, _| rng.gen::<f64>());
        est.update(&x, rng.gen(), &v).unwrap();
    }
    est
}

/// Draws points uniformly from `{p : ||p - centre||_M <= radius}` by
/// rejection from the bounding box of the whitened unit ball.
struct EllipsoidSampler {
    centre: DVector<f64>,
    /// `L^{-T}` with `M = L L^T`.
    map: DMatrix<f64>,
    radius: f64,
}

impl EllipsoidSampler {
    fn new(centre: DVector<f64>, gram: &DMatrix<f64>, radius: f64) -> Self {
        let l = gram.clone().cholesky().unwrap().l();
        let map = l.transpose().try_inverse().unwrap();
        Self { centre, map, radius }
    }

    fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        let m = self.centre.len();
        loop {
            let u = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..=1.0));
            if u.norm() <= 1.0 {
                return &self.centre + &self.map * u * self.radius;
            }
        }
    }
}

#[test]
fn optimistic_reward_dominates_sampled_ellipsoid() {
    let est = random_state(3, 2, 40, 1);
    let sampler = EllipsoidSampler::new(est.mu_hat().clone(), est.gram(), est.radius());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = DVector::from_vec(vec![0.3, 0.5, 0.1]);
    let ucb = est.optimistic_reward(&x).unwrap();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..1_000_000 {
        let mu = sampler.sample(&mut rng);
        assert!(est.reward_ellipsoid_contains(&mu));
        best = best.max(x.dot(&mu));
    }
    assert!(best <= ucb, "sampled {best} above closed form {ucb}");
    // The closed form is the supremum, so dense sampling approaches it.
    let bonus = est.radius() * est.mahalanobis_inv_norm(&x);
    assert!(ucb - best < 0.05 * bonus, "gap {} vs bonus {bonus}", ucb - best);
}

#[test]
fn optimistic_consumption_is_below_sampled_ellipsoids() {
    let est = random_state(3, 2, 40, 3);
    let samplers: Vec<_> = (0..2)
        .map(|j| EllipsoidSampler::new(est.w_hat().column(j).into_owned(), est.gram(), est.radius()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = DVector::from_vec(vec![0.2, 0.1, 0.55]);
    let theta = [0.7, 0.2];
    let lcb = est.optimistic_consumption(&x).unwrap();
    let weighted: f64 = lcb.iter().zip(theta).map(|(c, t)| c * t).sum();
    let mut lowest = f64::INFINITY;
    for _ in 0..1_000_000 {
        let value: f64 = samplers.iter().zip(theta).map(|(s, t)| t * x.dot(&s.sample(&mut rng))).sum();
        lowest = lowest.min(value);
    }
    assert!(weighted <= lowest, "closed form {weighted} above sampled minimum {lowest}");
}

#[test]
fn zero_context_has_zero_estimates() {
    let est = random_state(4, 3, 25, 5);
    let x = DVector::zeros(4);
    assert_eq!(est.optimistic_reward(&x).unwrap(), 0.0);
    assert!(est.optimistic_consumption(&x).unwrap().iter().all(|&c| c == 0.0));
}

#[test]
fn radius_is_nondecreasing() {
    for (m, d) in [(1, 1), (3, 2), (8, 5)] {
        let mut prev = 0.0;
        for t in 0..2000 {
            let r = confidence_radius(m, d, t, 0.05);
            assert!(r >= prev);
            prev = r;
        }
    }
}

fn unit_box(m: usize) -> impl Strategy<Value = Vec<f64>> {
    let upper = (m as f64).sqrt().recip();
    prop::collection::vec(0.0..=upper, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_stays_consistent(seed in any::<u64>(), n in 1usize..1300) {
        let est = random_state(3, 2, n, seed);
        let product = est.gram_inv() * est.gram();
        let err = (product - DMatrix::<f64>::identity(3, 3)).abs().max();
        prop_assert!(err <= 1e-6, "gram_inv * gram off identity by {}", err);
    }

    #[test]
    fn matrix_cauchy_schwarz(a in prop::collection::vec(-3.0..3.0f64, 4), b in prop::collection::vec(-3.0..3.0f64, 4), seed in any::<u64>()) {
        let est = random_state(4, 1, 30, seed);
        let a = DVector::from_vec(a);
        let b = DVector::from_vec(b);
        prop_assert!(a.dot(&b).abs() <= est.gram_norm(&a) * est.mahalanobis_inv_norm(&b) + 1e-9);
    }

    #[test]
    fn elliptical_potential(m in 1usize..6, t in 3usize..400, xs in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 5), 400)) {
        let mut est = EstimatorState::new(m, 1, 0.05).unwrap();
        let mut sum = 0.0;
        for x in xs.iter().take(t) {
            // Entries in [0,1] keep ||x|| <= sqrt(m).
            let x = DVector::from_iterator(m, x.iter().take(m).copied());
            sum += est.mahalanobis_inv_norm(&x);
            est.update(&x, 0.5, &DVector::from_element(1, 0.5)).unwrap();
        }
        let tf = t as f64;
        prop_assert!(sum <= 2.0 * (m as f64 * tf * tf.ln()).sqrt());
    }

    #[test]
    fn reward_closed_form_matches_ellipsoid_boundary(seed in any::<u64>(), x in unit_box(3)) {
        // The maximizer mu_hat + rho M^{-1} x / ||x||_{M^{-1}} sits on the
        // boundary and attains the closed form.
        let est = random_state(3, 1, 20, seed);
        let x = DVector::from_vec(x);
        let norm = est.mahalanobis_inv_norm(&x);
        prop_assume!(norm > 1e-9);
        let arg = est.mu_hat() + est.gram_inv() * &x * (est.radius() / norm);
        prop_assert!((est.gram_norm(&(&arg - est.mu_hat())) - est.radius()).abs() <= 1e-9 * est.radius());
        prop_assert!((x.dot(&arg) - est.optimistic_reward(&x).unwrap()).abs() <= 1e-9);
    }
}
