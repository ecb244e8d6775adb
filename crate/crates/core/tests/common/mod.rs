//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use lincbwk::packing::PackingInstance;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random small instance: up to `max_blocks` blocks, `max_arms` arms and
/// `max_d` resources.
pub fn random_instance(rng: &mut impl Rng, max_blocks: usize, max_arms: usize, max_d: usize) -> PackingInstance {
    let blocks = rng.gen_range(1..=max_blocks);
    let arms = rng.gen_range(1..=max_arms);
    let d = rng.gen_range(1..=max_d);
    let scale = rng.gen_range(0.5..4.0);
    let caps = (0..d).map(|_| rng.gen_range(0.0..blocks as f64 * scale * 0.8)).collect();
    let mut inst = PackingInstance::new(arms, d, scale, caps).unwrap();
    for _ in 0..blocks {
        let r: Vec<f64> = (0..arms).map(|_| rng.gen()).collect();
        let c: Vec<f64> = (0..arms * d).map(|_| rng.gen()).collect();
        inst.push_block(&r, &c).unwrap();
    }
    inst
}

/// Dense inequality form `A x <= b, x >= 0` of an instance; variables are
/// the real arms of every block, block-major.
fn dense(inst: &PackingInstance) -> (Vec<f64>, DMatrix<f64>, DVector<f64>) {
    let (blocks, k, d) = (inst.num_blocks(), inst.arms(), inst.d());
    let n = blocks * k;
    let mut c = vec![0.0; n];
    let mut a = DMatrix::zeros(blocks + d, n);
    for i in 0..blocks {
        for arm in 1..=k {
            let v = i * k + arm - 1;
            c[v] = inst.scale() * inst.reward(i, arm);
            a[(i, v)] = 1.0;
            for (j, cj) in inst.consumption(i, arm).unwrap().iter().enumerate() {
                a[(blocks + j, v)] = inst.scale() * cj;
            }
        }
    }
    let mut b = vec![1.0; blocks];
    b.extend_from_slice(inst.caps());
    (c, a, DVector::from_vec(b))
}

/// Exact optimum by enumerating every basic solution: each choice of `n`
/// tight constraints among the rows and the nonnegativity bounds.
pub fn vertex_value(inst: &PackingInstance) -> f64 {
    let (c, a, b) = dense(inst);
    let rows = a.nrows();
    let n = a.ncols();
    let total = rows + n;
    let mut best = 0.0f64;
    let mut chosen = Vec::with_capacity(n);
    combinations(total, n, 0, &mut chosen, &mut |set| {
        let mut sys = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (r, &k) in set.iter().enumerate() {
            if k < rows {
                sys.set_row(r, &a.row(k));
                rhs[r] = b[k];
            } else {
                sys[(r, k - rows)] = 1.0;
            }
        }
        let Some(x) = sys.lu().solve(&rhs) else { return };
        if x.iter().any(|v| !v.is_finite() || *v < -1e-9) {
            return;
        }
        if (&a * &x - &b).iter().any(|v| *v > 1e-9) {
            return;
        }
        best = best.max(c.iter().zip(x.iter()).map(|(c, x)| c * x).sum());
    });
    best
}

fn combinations(total: usize, k: usize, start: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..total {
        if total - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(total, k, i + 1, chosen, f);
        chosen.pop();
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Grid resolution per block: the finest `1/n`, `n <= 50`, keeping the
/// product of per-block grid sizes under `budget`.
pub fn grid_resolution(inst: &PackingInstance, budget: f64) -> usize {
    let k = inst.arms();
    let blocks = inst.num_blocks() as i32;
    (1..=50).rev().find(|&n| binomial(n + k, k).powi(blocks) <= budget).unwrap_or(1)
}

/// Best feasible value over distributions with entries in multiples of
/// `1/n`. A lower bound on the optimum.
pub fn grid_value(inst: &PackingInstance, n: usize) -> f64 {
    let k = inst.arms();
    let points = simplex_grid(k, n);
    let mut best = 0.0f64;
    let mut used = vec![0.0; inst.d()];
    grid_search(inst, &points, 0, 0.0, &mut used, &mut best);
    best
}

/// Mass on each real arm for all grid points of the `(K+1)`-simplex.
fn simplex_grid(k: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, n: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for units in 0..=left {
            cur.push(units as f64 / n as f64);
            rec(k, left - units, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, n, n, &mut Vec::new(), &mut out);
    out
}

fn grid_search(inst: &PackingInstance, points: &[Vec<f64>], block: usize, value: f64, used: &mut [f64], best: &mut f64) {
    if block == inst.num_blocks() {
        *best = best.max(value);
        return;
    }
    let s = inst.scale();
    for p in points {
        let mut ok = true;
        let mut add = vec![0.0; used.len()];
        for (a, &mass) in p.iter().enumerate() {
            for (j, c) in inst.consumption(block, a + 1).unwrap().iter().enumerate() {
                add[j] += s * mass * c;
            }
        }
        for j in 0..used.len() {
            if used[j] + add[j] > inst.caps()[j] + 1e-12 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let gain: f64 = p.iter().enumerate().map(|(a, m)| s * m * inst.reward(block, a + 1)).sum();
        used.iter_mut().zip(&add).for_each(|(u, a)| *u += a);
        grid_search(inst, points, block + 1, value + gain, used, best);
        used.iter_mut().zip(&add).for_each(|(u, a)| *u -= a);
    }
}
