//! Column generation over the aggregated blocks.
//!
//! Every vertex of the feasible region without coupling rows is a choice of
//! one option per block, and the best one for multipliers `y` is the
//! per-block best response. The master LP mixes the vertices found so far
//! (the all-no-op vertex is the slack of the convexity row):
//!
//! ```text
//! max sum_k alpha_k R_k   s.t.  sum_k alpha_k C_k <= caps,  sum_k alpha_k <= 1
//! ```
//!
//! Its row duals `(y, sigma)` price the next vertex. The loop stops once the
//! Lagrangian bound at `y` meets the master value, which certifies optimality.

use super::{simplex, PackingInstance, GAP_TOL};
use crate::par::{self, Parallelism};

const MAX_COLUMNS: usize = 20_000;

struct Column {
    reward: f64,
    consumption: Vec<f64>,
    prices: Vec<f64>,
}

/// Best-response vertex at `prices`: scaled totals and the pricing value.
fn price(instance: &PackingInstance, prices: &[f64], mode: Parallelism) -> (Column, f64) {
    let d = instance.d();
    let partial = par::map_chunks(instance.num_blocks(), mode, |r| {
        let mut reward = 0.0;
        let mut cons = vec![0.0; d];
        let mut value = 0.0;
        for i in r {
            let (a, v) = instance.best_response(i, prices);
            if a != 0 {
                reward += instance.reward(i, a);
                value += v;
                for (s, c) in cons.iter_mut().zip(instance.consumption(i, a).unwrap_or_default()) {
                    *s += c;
                }
            }
        }
        (reward, cons, value)
    });
    let mut reward = 0.0;
    let mut consumption = vec![0.0; d];
    let mut value = 0.0;
    for (r, c, v) in partial {
        reward += r;
        value += v;
        consumption.iter_mut().zip(c).for_each(|(s, c)| *s += c);
    }
    let s = instance.scale();
    let column = Column {
        reward: s * reward,
        consumption: consumption.iter().map(|c| s * c).collect(),
        prices: prices.to_vec(),
    };
    (column, s * value)
}

pub(super) fn solve(instance: &PackingInstance, mode: Parallelism) -> Result<(Vec<f64>, Vec<f64>), String> {
    let d = instance.d();
    let caps = instance.caps();
    let mut columns: Vec<Column> = Vec::new();
    let mut rhs = caps.to_vec();
    rhs.push(1.0);

    for _ in 0..MAX_COLUMNS {
        let n = columns.len();
        let (alpha, y, sigma, master_value) = if n == 0 {
            (Vec::new(), vec![0.0; d], 0.0, 0.0)
        } else {
            let c: Vec<f64> = columns.iter().map(|col| col.reward).collect();
            let mut a = vec![0.0; (d + 1) * n];
            for (k, col) in columns.iter().enumerate() {
                for j in 0..d {
                    a[j * n + k] = col.consumption[j];
                }
                a[d * n + k] = 1.0;
            }
            let opt = simplex::maximize(&c, &a, &rhs)?;
            (opt.x, opt.y[..d].to_vec(), opt.y[d], opt.value)
        };

        let (column, pricing_value) = price(instance, &y, mode);
        let bound: f64 = y.iter().zip(caps).map(|(y, c)| y * c).sum::<f64>() + pricing_value;
        let gap = bound - master_value;
        let improves = pricing_value - sigma > 1e-12 * (1.0 + master_value.abs());
        if gap <= 0.1 * GAP_TOL * (1.0 + master_value.abs()) || !improves {
            return Ok((recover(instance, &columns, &alpha, mode), y));
        }
        columns.push(column);
    }
    Err(format!("column generation did not converge within {MAX_COLUMNS} columns"))
}

/// Mixes the per-block choices of the columns in the master solution.
fn recover(instance: &PackingInstance, columns: &[Column], alpha: &[f64], mode: Parallelism) -> Vec<f64> {
    let options = instance.arms() + 1;
    let active: Vec<(&[f64], f64)> = columns
        .iter()
        .zip(alpha)
        .filter(|(_, &w)| w > 0.0)
        .map(|(c, &w)| (c.prices.as_slice(), w))
        .collect();
    let total: f64 = active.iter().map(|(_, w)| w).sum();
    let norm = if total > 1.0 { total } else { 1.0 };
    par::map_chunks(instance.num_blocks(), mode, |r| {
        let mut out = Vec::with_capacity(r.len() * options);
        for i in r {
            let mut pi = vec![0.0; options];
            for (prices, w) in &active {
                pi[instance.best_response(i, prices).0] += w / norm;
            }
            pi[0] += 1.0 - total / norm;
            out.extend_from_slice(&pi);
        }
        out
    })
    .concat()
}
