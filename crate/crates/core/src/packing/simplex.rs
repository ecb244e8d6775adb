//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible at the origin, so no phase one is needed.
//! Entering and leaving variables follow Bland's rule, which rules out
//! cycling on degenerate vertices.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct LpOptimum {
    pub x: Vec<f64>,
    /// Row duals, nonnegative.
    pub y: Vec<f64>,
    pub value: f64,
}

/// `a` is row-major with `rows` rows of `n` entries.
pub(crate) fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpOptimum, String> {
    let n = c.len();
    let rows = b.len();
    if a.len() != rows * n {
        return Err(format!("constraint matrix has {} entries, expected {}", a.len(), rows * n));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err("right-hand side must be nonnegative".into());
    }
    let width = n + rows + 1;
    let rhs = n + rows;
    let mut t = vec![0.0; rows * width];
    for i in 0..rows {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i * n..(i + 1) * n]);
        row[n + i] = 1.0;
        row[rhs] = b[i];
    }
    // Reduced profits c_j - c_B B^{-1} A_j, and minus the objective value.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let scale = c.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let max_iter = 50 * (rows + n) + 1000;
    for _ in 0..max_iter {
        let Some(q) = (0..n + rows).find(|&j| obj[j] > EPS * scale) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i * width + rhs];
                }
            }
            let y = (0..rows).map(|i| (-obj[n + i]).max(0.0)).collect();
            return Ok(LpOptimum { x, y, value: -obj[rhs] });
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let aiq = t[i * width + q];
            if aiq > EPS {
                let ratio = t[i * width + rhs] / aiq;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-12 * best.abs().max(1.0)
                            || (ratio <= best + 1e-12 * best.abs().max(1.0) && basis[i] < basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err("problem is unbounded".into());
        };
        pivot(&mut t, &mut obj, width, rows, r, q);
        basis[r] = q;
    }
    Err(format!("no convergence after {max_iter} pivots"))
}

fn pivot(t: &mut [f64], obj: &mut [f64], width: usize, rows: usize, r: usize, q: usize) {
    let p = t[r * width + q];
    let (before, rest) = t.split_at_mut(r * width);
    let (prow, after) = rest.split_at_mut(width);
    for v in prow.iter_mut() {
        *v /= p;
    }
    prow[q] = 1.0;
    let eliminate = |row: &mut [f64]| {
        let f = row[q];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            row[q] = 0.0;
        }
    };
    before.chunks_exact_mut(width).for_each(eliminate);
    after.chunks_exact_mut(width).for_each(eliminate);
    debug_assert_eq!(before.len() / width + 1 + after.len() / width, rows);
    let f = obj[q];
    for (v, pv) in obj.iter_mut().zip(prow.iter()) {
        *v -= f * pv;
    }
    obj[q] = 0.0;
}
