//! Per-round CSV logs and summary statistics.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::policy::EpisodeLog;

/// Formats `x` with 9 significant digits, `%.9g` style.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "phase", "arm", "reward"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|j| format!("v_{j}")));
    h.extend((1..=d).map(|j| format!("theta_{j}")));
    h.push("theta_dummy".into());
    h.push("cum_reward".into());
    h.extend((1..=d).map(|j| format!("budget_left_{j}")));
    h
}

/// Writes one row per played round.
pub fn write_episode_csv<W: Write>(log: &EpisodeLog, out: W) -> Result<()> {
    let d = log.d();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(d))?;
    let mut cum = 0.0;
    let mut left = vec![log.budget; d];
    for r in &log.records {
        cum += r.reward;
        for (l, v) in left.iter_mut().zip(&r.consumption) {
            *l -= v;
        }
        let mut row = vec![r.t.to_string(), r.phase.as_str().to_string(), r.arm.to_string(), sig9(r.reward)];
        row.extend(r.consumption.iter().map(|&v| sig9(v)));
        row.extend(r.theta.active.iter().map(|&v| sig9(v)));
        row.push(sig9(r.theta.dummy));
        row.push(sig9(cum));
        row.extend(left.iter().map(|&v| sig9(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// Linear-interpolation quantiles of `values`.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75) }
    }
}

/// `q`-quantile of sorted data, interpolating between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    Quartiles::of(values).median
}
