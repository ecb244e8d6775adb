//! Plain-text packing instances.
//!
//! ```text
//! T0 K d scale
//! cap_1 .. cap_d
//! reward c_1 .. c_d        # one line per option, K + 1 per block, no-op first
//! ```
//!
//! Numbers use the shortest representation that round-trips. Blank lines and
//! `#` comments are ignored by the parser.

use std::fmt::Write as _;

use super::PackingInstance;
use crate::error::{Error, Result};

pub(super) fn write_instance(inst: &PackingInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {} {}", inst.num_blocks(), inst.arms(), inst.d(), inst.scale());
    let _ = writeln!(out, "{}", join(inst.caps().iter().copied()));
    let zeros = vec![0.0; inst.d()];
    for i in 0..inst.num_blocks() {
        for a in 0..=inst.arms() {
            let cons = inst.consumption(i, a).unwrap_or(&zeros);
            let _ = writeln!(out, "{}", join(std::iter::once(inst.reward(i, a)).chain(cons.iter().copied())));
        }
    }
    out
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

/// Parses the format written by [`PackingInstance::to_text`].
pub fn parse_instance(text: &str) -> Result<PackingInstance> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let bad = |msg: &str| Error::InvalidInput(format!("packing instance: {msg}"));
    let numbers = |line: &str| -> Result<Vec<f64>> {
        line.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number `{t}`"))))
            .collect()
    };

    let header: Vec<&str> = lines.next().ok_or_else(|| bad("missing header"))?.split_whitespace().collect();
    if header.len() != 4 {
        return Err(bad("header must be `T0 K d scale`"));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad integer `{s}`")));
    let blocks = parse_usize(header[0])?;
    let arms = parse_usize(header[1])?;
    let d = parse_usize(header[2])?;
    let scale: f64 = header[3].parse().map_err(|_| bad("bad scale"))?;
    let caps = numbers(lines.next().ok_or_else(|| bad("missing caps"))?)?;
    let mut inst = PackingInstance::new(arms, d, scale, caps)?;
    for _ in 0..blocks {
        let mut rewards = Vec::with_capacity(arms);
        let mut cons = Vec::with_capacity(arms * d);
        for a in 0..=arms {
            let row = numbers(lines.next().ok_or_else(|| bad("truncated block"))?)?;
            if row.len() != d + 1 {
                return Err(bad("option line must hold reward and d consumptions"));
            }
            if a == 0 {
                if row.iter().any(|&v| v != 0.0) {
                    return Err(bad("option 0 must be the zero no-op"));
                }
            } else {
                rewards.push(row[0]);
                cons.extend_from_slice(&row[1..]);
            }
        }
        inst.push_block(&rewards, &cons)?;
    }
    if lines.next().is_some() {
        return Err(bad("trailing data"));
    }
    Ok(inst)
}
