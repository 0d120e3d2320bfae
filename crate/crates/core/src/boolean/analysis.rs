use serde::Serialize;

use super::function::BooleanFunction;
use crate::bits::{Configuration, SubsetMask};
use crate::error::{invalid, probability, Result};
use crate::rng;

/// Exact influences of a tabulated function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceReport {
    /// `I_i = P(f(ω) ≠ f(ω with bit i flipped))`.
    pub influences: Vec<f64>,
    /// `Σ I_i`.
    pub total: f64,
    /// `II = Σ I_i²`.
    pub sum_of_squares: f64,
    /// Edge boundary of `{f = +1}` in the hypercube; equals `2^{n−1} Σ I_i`.
    pub edge_boundary: u64,
    /// Pivotal input pairs per bit, counted once per hypercube edge.
    pub pivotal_edges: Vec<u64>,
}

pub fn influences(f: &BooleanFunction) -> Result<InfluenceReport> {
    let t = f.table_for("influences")?;
    let n = f.n();
    let mut pivotal_edges = vec![0u64; n];
    for (i, count) in pivotal_edges.iter_mut().enumerate() {
        let bit = 1usize << i;
        *count = (0..t.len())
            .filter(|&m| m & bit == 0 && t[m] != t[m | bit])
            .count() as u64;
    }
    let half = (t.len() / 2) as f64;
    let influences: Vec<f64> = pivotal_edges.iter().map(|&c| c as f64 / half).collect();
    Ok(InfluenceReport {
        total: influences.iter().sum(),
        sum_of_squares: influences.iter().map(|x| x * x).sum(),
        edge_boundary: pivotal_edges.iter().sum(),
        influences,
        pivotal_edges,
    })
}

/// Monte Carlo influences for predicate-form functions: `(estimate, standard error)` per bit.
pub fn estimate_influences(f: &BooleanFunction, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(invalid("influence estimation needs at least 2 samples"));
    }
    let n = f.n();
    let mut hits = vec![0u64; n];
    for s in 0..samples {
        let mut r = rng::stream(seed, s as u64);
        let mut w = Configuration::uniform(n, &mut r)?;
        let base = f.eval(&w);
        for (i, h) in hits.iter_mut().enumerate() {
            let old = w.get(i);
            w.set(i, !old);
            if f.eval(&w) != base {
                *h += 1;
            }
            w.set(i, old);
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / samples as f64;
            (p, (p * (1.0 - p) / (samples - 1) as f64).sqrt())
        })
        .collect())
}

/// `true` iff `f(ω) ≤ f(ω ∨ e_i)` for every `ω` and `i`.
pub fn is_monotone(f: &BooleanFunction) -> Result<bool> {
    let t = f.table_for("is_monotone")?;
    for i in 0..f.n() {
        let bit = 1usize << i;
        if (0..t.len()).any(|m| m & bit == 0 && t[m] > t[m | bit]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Probability that a point set is jointly pivotal, as an exact count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointPivotality {
    /// Complementary assignments under which the induced function depends on every point.
    pub count: u64,
    /// `2^{n − |P|}`.
    pub total: u64,
    pub probability: f64,
}

/// Over uniform assignments of the bits outside `points`, the probability that
/// the induced function of the points depends on all of them.
pub fn jointly_pivotal(f: &BooleanFunction, points: &SubsetMask) -> Result<JointPivotality> {
    let t = f.table_for("jointly_pivotal")?;
    points.check_width(f.n())?;
    if points.is_empty() {
        return Err(invalid("jointly_pivotal needs a nonempty point set"));
    }
    let pmask = points.mask().expect("tabulated width") as usize;
    let comp = (t.len() - 1) & !pmask;
    let pts: Vec<usize> = points.indices().collect();
    let k = pts.len();
    let deposit = |x: usize| -> usize {
        pts.iter()
            .enumerate()
            .filter(|(j, _)| x >> j & 1 == 1)
            .fold(0, |acc, (_, &p)| acc | 1 << p)
    };
    let spread: Vec<usize> = (0..1usize << k).map(deposit).collect();

    let mut count = 0u64;
    let mut total = 0u64;
    let mut c = 0usize;
    loop {
        total += 1;
        let depends_on_all = pts.iter().all(|&p| {
            let bit = 1usize << p;
            spread.iter().any(|&s| s & bit == 0 && t[c | s] != t[c | s | bit])
        });
        if depends_on_all {
            count += 1;
        }
        // next subset of the complement
        c = c.wrapping_sub(comp) & comp;
        if c == 0 {
            break;
        }
    }
    Ok(JointPivotality {
        count,
        total,
        probability: count as f64 / total as f64,
    })
}

/// `E_{π_p}[f] = Σ_ω f(ω) p^{|ω|} (1−p)^{n−|ω|}`.
pub fn bias_profile(f: &BooleanFunction, p: f64) -> Result<f64> {
    probability("p", p)?;
    let t = f.table_for("bias_profile")?;
    let n = f.n();
    let mut by_level = vec![0i64; n + 1];
    for (m, &v) in t.iter().enumerate() {
        by_level[m.count_ones() as usize] += v as i64;
    }
    Ok(by_level
        .iter()
        .enumerate()
        .map(|(k, &s)| s as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum())
}
