use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsGraph;
use crate::error::{Error, Result};

/// State-count limits for the exact computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCaps {
    /// Largest level handled at all (sparse generator, vector action).
    pub kernel_states: usize,
    /// Largest level for which a dense `P_t` is materialized.
    pub dense_states: usize,
    /// Largest level passed to the dense symmetric eigensolver.
    pub eigen_states: usize,
}

impl Default for KernelCaps {
    fn default() -> Self {
        Self {
            kernel_states: 20_000,
            dense_states: 4096,
            eigen_states: 5000,
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

/// All `k`-subsets of `0..n` as masks, in increasing numeric order.
pub(crate) fn level_states(n: usize, k: usize) -> Vec<u64> {
    let count = binomial(n, k);
    let mut out = Vec::with_capacity(count);
    let mut s: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    for idx in 0..count {
        out.push(s);
        if idx + 1 < count {
            // Gosper's hack: next larger mask with the same popcount
            let c = s & s.wrapping_neg();
            let r = s + c;
            s = (((r ^ s) >> 2) / c) | r;
        }
    }
    out
}

/// The generator of the exclusion process restricted to `k`-subsets:
/// `L(S, S △ {x, y}) = α({x, y})` when exactly one of `x, y` lies in `S`,
/// diagonal the negated row sum. States are the `k`-subsets in increasing
/// mask order; the rank of a state is its colex rank.
#[derive(Clone, Debug)]
pub struct LevelGenerator {
    n: usize,
    k: usize,
    caps: KernelCaps,
    states: Vec<u64>,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    choose: Vec<Vec<usize>>,
}

pub fn level_generator(g: &DynamicsGraph, k: usize) -> Result<LevelGenerator> {
    level_generator_with(g, k, KernelCaps::default())
}

pub fn level_generator_with(g: &DynamicsGraph, k: usize, caps: KernelCaps) -> Result<LevelGenerator> {
    let n = g.vertices();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "level",
            detail: format!("{k} not in 1..={n}"),
        });
    }
    if n > 64 {
        return Err(Error::CapExceeded {
            what: format!("graph with {n} vertices (mask form)"),
            count: n,
            cap: 64,
        });
    }
    let count = binomial(n, k);
    if count > caps.kernel_states {
        return Err(Error::CapExceeded {
            what: format!("level {k} of a {n}-vertex graph"),
            count,
            cap: caps.kernel_states,
        });
    }
    let states = level_states(n, k);
    debug_assert_eq!(states.len(), count);
    let choose: Vec<Vec<usize>> = (0..=n).map(|a| (0..=k).map(|b| binomial(a, b)).collect()).collect();
    let edges: Vec<(u64, f64)> = g.edges().map(|e| ((1u64 << e.u) | (1u64 << e.v), e.rate)).collect();

    let mut gen = LevelGenerator {
        n,
        k,
        caps,
        diag: vec![0.0; count],
        row_ptr: Vec::with_capacity(count + 1),
        cols: Vec::new(),
        vals: Vec::new(),
        states,
        choose,
    };
    gen.row_ptr.push(0);
    let mut row: Vec<(u32, f64)> = Vec::new();
    for i in 0..count {
        let s = gen.states[i];
        row.clear();
        for &(pair, rate) in &edges {
            if (s & pair).count_ones() == 1 {
                let j = gen.rank(s ^ pair).expect("same level");
                row.push((j as u32, rate));
            }
        }
        row.sort_unstable_by_key(|&(j, _)| j);
        let mut total = 0.0;
        for &(j, rate) in row.iter() {
            total += rate;
            if gen.cols.len() > gen.row_ptr[i] && *gen.cols.last().unwrap() == j {
                *gen.vals.last_mut().unwrap() += rate;
            } else {
                gen.cols.push(j);
                gen.vals.push(rate);
            }
        }
        gen.diag[i] = -total;
        gen.row_ptr.push(gen.cols.len());
    }
    Ok(gen)
}

impl LevelGenerator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.k
    }

    pub fn caps(&self) -> KernelCaps {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State masks in rank order.
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Colex rank of a `k`-subset: `Σ_i C(c_i, i+1)` over its sorted elements.
    pub fn rank(&self, mask: u64) -> Option<usize> {
        if mask.count_ones() as usize != self.k || (self.n < 64 && mask >> self.n != 0) {
            return None;
        }
        let mut m = mask;
        let mut r = 0;
        let mut i = 0;
        while m != 0 {
            let c = m.trailing_zeros() as usize;
            r += self.choose[c][i + 1];
            m &= m - 1;
            i += 1;
        }
        Some(r)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i` as `(column, rate)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().map(|&j| j as usize).zip(self.vals[span].iter().copied())
    }

    /// Largest total exit rate, the uniformization rate.
    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(-d))
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut acc = self.diag[i] * x[i];
            for (j, r) in self.row(i) {
                acc += r * x[j];
            }
            y[i] = acc;
        }
    }

    /// `y = (I + L/Λ) x`, one step of the uniformized jump chain.
    pub(crate) fn apply_jump(&self, lambda: f64, x: &[f64], y: &mut [f64]) {
        let inv = 1.0 / lambda;
        for i in 0..self.len() {
            let mut acc = (1.0 + self.diag[i] * inv) * x[i];
            for (j, r) in self.row(i) {
                acc += r * inv * x[j];
            }
            y[i] = acc;
        }
    }

    /// The generator as a dense matrix.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense("dense generator", self.caps.dense_states.max(self.caps.eigen_states))?;
        let m = self.len();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            out[(i, i)] = self.diag[i];
            for (j, r) in self.row(i) {
                out[(i, j)] = r;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_dense(&self, what: &str, cap: usize) -> Result<()> {
        if self.len() > cap {
            Err(Error::CapExceeded {
                what: format!("{what} at level {}", self.k),
                count: self.len(),
                cap,
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Edge;

    #[test]
    fn states_and_ranks() {
        let g = DynamicsGraph::complete(6).unwrap();
        for k in 1..=6 {
            let gen = level_generator(&g, k).unwrap();
            assert_eq!(gen.len(), binomial(6, k));
            let brute: Vec<u64> = (0..64u64).filter(|m| m.count_ones() as usize == k).collect();
            assert_eq!(gen.states(), &brute[..]);
            for (i, &s) in gen.states().iter().enumerate() {
                assert_eq!(gen.rank(s), Some(i));
            }
        }
        assert_eq!(level_states(64, 64), vec![u64::MAX]);
        assert_eq!(level_states(3, 1), vec![1, 2, 4]);
    }

    #[test]
    fn two_vertex_complete_graph() {
        let g = DynamicsGraph::complete(2).unwrap();
        let d = level_generator(&g, 1).unwrap().dense().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[-0.5, 0.5, 0.5, -0.5]));
    }

    #[test]
    fn path_is_tridiagonal() {
        let g = DynamicsGraph::path(3).unwrap();
        let d = level_generator(&g, 1).unwrap().dense().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(3, 3, &[-0.5, 0.5, 0.0, 0.5, -1.0, 0.5, 0.0, 0.5, -0.5]));
    }

    #[test]
    fn rows_sum_to_zero_and_symmetric() {
        let g = DynamicsGraph::from_edges(5, vec![
            Edge { u: 0, v: 1, rate: 0.3 },
            Edge { u: 1, v: 4, rate: 0.2 },
            Edge { u: 2, v: 3, rate: 0.7 },
            Edge { u: 0, v: 3, rate: 0.1 },
        ])
        .unwrap();
        for k in 1..=5 {
            let d = level_generator(&g, k).unwrap().dense().unwrap();
            for i in 0..d.nrows() {
                assert!(d.row(i).sum().abs() < 1e-15);
            }
            assert_eq!(d.transpose(), d);
        }
    }

    #[test]
    fn errors() {
        let g = DynamicsGraph::complete(4).unwrap();
        assert!(level_generator(&g, 0).is_err());
        assert!(level_generator(&g, 5).is_err());
        let caps = KernelCaps {
            kernel_states: 5,
            ..KernelCaps::default()
        };
        assert!(matches!(level_generator_with(&g, 2, caps), Err(Error::CapExceeded { count: 6, cap: 5, .. })));
    }
}
