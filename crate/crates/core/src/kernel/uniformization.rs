use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use super::generator::LevelGenerator;
use crate::error::{nonnegative_time, Result};

/// Poisson tail mass left out of the uniformization series.
pub const TAIL_MASS: f64 = 1e-13;

/// Weights `P(Poisson(mean) = m)` for `m = 0, 1, …` until the remaining tail
/// is below [`TAIL_MASS`]. Built by ratio recurrence outward from the mode,
/// so large means neither underflow nor accumulate rounding, then normalized.
pub(crate) fn poisson_weights(mean: f64) -> Vec<f64> {
    if mean == 0.0 {
        return vec![1.0];
    }
    // relative to the mode weight, which is at least ~1/(3√mean)
    let cutoff = TAIL_MASS * 1e-6 / (3.0 * mean.sqrt() + 1.0);
    let mode = mean.floor() as usize;
    let mut below = Vec::with_capacity(mode);
    let mut w = 1.0;
    for m in (1..=mode).rev() {
        w *= m as f64 / mean;
        below.push(w);
    }
    below.reverse();
    let mut out = below;
    out.push(1.0);
    let mut w = 1.0;
    let mut m = mode;
    loop {
        w *= mean / (m + 1) as f64;
        if w < cutoff {
            break;
        }
        out.push(w);
        m += 1;
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// `P_t = exp(t L)` on one level, as a dense matrix in rank order.
#[derive(Clone, Debug)]
pub struct LevelKernel {
    pub level: usize,
    pub time: f64,
    pub states: Vec<u64>,
    pub matrix: DMatrix<f64>,
}

/// Dense `P_t` by uniformization: with `Λ` the largest exit rate and
/// `J = I + L/Λ`, `P_t = Σ_m P(Poisson(Λt) = m) J^m`. Every term is
/// stochastic and nonnegative, so the sum is too, up to the dropped tail.
pub fn kernel_at(gen: &LevelGenerator, t: f64) -> Result<LevelKernel> {
    nonnegative_time(t)?;
    gen.check_dense("dense kernel", gen.caps().dense_states)?;
    let m = gen.len();
    let lambda = gen.max_exit_rate();
    let mut acc = DMatrix::<f64>::zeros(m, m);
    if lambda == 0.0 || t == 0.0 {
        acc.fill_with_identity();
    } else {
        let weights = poisson_weights(lambda * t);
        let mut cur = DMatrix::<f64>::identity(m, m);
        let mut next = DMatrix::<f64>::zeros(m, m);
        for (step, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                for (a, c) in acc.as_mut_slice().iter_mut().zip(cur.as_slice()) {
                    *a += w * c;
                }
            }
            if step + 1 < weights.len() {
                for (src, dst) in cur.as_slice().chunks_exact(m).zip(next.as_mut_slice().chunks_exact_mut(m)) {
                    gen.apply_jump(lambda, src, dst);
                }
                std::mem::swap(&mut cur, &mut next);
            }
        }
    }
    Ok(LevelKernel {
        level: gen.level(),
        time: t,
        states: gen.states().to_vec(),
        matrix: acc,
    })
}

/// `P_t v` for one level without materializing `P_t`.
pub fn kernel_apply(gen: &LevelGenerator, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    nonnegative_time(t)?;
    assert_eq!(v.len(), gen.len(), "vector length must match the level size");
    let lambda = gen.max_exit_rate();
    if lambda == 0.0 || t == 0.0 {
        return Ok(v.to_vec());
    }
    let weights = poisson_weights(lambda * t);
    let mut acc = vec![0.0; v.len()];
    let mut cur = v.to_vec();
    let mut next = vec![0.0; v.len()];
    for (step, &w) in weights.iter().enumerate() {
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += w * c;
        }
        if step + 1 < weights.len() {
            gen.apply_jump(lambda, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(acc)
}

impl LevelKernel {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `P_t(S, S′)` by mask; zero for masks not on this level.
    pub fn entry(&self, from: u64, to: u64) -> f64 {
        match (self.states.binary_search(&from), self.states.binary_search(&to)) {
            (Ok(i), Ok(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    /// `max |P − Pᵀ|`.
    pub fn symmetry_error(&self) -> f64 {
        let m = self.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// `max_i |Σ_j P(i, j) − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.len()).map(|i| (self.matrix.row(i).sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Smallest entry; nonnegative up to rounding.
    pub fn min_entry(&self) -> f64 {
        self.matrix.min()
    }

    /// Eigenvalues of the symmetrized kernel, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Nonzero entries as CSV `from,to,probability` (masks in hex).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "from,to,probability")?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let p = self.matrix[(i, j)];
                if p != 0.0 {
                    writeln!(w, "{:#x},{:#x},{p:e}", self.states[i], self.states[j])?;
                }
            }
        }
        Ok(())
    }
}
