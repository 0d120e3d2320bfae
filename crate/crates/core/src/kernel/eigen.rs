use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::generator::{level_generator_with, KernelCaps, LevelGenerator};
use crate::dynamics::DynamicsGraph;
use crate::error::{invalid, Error, Result};
use crate::spectral::Spectrum;

/// Rates `λ` within this distance of the threshold count as below it.
pub const RATE_TOLERANCE: f64 = 1e-9;

/// Eigen-decomposition of one level: `E[φ_l(η_0) φ_l(η_t)] = e^{−λ_l t}`.
#[derive(Clone, Debug)]
pub struct LevelEigen {
    pub level: usize,
    /// `λ_l ≥ 0`, ascending.
    pub rates: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `rates`.
    pub vectors: DMatrix<f64>,
}

pub fn level_eigen(gen: &LevelGenerator) -> Result<LevelEigen> {
    gen.check_dense("eigendecomposition", gen.caps().eigen_states)?;
    let eig = SymmetricEigen::new(gen.dense()?);
    let m = gen.len();
    let mut order: Vec<usize> = (0..m).collect();
    let rates_raw: Vec<f64> = eig.eigenvalues.iter().map(|&e| -e).collect();
    order.sort_by(|&a, &b| rates_raw[a].total_cmp(&rates_raw[b]));
    let rates = order.iter().map(|&i| rates_raw[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(LevelEigen {
        level: gen.level(),
        rates,
        vectors,
    })
}

impl LevelEigen {
    /// `Σ_{l : λ_l ≤ c} ⟨v, a_l⟩²`: the squared norm of the projection of `v`
    /// onto the span of eigenvectors with rate at most `c`. Independent of the
    /// basis chosen inside degenerate eigenspaces.
    pub fn mass_below(&self, v: &[f64], c: f64) -> f64 {
        let x = nalgebra::DVector::from_column_slice(v);
        self.rates
            .iter()
            .enumerate()
            .take_while(|(_, &r)| r <= c + RATE_TOLERANCE)
            .map(|(l, _)| self.vectors.column(l).dot(&x).powi(2))
            .sum()
    }

    /// Squared norm of the projection of the normalized uniform vector onto
    /// the rate-zero eigenspace; 1 when the uniform vector is an eigenvector with rate 0.
    pub fn uniform_in_kernel(&self) -> f64 {
        let m = self.rates.len();
        let u = vec![1.0 / (m as f64).sqrt(); m];
        self.mass_below(&u, 0.0)
    }

    /// Rates as CSV `index,rate`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,rate")?;
        for (l, r) in self.rates.iter().enumerate() {
            writeln!(w, "{l},{r:e}")?;
        }
        Ok(())
    }
}

/// Coefficients of `sp` on the states of one level, in rank order.
pub fn level_vector(sp: &Spectrum, gen: &LevelGenerator) -> Vec<f64> {
    gen.states().iter().map(|&s| sp.coefficient(s)).collect()
}

pub(crate) fn check_spectrum(sp: &Spectrum, g: &DynamicsGraph) -> Result<()> {
    if sp.n() != g.vertices() {
        return Err(Error::WidthMismatch {
            expected: g.vertices(),
            found: sp.n(),
        });
    }
    Ok(())
}

/// Low-frequency spectral mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiMass {
    pub threshold: f64,
    /// Over all levels `k ≥ 1` and eigenvectors with rate `≤ threshold`.
    /// Only the global constant (level 0) is left out.
    pub mass: f64,
    /// The same tally with every level's conserved uniform direction removed too.
    pub mass_without_conserved: f64,
    /// Contribution of each level `k = 1..=n` to `mass`.
    pub per_level: Vec<f64>,
}

pub fn phi_mass(sp: &Spectrum, g: &DynamicsGraph, threshold: f64) -> Result<PhiMass> {
    phi_mass_with(sp, g, threshold, KernelCaps::default())
}

pub fn phi_mass_with(sp: &Spectrum, g: &DynamicsGraph, threshold: f64, caps: KernelCaps) -> Result<PhiMass> {
    check_spectrum(sp, g)?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(invalid(format!("rate threshold {threshold} must be nonnegative")));
    }
    let n = sp.n();
    let per: Vec<(f64, f64)> = (1..=n)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let gen = level_generator_with(g, k, caps)?;
            let v = level_vector(sp, &gen);
            if v.iter().all(|&c| c == 0.0) {
                return Ok((0.0, 0.0));
            }
            let conserved = v.iter().sum::<f64>().powi(2) / v.len() as f64;
            let mass = if threshold.is_infinite() {
                v.iter().map(|c| c * c).sum()
            } else {
                level_eigen(&gen)?.mass_below(&v, threshold)
            };
            Ok((mass, conserved))
        })
        .collect::<Result<_>>()?;
    let per_level: Vec<f64> = per.iter().map(|p| p.0).collect();
    let mass = per_level.iter().sum();
    let without: f64 = per.iter().map(|(m, c)| (m - c).max(0.0)).sum();
    Ok(PhiMass {
        threshold,
        mass,
        mass_without_conserved: without,
        per_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::{FunctionSpec, Support};
    use crate::kernel::generator::level_generator;
    use crate::spectral::transform;

    #[test]
    fn two_state_rates() {
        let gen = level_generator(&DynamicsGraph::complete(2).unwrap(), 1).unwrap();
        let e = level_eigen(&gen).unwrap();
        assert!(e.rates[0].abs() < 1e-12);
        assert!((e.rates[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_single_particle_spectrum() {
        let gen = level_generator(&DynamicsGraph::complete(5).unwrap(), 1).unwrap();
        let e = level_eigen(&gen).unwrap();
        assert!(e.rates[0].abs() < 1e-10);
        for r in &e.rates[1..] {
            assert!((r - 1.0).abs() < 1e-10);
        }
        assert!((e.uniform_in_kernel() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let gen = level_generator(&DynamicsGraph::grid2d(3).unwrap(), 2).unwrap();
        let e = level_eigen(&gen).unwrap();
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(gen.len(), gen.len())).amax() < 1e-10);
        assert!(e.rates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn phi_mass_examples() {
        let g = DynamicsGraph::path(6).unwrap();
        let par = transform(&FunctionSpec::Parity { n: 6, support: Support::All }.build().unwrap()).unwrap();
        for c in [0.0, 0.5, 3.0] {
            let pm = phi_mass(&par, &g, c).unwrap();
            assert!((pm.mass - 1.0).abs() < 1e-10);
            assert!(pm.mass_without_conserved.abs() < 1e-10);
        }
        let f = FunctionSpec::Tribes { width: 2, tribes: 3 }.build().unwrap();
        let sp = transform(&f).unwrap();
        let mean = sp.coefficient(0);
        let pm = phi_mass(&sp, &g, f64::INFINITY).unwrap();
        assert!((pm.mass - (1.0 - mean * mean)).abs() < 1e-12);
        let big = phi_mass(&sp, &g, 1e6).unwrap();
        assert!((big.mass - pm.mass).abs() < 1e-10);
        assert!(phi_mass(&sp, &DynamicsGraph::path(5).unwrap(), 1.0).is_err());
    }
}
