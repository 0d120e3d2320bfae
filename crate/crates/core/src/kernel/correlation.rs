use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{check_spectrum, level_vector};
use super::generator::{level_generator_with, KernelCaps};
use super::uniformization::{kernel_apply, kernel_at};
use crate::dynamics::DynamicsGraph;
use crate::error::{nonnegative_time, Result};
use crate::spectral::Spectrum;

fn level_quadratic_forms(
    sp: &Spectrum,
    g: &DynamicsGraph,
    t: f64,
    caps: KernelCaps,
    absolute: bool,
) -> Result<f64> {
    check_spectrum(sp, g)?;
    nonnegative_time(t)?;
    let n = sp.n();
    let energies = sp.level_energies();
    let parts: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            if energies[k] == 0.0 {
                return Ok(0.0);
            }
            let gen = level_generator_with(g, k, caps)?;
            let mut v = level_vector(sp, &gen);
            if absolute {
                v.iter_mut().for_each(|c| *c = c.abs());
            }
            let pv = kernel_apply(&gen, t, &v)?;
            Ok(v.iter().zip(&pv).map(|(a, b)| a * b).sum())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// `N(f, t) = E[f(η_0) f(η_t)] − E[f]² = Σ_{k≥1} v_kᵀ P_t^{(k)} v_k`, where
/// `v_k` holds the level-`k` Fourier coefficients.
pub fn exact_exclusion_correlation(sp: &Spectrum, g: &DynamicsGraph, t: f64) -> Result<f64> {
    level_quadratic_forms(sp, g, t, KernelCaps::default(), false)
}

pub fn exact_exclusion_correlation_with(sp: &Spectrum, g: &DynamicsGraph, t: f64, caps: KernelCaps) -> Result<f64> {
    level_quadratic_forms(sp, g, t, caps, false)
}

/// `Σ_{S≠∅} |f̂(S)| Σ_{S′} |f̂(S′)| P_t(S, S′)`.
pub fn exact_absolute_correlation(sp: &Spectrum, g: &DynamicsGraph, t: f64) -> Result<f64> {
    level_quadratic_forms(sp, g, t, KernelCaps::default(), true)
}

pub fn exact_absolute_correlation_with(sp: &Spectrum, g: &DynamicsGraph, t: f64, caps: KernelCaps) -> Result<f64> {
    level_quadratic_forms(sp, g, t, caps, true)
}

/// The two quantities whose joint vanishing separates the laws of `f` at
/// times `0` and `t`, for a family `A` of nonempty masks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityReport {
    pub time: f64,
    /// `ν(Aᶜ) = Σ_{S ∉ A ∪ {∅}} f̂(S)²`.
    pub outside_mass: f64,
    /// `max_{S ∈ A} P_t(S, A)`; 0 when `A` is empty.
    pub max_return: f64,
    /// A maximizing mask, if `A` is nonempty.
    pub argmax: Option<u64>,
    /// `Σ_{S, S′ ∈ A} |f̂(S) f̂(S′)| P_t(S, S′)`.
    pub restricted_absolute: f64,
    /// Number of masks in `A`.
    pub members: usize,
}

/// Evaluate the diagnostic for `A = {S ≠ ∅ : in_a(S)}`.
pub fn singularity_diagnostic(
    sp: &Spectrum,
    g: &DynamicsGraph,
    t: f64,
    in_a: impl Fn(u64) -> bool + Sync,
) -> Result<SingularityReport> {
    singularity_diagnostic_with(sp, g, t, in_a, KernelCaps::default())
}

pub fn singularity_diagnostic_with(
    sp: &Spectrum,
    g: &DynamicsGraph,
    t: f64,
    in_a: impl Fn(u64) -> bool + Sync,
    caps: KernelCaps,
) -> Result<SingularityReport> {
    check_spectrum(sp, g)?;
    nonnegative_time(t)?;
    let n = sp.n();
    let outside_mass = (1..1u64 << n)
        .filter(|&s| !in_a(s))
        .map(|s| sp.coefficient(s).powi(2))
        .sum();

    struct Level {
        best: Option<(f64, u64)>,
        restricted: f64,
        members: usize,
    }
    let levels: Vec<Level> = (1..=n)
        .into_par_iter()
        .map(|k| -> Result<Level> {
            let gen = level_generator_with(g, k, caps)?;
            let member: Vec<usize> = (0..gen.len()).filter(|&i| in_a(gen.states()[i])).collect();
            if member.is_empty() {
                return Ok(Level {
                    best: None,
                    restricted: 0.0,
                    members: 0,
                });
            }
            let p = kernel_at(&gen, t)?;
            let mut best: Option<(f64, u64)> = None;
            let mut restricted = 0.0;
            for &i in &member {
                let s = gen.states()[i];
                let ret: f64 = member.iter().map(|&j| p.matrix[(i, j)]).sum();
                if best.is_none_or(|(b, _)| ret > b) {
                    best = Some((ret, s));
                }
                let ci = sp.coefficient(s).abs();
                restricted += member
                    .iter()
                    .map(|&j| ci * sp.coefficient(gen.states()[j]).abs() * p.matrix[(i, j)])
                    .sum::<f64>();
            }
            Ok(Level {
                best,
                restricted,
                members: member.len(),
            })
        })
        .collect::<Result<_>>()?;

    let best = levels
        .iter()
        .filter_map(|l| l.best)
        .fold(None, |acc: Option<(f64, u64)>, b| match acc {
            Some(a) if a.0 >= b.0 => Some(a),
            _ => Some(b),
        });
    Ok(SingularityReport {
        time: t,
        outside_mass,
        max_return: best.map_or(0.0, |b| b.0),
        argmax: best.map(|b| b.1),
        restricted_absolute: levels.iter().map(|l| l.restricted).sum(),
        members: levels.iter().map(|l| l.members).sum(),
    })
}
