use std::time::Instant;

use serde::Serialize;

use super::coarse::CoarseMajority;
use super::lattice::LatticePatch;
use crate::bits::{Configuration, SubsetMask};
use crate::boolean::{BooleanFunction, FunctionSpec};
use crate::dynamics::{count_switches, DynamicsGraph, EdgeSet, PathSampler, RangeGeometry};
use crate::error::{invalid, nonnegative_time, Error, Result};
use crate::estimators::{
    check_samples, estimate_exclusion_correlation, estimate_noise_correlation, pair_estimate, replica_moments, EstimatorResult,
};
use crate::percolation::PatchShape;
use crate::rng::derive_seed;

fn bernoulli_result(m: crate::stats::Moments, seed: u64, start: Instant) -> EstimatorResult {
    EstimatorResult {
        estimate: m.mean,
        stderr: m.stderr(),
        samples: m.count as usize,
        seed,
        naive_estimate: m.mean,
        wall_time: start.elapsed(),
    }
}

/// Monte Carlo probability of an open left-right crossing of the `side × side`
/// rhombus at `p = 1/2`.
pub fn rhombus_crossing_probability(side: usize, samples: usize, seed: u64) -> Result<EstimatorResult> {
    check_samples(samples)?;
    let patch = LatticePatch::rhombus(side)?;
    let v = patch.site_count();
    let start = Instant::now();
    let [m] = replica_moments(samples, seed, |r| {
        let w = Configuration::uniform(v, r).expect("positive width");
        [if patch.crossing_unchecked(&w) { 1.0 } else { 0.0 }]
    });
    Ok(bernoulli_result(m, seed, start))
}

fn rhombus_function(side: usize) -> Result<BooleanFunction> {
    FunctionSpec::Crossing {
        shape: PatchShape::Rhombus { side },
    }
    .build()
}

/// Crossing correlation of the `side × side` rhombus under exclusion on the
/// complete graph over its sites.
pub fn complete_crossing_correlation(side: usize, t: f64, samples: usize, seed: u64) -> Result<EstimatorResult> {
    let f = rhombus_function(side)?;
    let g = DynamicsGraph::complete(f.n())?;
    estimate_exclusion_correlation(&f, &g, t, samples, seed)
}

/// Mean number of sign changes of the rhombus crossing during `[0, horizon]`
/// under complete-graph exclusion, from `trajectories` independent runs.
pub fn complete_switch_counts(side: usize, horizon: f64, trajectories: usize, seed: u64) -> Result<EstimatorResult> {
    check_samples(trajectories)?;
    nonnegative_time(horizon)?;
    let f = rhombus_function(side)?;
    let g = DynamicsGraph::complete(f.n())?;
    let start = Instant::now();
    let [m] = replica_moments(trajectories, seed, |r| {
        [count_switches(&f, &g, horizon, r).expect("checked").switches as f64]
    });
    Ok(bernoulli_result(m, seed, start))
}

/// One row of the medium-range experiment.
#[derive(Clone, Debug, Serialize)]
pub struct MediumRangeRow {
    pub n: usize,
    pub alpha: f64,
    pub time: f64,
    pub radius: f64,
    pub padding: usize,
    pub sites: usize,
    /// Crossing correlation under the medium-range dynamics.
    pub exclusion: EstimatorResult,
    /// Crossing correlation under independent resampling at `ε = 1 − e^{−t}`.
    pub baseline: EstimatorResult,
}

/// Default padding on each side: `⌈2 n^α⌉`.
pub fn default_padding(n: usize, alpha: f64) -> usize {
    (2.0 * (n as f64).powf(alpha)).ceil() as usize
}

/// Crossing correlation of the `n × n` rhombus embedded in a larger rhombus
/// padded by `padding` sites on every side, with all pairs within `n^α`
/// exchanging at rate `n^{−2α}` over the padded patch.
pub fn medium_range_correlation(
    n: usize,
    alpha: f64,
    t: f64,
    padding: usize,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    nonnegative_time(t)?;
    if n < 2 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("medium range needs n >= 2 and alpha in (0, 1), got n={n} alpha={alpha}")));
    }
    let width = n + 2 * padding;
    let geometry = RangeGeometry::new(width, width, (n as f64).powf(alpha))?;
    let window: Vec<usize> = (0..n * n)
        .map(|k| geometry.site((padding + k % n) as i32, (padding + k / n) as i32).expect("inside"))
        .collect();
    let g = DynamicsGraph::range(geometry, (n as f64).powf(-2.0 * alpha))?;
    let sampler = PathSampler::new(&g)?;
    let patch = LatticePatch::rhombus(n)?;
    let sites = g.vertices();
    pair_estimate(samples, seed, |r| {
        let w0 = Configuration::uniform(sites, r).expect("positive width");
        let mut w = w0.clone();
        sampler.for_each_event(t, r, |e| w.swap(e.u as usize, e.v as usize));
        let y = if patch.crossing_with(|s| w0.get(window[s])) { 1.0 } else { -1.0 };
        let v = if patch.crossing_with(|s| w.get(window[s])) { 1.0 } else { -1.0 };
        (y * v, y, v)
    })
}

/// Medium-range and independent-resampling crossing correlations for each `n`.
/// Row `k` uses seeds derived from `(seed, 2k)` and `(seed, 2k + 1)`.
pub fn medium_range_experiment(
    sizes: &[usize],
    alpha: f64,
    t: f64,
    samples: usize,
    seed: u64,
    padding: Option<usize>,
) -> Result<Vec<MediumRangeRow>> {
    if sizes.is_empty() {
        return Err(invalid("medium-range experiment needs at least one size"));
    }
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let pad = padding.unwrap_or_else(|| default_padding(n, alpha));
            let exclusion = medium_range_correlation(n, alpha, t, pad, samples, derive_seed(seed, 2 * k as u64))?;
            let eps = 1.0 - (-t).exp();
            let baseline = estimate_noise_correlation(&rhombus_function(n)?, eps, samples, derive_seed(seed, 2 * k as u64 + 1))?;
            Ok(MediumRangeRow {
                n,
                alpha,
                time: t,
                radius: (n as f64).powf(alpha),
                padding: pad,
                sites: (n + 2 * pad).pow(2),
                exclusion,
                baseline,
            })
        })
        .collect()
}

/// An axis-aligned square of axial coordinates `[i0, i0 + side) × [j0, j0 + side)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxialSquare {
    pub i0: i32,
    pub j0: i32,
    pub side: i32,
}

impl AxialSquare {
    pub fn contains(&self, (i, j): (i32, i32)) -> bool {
        (self.i0..self.i0 + self.side).contains(&i) && (self.j0..self.j0 + self.side).contains(&j)
    }

    /// The concentric square of twice the side.
    pub fn doubled(&self) -> Self {
        let h = self.side / 2;
        Self {
            i0: self.i0 - h,
            j0: self.j0 - h,
            side: 2 * self.side,
        }
    }

    /// Sites of the geometry inside the square.
    pub fn mask(&self, geometry: &RangeGeometry) -> SubsetMask {
        let n = geometry.sites();
        SubsetMask::from_indices(n, (0..n).filter(|&s| self.contains(geometry.coords(s)))).expect("indices in range")
    }
}

fn range_geometry(g: &DynamicsGraph) -> Result<&RangeGeometry> {
    match g.edge_set() {
        EdgeSet::Range { geometry, .. } => Ok(geometry),
        _ => Err(invalid("this experiment needs a medium-range graph")),
    }
}

/// Mean of `N_t(E, F)` over independent paths and `c = mean · n^{2α} / (|E| |F|)`.
#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub mean: EstimatorResult,
    pub e_size: usize,
    pub f_size: usize,
    pub fitted_constant: f64,
}

/// Empirical first moment of `|{x ∈ E : π_t(x) ∈ F}|` under `g`; the fitted
/// constant divides by the largest edge rate (`n^{−2α}` for medium range).
pub fn transfer_moment(
    g: &DynamicsGraph,
    e: &SubsetMask,
    f: &SubsetMask,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<TransferReport> {
    check_samples(samples)?;
    nonnegative_time(t)?;
    e.check_width(g.vertices())?;
    f.check_width(g.vertices())?;
    if !e.is_disjoint(f)? {
        return Err(invalid("transfer count needs disjoint sets"));
    }
    let sampler = PathSampler::new(g)?;
    let start = Instant::now();
    let tagged = e.indicator();
    let targets: Vec<usize> = f.indices().collect();
    let [m] = replica_moments(samples, seed, |r| {
        let mut w = tagged.clone();
        sampler.for_each_event(t, r, |ev| w.swap(ev.u as usize, ev.v as usize));
        [targets.iter().filter(|&&x| w.get(x)).count() as f64]
    });
    let rate = match g.edge_set() {
        EdgeSet::Range { rate, .. } | EdgeSet::Complete { rate } => *rate,
        EdgeSet::Explicit(list) => list.iter().map(|e| e.rate).fold(0.0, f64::max),
    };
    let (e_size, f_size) = (e.count(), f.count());
    Ok(TransferReport {
        fitted_constant: m.mean / (rate * (e_size * f_size) as f64),
        mean: bernoulli_result(m, seed, start),
        e_size,
        f_size,
    })
}

/// Probability that some point of `S ⊆ Q` leaves `2Q` by time `t`.
pub fn travel_check(
    g: &DynamicsGraph,
    q: AxialSquare,
    s: &SubsetMask,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    check_samples(samples)?;
    nonnegative_time(t)?;
    let geometry = range_geometry(g)?;
    s.check_width(g.vertices())?;
    if !s.indices().all(|x| q.contains(geometry.coords(x))) {
        return Err(Error::OutOfRange {
            what: "travel set",
            detail: "S must lie inside Q".into(),
        });
    }
    let outside: Vec<usize> = q.doubled().mask(geometry).complement().indices().collect();
    let sampler = PathSampler::new(g)?;
    let tagged = s.indicator();
    let start = Instant::now();
    let [m] = replica_moments(samples, seed, |r| {
        let mut w = tagged.clone();
        sampler.for_each_event(t, r, |ev| w.swap(ev.u as usize, ev.v as usize));
        [if outside.iter().any(|&x| w.get(x)) { 1.0 } else { 0.0 }]
    });
    Ok(bernoulli_result(m, seed, start))
}

/// `P(g_B(η_0) ≠ g_B(η_t))` for the central subbox `B` of the coarse-majority
/// box under nearest-neighbour exclusion on the `n × n` square grid.
pub fn subbox_flip_probability(n: usize, alpha: f64, t: f64, samples: usize, seed: u64) -> Result<EstimatorResult> {
    check_samples(samples)?;
    nonnegative_time(t)?;
    let coarse = CoarseMajority::new(n, alpha)?;
    let g = DynamicsGraph::grid2d(n)?;
    let sampler = PathSampler::new(&g)?;
    let centre = coarse.coarse_width() / 2;
    let start = Instant::now();
    let [m] = replica_moments(samples, seed, |r| {
        let w0 = Configuration::uniform(n * n, r).expect("positive width");
        let mut w = w0.clone();
        sampler.for_each_event(t, r, |e| w.swap(e.u as usize, e.v as usize));
        let flipped = coarse.subbox_open(&w0, centre, centre) != coarse.subbox_open(&w, centre, centre);
        [if flipped { 1.0 } else { 0.0 }]
    });
    Ok(bernoulli_result(m, seed, start))
}
