//! Monte Carlo estimators of the sensitivity quantities, with standard errors.
//!
//! Replica (or replica pair) `i` draws from `rng::stream(seed, i)`. They are grouped
//! into fixed-size chunks, chunks run on the rayon pool, and chunk moments are
//! merged in chunk order, so every result is bit-identical for a given seed
//! whatever the number of worker threads.

use std::ops::Range;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Configuration;
use crate::boolean::{BooleanFunction, FunctionSpec, ZooOptions};
use crate::dynamics::{snps, snps_mask, swap_bits, DynamicsGraph, GraphFamily, PathSampler};
use crate::error::{invalid, nonnegative_time, probability, Error, Result};
use crate::rng::{self, StreamRng};
use crate::stats::Moments;

/// Replicas used when a caller does not say otherwise.
pub const DEFAULT_SAMPLES: usize = 100_000;

const CHUNK: usize = 1024;

/// A point estimate with its standard error.
#[derive(Clone, Debug, Serialize)]
pub struct EstimatorResult {
    /// Unbiased estimate (split-sample product for correlations).
    pub estimate: f64,
    /// Sample standard deviation over `√(independent terms)`.
    pub stderr: f64,
    /// Replicas consumed.
    pub samples: usize,
    pub seed: u64,
    /// Plug-in estimate `mean(f f_t) − mean(f)²`, biased by `O(1/samples)`.
    pub naive_estimate: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EstimatorResult {
    /// Three standard errors.
    pub fn radius(&self) -> f64 {
        3.0 * self.stderr
    }

    /// Whether `value` lies within three standard errors.
    pub fn covers(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.radius()
    }
}

pub(crate) fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        Err(invalid(format!("need at least 2 samples, got {samples}")))
    } else {
        Ok(())
    }
}

fn chunks(count: usize) -> impl IndexedParallelIterator<Item = Range<usize>> {
    (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(count))
}

/// Fold replica `i` (drawn from `stream(seed, i)`) into a per-chunk
/// accumulator, then combine the chunk accumulators in chunk order.
pub(crate) fn chunked_fold<A: Send>(
    count: usize,
    seed: u64,
    init: impl Fn() -> A + Sync,
    step: impl Fn(&mut A, &mut StreamRng) + Sync,
    combine: impl Fn(&mut A, A),
) -> A {
    let parts: Vec<A> = chunks(count)
        .map(|range| {
            let mut acc = init();
            for i in range {
                step(&mut acc, &mut rng::stream(seed, i as u64));
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in parts {
        combine(&mut total, p);
    }
    total
}

/// Sum of per-replica values, merged deterministically.
pub(crate) fn replica_moments<const K: usize>(
    count: usize,
    seed: u64,
    replica: impl Fn(&mut StreamRng) -> [f64; K] + Sync,
) -> [Moments; K] {
    let parts: Vec<[Moments; K]> = chunks(count)
        .map(|range| {
            let mut acc = [Moments::default(); K];
            for i in range {
                let vals = replica(&mut rng::stream(seed, i as u64));
                for (m, v) in acc.iter_mut().zip(vals) {
                    m.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = [Moments::default(); K];
    for p in &parts {
        for (t, m) in total.iter_mut().zip(p) {
            t.merge(m);
        }
    }
    total
}

/// Split-sample covariance estimate. Each replica returns
/// `(f(ξ) f(ξ′), f(ξ), f(ξ′))` for a stationary pair `(ξ, ξ′)`; two replicas
/// drawn consecutively from stream `p` form pair `p`, contributing
/// `h = (x_a + x_b)/2 − m_a m_b` with `m = (y + w)/2`, so `E[h] = E[x] − E[f]²` exactly.
pub(crate) fn pair_estimate(
    samples: usize,
    seed: u64,
    replica: impl Fn(&mut StreamRng) -> (f64, f64, f64) + Sync,
) -> Result<EstimatorResult> {
    check_samples(samples)?;
    let start = Instant::now();
    let pairs = samples / 2;
    let [h, x, y] = replica_moments(pairs, seed, |r| {
        let (xa, ya, wa) = replica(r);
        let (xb, yb, wb) = replica(r);
        let h = 0.5 * (xa + xb) - 0.25 * (ya + wa) * (yb + wb);
        [h, 0.5 * (xa + xb), 0.5 * (ya + yb)]
    });
    Ok(EstimatorResult {
        estimate: h.mean,
        stderr: h.stderr(),
        samples: 2 * pairs,
        seed,
        naive_estimate: x.mean - y.mean * y.mean,
        wall_time: start.elapsed(),
    })
}

/// How a replica reads `f`: a table lookup on a `u64` mask when possible.
#[derive(Clone, Copy)]
enum Reader<'a> {
    Table(&'a [i8], u64),
    General(&'a BooleanFunction),
}

impl<'a> Reader<'a> {
    fn new(f: &'a BooleanFunction) -> Self {
        match f.table() {
            Some(t) => Reader::Table(t, (1u64 << f.n()) - 1),
            None => Reader::General(f),
        }
    }
}

fn check_graph(f: &BooleanFunction, g: &DynamicsGraph) -> Result<()> {
    if f.n() == g.vertices() {
        Ok(())
    } else {
        Err(Error::WidthMismatch {
            expected: g.vertices(),
            found: f.n(),
        })
    }
}

/// One stationary exclusion pair `(η_0, η_t)`, returning `(f f_t, f(η_0), f(η_t))`.
fn exclusion_replica<'a>(
    f: &'a BooleanFunction,
    sampler: &'a PathSampler,
    t: f64,
) -> impl Fn(&mut StreamRng) -> (f64, f64, f64) + Sync + 'a {
    let reader = Reader::new(f);
    move |r| match reader {
        Reader::Table(table, full) => {
            let m0 = r.random::<u64>() & full;
            let mut m = m0;
            sampler.for_each_event(t, r, |e| m = swap_bits(m, e.u, e.v));
            let (y, w) = (table[m0 as usize] as f64, table[m as usize] as f64);
            (y * w, y, w)
        }
        Reader::General(f) => {
            let w0 = Configuration::uniform(f.n(), r).expect("positive width");
            let mut eta = w0.clone();
            sampler.for_each_event(t, r, |e| eta.swap(e.u as usize, e.v as usize));
            let (y, w) = (f.eval(&w0) as f64, f.eval(&eta) as f64);
            (y * w, y, w)
        }
    }
}

/// `E[f(η_0) f(η_t)] − E[f]²` under the exclusion process on `g`, `η_0` uniform.
pub fn estimate_exclusion_correlation(
    f: &BooleanFunction,
    g: &DynamicsGraph,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    check_graph(f, g)?;
    nonnegative_time(t)?;
    let sampler = PathSampler::new(g)?;
    pair_estimate(samples, seed, exclusion_replica(f, &sampler, t))
}

/// `E[χ_S(η_0) χ_{S′}(η_t)]` under exclusion on `g` (at most 64 vertices).
pub fn estimate_character_correlation(
    g: &DynamicsGraph,
    s: u64,
    s_prime: u64,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    nonnegative_time(t)?;
    check_samples(samples)?;
    let n = g.vertices();
    if n > 64 {
        return Err(invalid("character correlations read configurations as 64-bit masks"));
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    if (s | s_prime) & !full != 0 {
        return Err(invalid(format!("subsets exceed {n} vertices")));
    }
    let sampler = PathSampler::new(g)?;
    let start = Instant::now();
    let chi = |set: u64, m: u64| if (set & m).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    let [m] = replica_moments(samples, seed, |r| {
        let m0 = r.random::<u64>() & full;
        let mut m = m0;
        sampler.for_each_event(t, r, |e| m = swap_bits(m, e.u, e.v));
        [chi(s, m0) * chi(s_prime, m)]
    });
    Ok(EstimatorResult {
        estimate: m.mean,
        stderr: m.stderr(),
        samples,
        seed,
        naive_estimate: m.mean,
        wall_time: start.elapsed(),
    })
}

/// `E[f(ω) f(ω^ε)] − E[f]²` with each bit resampled independently with probability `eps`.
pub fn estimate_noise_correlation(f: &BooleanFunction, eps: f64, samples: usize, seed: u64) -> Result<EstimatorResult> {
    probability("ε", eps)?;
    let reader = Reader::new(f);
    let n = f.n();
    pair_estimate(samples, seed, move |r| match reader {
        Reader::Table(table, full) => {
            let m0 = r.random::<u64>() & full;
            let m1 = snps_mask(m0, n, eps, r);
            let (y, w) = (table[m0 as usize] as f64, table[m1 as usize] as f64);
            (y * w, y, w)
        }
        Reader::General(f) => {
            let w0 = Configuration::uniform(n, r).expect("positive width");
            let w1 = snps(&w0, eps, r).expect("ε checked");
            let (y, w) = (f.eval(&w0) as f64, f.eval(&w1) as f64);
            (y * w, y, w)
        }
    })
}

/// The same covariance as [`estimate_noise_correlation`] at `ε = 1 − e^{−t}`,
/// computed by running the refresh dynamics: every bit carries a rate-1 clock
/// and is replaced by a fair bit when it rings.
pub fn estimate_snps_trajectory_correlation(
    f: &BooleanFunction,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    nonnegative_time(t)?;
    let n = f.n();
    pair_estimate(samples, seed, move |r| {
        let w0 = Configuration::uniform(n, r).expect("positive width");
        let mut w = w0.clone();
        let mut time = 0.0;
        loop {
            let gap: f64 = Exp1.sample(r);
            time += gap / n as f64;
            if time > t {
                break;
            }
            let i = r.random_range(0..n);
            w.set(i, r.random());
        }
        let (y, v) = (f.eval(&w0) as f64, f.eval(&w) as f64);
        (y * v, y, v)
    })
}

/// `P(f(η_0) ≠ f(η_t))`, with its Bernoulli standard error.
pub fn estimate_flip_probability(
    f: &BooleanFunction,
    g: &DynamicsGraph,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    check_graph(f, g)?;
    nonnegative_time(t)?;
    check_samples(samples)?;
    let start = Instant::now();
    let sampler = PathSampler::new(g)?;
    let replica = exclusion_replica(f, &sampler, t);
    let [flip, product] = replica_moments(samples, seed, |r| {
        let (x, _, _) = replica(r);
        [if x < 0.0 { 1.0 } else { 0.0 }, x]
    });
    debug_assert!((product.mean - (1.0 - 2.0 * flip.mean)).abs() < 1e-9);
    Ok(EstimatorResult {
        estimate: flip.mean,
        stderr: flip.stderr(),
        samples,
        seed,
        naive_estimate: flip.mean,
        wall_time: start.elapsed(),
    })
}

/// Spread of the conditional means `E[f(η_t) | η_0]` over draws of `η_0`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalProfile {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    /// Average of the conditional-mean estimates.
    pub mean: f64,
    /// Sample variance of the conditional-mean estimates.
    pub raw_variance: f64,
    /// Average inner-loop sample variance.
    pub inner_variance: f64,
    /// `raw_variance − inner_variance / inner`, an unbiased estimate of
    /// `Var(E[f(η_t) | η_0])`.
    pub debiased_variance: f64,
    pub stderr: f64,
    /// Minimum, quartiles and maximum of the conditional-mean estimates.
    pub quantiles: [f64; 5],
}

/// For `outer` draws of `η_0`, estimate `E[f(η_t) | η_0]` from `inner` fresh
/// paths each. Since `P_t` is a symmetric semigroup,
/// `Var(E[f(η_t) | η_0]) = ⟨f, P_{2t} f⟩ − E[f]²`, the exclusion correlation at time `2t`.
pub fn conditional_mean_profile(
    f: &BooleanFunction,
    g: &DynamicsGraph,
    t: f64,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<ConditionalProfile> {
    check_graph(f, g)?;
    nonnegative_time(t)?;
    if outer < 2 || inner < 2 {
        return Err(invalid(format!("outer and inner sizes must be at least 2, got {outer} and {inner}")));
    }
    let sampler = PathSampler::new(g)?;
    let reader = Reader::new(f);
    let n = f.n();
    let per_outer: Vec<(f64, f64)> = chunks(outer)
        .map(|range| {
            range
                .map(|i| {
                    let r = &mut rng::stream(seed, i as u64);
                    let mut m = Moments::default();
                    match reader {
                        Reader::Table(table, full) => {
                            let m0 = r.random::<u64>() & full;
                            for _ in 0..inner {
                                let mut x = m0;
                                sampler.for_each_event(t, r, |e| x = swap_bits(x, e.u, e.v));
                                m.push(table[x as usize] as f64);
                            }
                        }
                        Reader::General(f) => {
                            let w0 = Configuration::uniform(n, r).expect("positive width");
                            for _ in 0..inner {
                                let mut eta = w0.clone();
                                sampler.for_each_event(t, r, |e| eta.swap(e.u as usize, e.v as usize));
                                m.push(f.eval(&eta) as f64);
                            }
                        }
                    }
                    (m.mean, m.variance())
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();

    let means: Moments = per_outer.iter().map(|p| p.0).collect();
    let inner_var: Moments = per_outer.iter().map(|p| p.1).collect();
    let scale = outer as f64 / (outer - 1) as f64;
    let z: Moments = per_outer
        .iter()
        .map(|&(m, v)| (m - means.mean).powi(2) * scale - v / inner as f64)
        .collect();
    let mut sorted: Vec<f64> = per_outer.iter().map(|p| p.0).collect();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    Ok(ConditionalProfile {
        outer,
        inner,
        seed,
        mean: means.mean,
        raw_variance: means.variance(),
        inner_variance: inner_var.mean,
        debiased_variance: means.variance() - inner_var.mean / inner as f64,
        stderr: z.stderr(),
        quantiles: [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)],
    })
}

/// The dynamics a sweep runs at each size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepDynamics {
    /// Exclusion on the family member with as many vertices as the function has bits.
    Exclusion { graph: GraphFamily, times: Vec<f64> },
    /// Independent resampling at each `ε`.
    Noise { eps: Vec<f64> },
}

/// One grid point of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub family: String,
    /// Size parameter handed to [`FunctionSpec::resized`].
    pub n: usize,
    pub bits: usize,
    pub dynamics: String,
    /// `"t"` or `"eps"`.
    pub parameter: &'static str,
    pub value: f64,
    #[serde(flatten)]
    pub result: EstimatorResult,
}

/// Full factorial sweep over sizes and times (or noise levels). Grid point `k`
/// (row order: sizes outer, values inner) uses seed `derive_seed(seed, k)`.
pub fn sensitivity_sweep(
    spec: &FunctionSpec,
    sizes: &[usize],
    dynamics: &SweepDynamics,
    samples: usize,
    seed: u64,
    opts: &ZooOptions,
) -> Result<Vec<SweepRow>> {
    let values = match dynamics {
        SweepDynamics::Exclusion { times, .. } => times,
        SweepDynamics::Noise { eps } => eps,
    };
    if sizes.is_empty() || values.is_empty() {
        return Err(invalid("sweep grids must be nonempty"));
    }
    check_samples(samples)?;
    let mut rows = Vec::with_capacity(sizes.len() * values.len());
    for &n in sizes {
        let member = spec.resized(n)?;
        let f = member.build_with(opts)?;
        let graph = match dynamics {
            SweepDynamics::Exclusion { graph, .. } => Some(graph.for_width(f.n())?),
            SweepDynamics::Noise { .. } => None,
        };
        for &v in values {
            let row_seed = rng::derive_seed(seed, rows.len() as u64);
            let (name, parameter, result) = match &graph {
                Some(g) => (
                    g.family().to_string(),
                    "t",
                    estimate_exclusion_correlation(&f, g, v, samples, row_seed)?,
                ),
                None => ("snps".to_string(), "eps", estimate_noise_correlation(&f, v, samples, row_seed)?),
            };
            rows.push(SweepRow {
                family: spec.family_name().to_string(),
                n,
                bits: f.n(),
                dynamics: name,
                parameter,
                value: v,
                result,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::Support;

    fn build(spec: FunctionSpec) -> BooleanFunction {
        spec.build().unwrap()
    }

    #[test]
    fn rejects_tiny_samples() {
        let f = build(FunctionSpec::Majority { n: 3 });
        let g = DynamicsGraph::complete(3).unwrap();
        assert!(estimate_exclusion_correlation(&f, &g, 1.0, 1, 0).is_err());
        assert!(estimate_noise_correlation(&f, 1.5, 100, 0).is_err());
        assert!(estimate_flip_probability(&f, &DynamicsGraph::complete(4).unwrap(), 1.0, 10, 0).is_err());
        assert!(conditional_mean_profile(&f, &g, 1.0, 1, 5, 0).is_err());
    }

    #[test]
    fn parity_is_conserved() {
        let f = build(FunctionSpec::Parity { n: 6, support: Support::All });
        let g = DynamicsGraph::path(6).unwrap();
        let r = estimate_flip_probability(&f, &g, 2.0, 10_000, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
        let c = estimate_exclusion_correlation(&f, &g, 2.0, 20_000, 1).unwrap();
        assert!(c.covers(1.0), "{c:?}");
        let p = conditional_mean_profile(&f, &g, 1.0, 200, 5, 2).unwrap();
        assert_eq!(p.inner_variance, 0.0);
        assert!((p.raw_variance - 1.0).abs() < 0.01);
    }

    #[test]
    fn conditional_variance_is_correlation_at_double_time() {
        // level-1 kernel of complete(4): P_t({0}, {0}) = 1/4 + 3/4 e^{−t}
        let f = build(FunctionSpec::Dictator { n: 4, bit: 0 });
        let g = DynamicsGraph::complete(4).unwrap();
        let p = conditional_mean_profile(&f, &g, 0.5, 20_000, 8, 11).unwrap();
        let at = |t: f64| 0.25 + 0.75 * (-t).exp();
        assert!((p.debiased_variance - at(1.0)).abs() <= 3.0 * p.stderr, "{p:?}");
        assert!((p.debiased_variance - at(0.5)).abs() > 10.0 * p.stderr, "{p:?}");
    }

    #[test]
    fn time_zero_and_constant() {
        let f = build(FunctionSpec::Tribes { width: 2, tribes: 3 });
        let m = f.mean().unwrap();
        let g = DynamicsGraph::complete(6).unwrap();
        assert!(estimate_flip_probability(&f, &g, 0.0, 1000, 3).unwrap().estimate == 0.0);
        let r = estimate_exclusion_correlation(&f, &g, 0.0, 50_000, 3).unwrap();
        assert!(r.covers(1.0 - m * m), "{r:?}");
        let c = build(FunctionSpec::Constant { n: 5, value: -1 });
        let p = conditional_mean_profile(&c, &DynamicsGraph::complete(5).unwrap(), 1.0, 50, 4, 5).unwrap();
        assert_eq!(p.quantiles, [-1.0; 5]);
        assert_eq!(p.debiased_variance, 0.0);
    }

    #[test]
    fn noise_examples() {
        let par = build(FunctionSpec::Parity { n: 6, support: Support::All });
        let r = estimate_noise_correlation(&par, 0.5, 100_000, 7).unwrap();
        assert!(r.covers(1.0 / 64.0), "{r:?}");
        let maj = build(FunctionSpec::Majority { n: 3 });
        let r = estimate_noise_correlation(&maj, 0.5, 100_000, 8).unwrap();
        assert!(r.covers(0.40625), "{r:?}");
        let r = estimate_noise_correlation(&maj, 1.0, 100_000, 9).unwrap();
        assert!(r.covers(0.0), "{r:?}");
    }

    #[test]
    fn snps_trajectory_matches_noise() {
        let f = build(FunctionSpec::Majority { n: 5 });
        let t = 0.7f64;
        let a = estimate_snps_trajectory_correlation(&f, t, 60_000, 10).unwrap();
        let b = estimate_noise_correlation(&f, 1.0 - (-t).exp(), 60_000, 11).unwrap();
        assert!(crate::stats::within(a.estimate, a.stderr, b.estimate, b.stderr, 3.0), "{a:?} {b:?}");
    }

    #[test]
    fn dictator_flip_probability() {
        let n = 5;
        let f = build(FunctionSpec::Dictator { n, bit: 0 });
        let g = DynamicsGraph::complete(n).unwrap();
        let stay = 1.0 / n as f64 + (1.0 - 1.0 / n as f64) * (-1f64).exp();
        let r = estimate_flip_probability(&f, &g, 1.0, 100_000, 12).unwrap();
        assert!(r.covers((1.0 - stay) / 2.0), "{r:?}");
    }

    #[test]
    fn predicate_and_table_paths_agree_in_law() {
        let spec = FunctionSpec::Majority { n: 7 };
        let tab = spec.build().unwrap();
        let pred = spec.build_with(&ZooOptions { tabulation_cap: 3 }).unwrap();
        assert!(!pred.is_tabulated());
        let g = DynamicsGraph::path(7).unwrap();
        let a = estimate_exclusion_correlation(&tab, &g, 1.0, 40_000, 13).unwrap();
        let b = estimate_exclusion_correlation(&pred, &g, 1.0, 40_000, 14).unwrap();
        assert!(crate::stats::within(a.estimate, a.stderr, b.estimate, b.stderr, 3.0));
    }

    #[test]
    fn deterministic_across_pools() {
        let f = build(FunctionSpec::Tribes { width: 2, tribes: 3 });
        let g = DynamicsGraph::complete(6).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_exclusion_correlation(&f, &g, 1.0, 10_000, 15).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_eq!(a.naive_estimate.to_bits(), b.naive_estimate.to_bits());
    }

    #[test]
    fn sweep_shape_and_errors() {
        let spec = FunctionSpec::Parity { n: 4, support: Support::FirstHalf };
        let dynamics = SweepDynamics::Exclusion {
            graph: GraphFamily::Complete,
            times: vec![0.0, 1.0],
        };
        let rows = sensitivity_sweep(&spec, &[4, 6], &dynamics, 2000, 1, &ZooOptions::default()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[2].n, rows[2].value, rows[2].parameter), (6, 0.0, "t"));
        assert!(rows[0].result.covers(1.0));
        assert!(sensitivity_sweep(&spec, &[], &dynamics, 2000, 1, &ZooOptions::default()).is_err());
        let noise = SweepDynamics::Noise { eps: vec![] };
        assert!(sensitivity_sweep(&spec, &[4], &noise, 2000, 1, &ZooOptions::default()).is_err());
    }
}
