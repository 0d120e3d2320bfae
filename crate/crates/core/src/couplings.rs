//! Couplings between independent resampling and exclusion on the complete
//! graph, statistics of the exclusion transfer counts, stochastic domination of
//! the displaced mass, and monotone hypercube paths.

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::bits::{Configuration, SubsetMask};
use crate::boolean::{influences, BooleanFunction};
use crate::dynamics::{DynamicsGraph, PathSampler};
use crate::error::{invalid, nonnegative_time, Error, Result};
use crate::estimators::{check_samples, chunked_fold, replica_moments, EstimatorResult};
use crate::stats::{binomial_cdf_table, dkw_band};

/// One draw of `(ω, ω^ε, η_t)` with its counters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleSample {
    pub omega: Configuration,
    pub omega_eps: Configuration,
    pub eta_t: Configuration,
    /// `|{x : ω(x) = 0, ω^ε(x) = 1}|`.
    pub n_eps_01: usize,
    /// `|{x : ω(x) = 1, ω^ε(x) = 0}|`.
    pub n_eps_10: usize,
    /// `|{x : ω(x) = 0, η_t(x) = 1}|`, which also counts the reverse moves.
    pub n_t_01: usize,
    pub eps: f64,
}

impl TripleSample {
    /// `|N^ε_01 − N^t_01| + |N^ε_10 − N^t_01|`.
    pub fn predicted_distance(&self) -> usize {
        self.n_eps_01.abs_diff(self.n_t_01) + self.n_eps_10.abs_diff(self.n_t_01)
    }

    /// `d(ω^ε, η_t)` equals the predicted distance and the counters match the configurations.
    pub fn hamming_identity_holds(&self) -> bool {
        let raised = |a: &Configuration, b: &Configuration| (0..a.width()).filter(|&x| !a.get(x) && b.get(x)).count();
        self.omega_eps.distance(&self.eta_t).ok() == Some(self.predicted_distance())
            && raised(&self.omega, &self.omega_eps) == self.n_eps_01
            && raised(&self.omega_eps, &self.omega) == self.n_eps_10
            && raised(&self.omega, &self.eta_t) == self.n_t_01
            && self.eta_t.count() == self.omega.count()
    }
}

/// The triple coupling on `complete(n)` at time `t`, `ε = 1 − e^{−t}`.
///
/// `η_t` comes from one simulated exclusion path started at `ω`. `ω^ε` changes
/// `N^ε_01 ~ Bin(#zeros, ε/2)` zeros and `N^ε_10 ~ Bin(#ones, ε/2)` ones,
/// reusing as many of the sites that `η_t` changed as possible and choosing
/// the rest uniformly.
#[derive(Clone)]
pub struct TripleCoupling {
    n: usize,
    t: f64,
    eps: f64,
    sampler: PathSampler,
}

impl TripleCoupling {
    pub fn new(g: &DynamicsGraph, t: f64) -> Result<Self> {
        nonnegative_time(t)?;
        if g.complete_rate().is_none() {
            return Err(invalid(format!(
                "the triple coupling needs the complete graph, got {}",
                g.family()
            )));
        }
        Ok(Self {
            n: g.vertices(),
            t,
            eps: 1.0 - (-t).exp(),
            sampler: PathSampler::new(g)?,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TripleSample {
        let n = self.n;
        let omega = Configuration::uniform(n, rng).expect("positive width");
        let ones = omega.count();
        let half = self.eps / 2.0;
        let n_eps_01 = Binomial::new((n - ones) as u64, half).expect("valid").sample(rng) as usize;
        let n_eps_10 = Binomial::new(ones as u64, half).expect("valid").sample(rng) as usize;

        let mut eta_t = omega.clone();
        self.sampler
            .for_each_event(self.t, rng, |e| eta_t.swap(e.u as usize, e.v as usize));

        let (mut up_t, mut up_rest, mut down_t, mut down_rest) = (vec![], vec![], vec![], vec![]);
        for x in 0..n {
            match (omega.get(x), eta_t.get(x)) {
                (false, true) => up_t.push(x),
                (false, false) => up_rest.push(x),
                (true, false) => down_t.push(x),
                (true, true) => down_rest.push(x),
            }
        }
        let n_t_01 = up_t.len();
        let mut omega_eps = omega.clone();
        for x in maximal_overlap(&up_t, &up_rest, n_eps_01, rng) {
            omega_eps.set(x, true);
        }
        for x in maximal_overlap(&down_t, &down_rest, n_eps_10, rng) {
            omega_eps.set(x, false);
        }
        TripleSample {
            omega,
            omega_eps,
            eta_t,
            n_eps_01,
            n_eps_10,
            n_t_01,
            eps: self.eps,
        }
    }
}

/// `k` sites: a uniform `k`-subset of `preferred` if it is large enough,
/// otherwise all of it plus a uniform subset of `rest`.
fn maximal_overlap<R: Rng + ?Sized>(preferred: &[usize], rest: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    if k <= preferred.len() {
        sample_indices(rng, preferred.len(), k).iter().map(|i| preferred[i]).collect()
    } else {
        let mut out = preferred.to_vec();
        out.extend(sample_indices(rng, rest.len(), k - preferred.len()).iter().map(|i| rest[i]));
        out
    }
}

/// One triple sample on `g = complete(n)`.
pub fn triple_sample<R: Rng + ?Sized>(n: usize, t: f64, g: &DynamicsGraph, rng: &mut R) -> Result<TripleSample> {
    if g.vertices() != n {
        return Err(Error::WidthMismatch {
            expected: g.vertices(),
            found: n,
        });
    }
    Ok(TripleCoupling::new(g, t)?.sample(rng))
}

/// Running checks over many triple samples.
#[derive(Clone, Debug, Serialize)]
pub struct TripleReport {
    pub n: usize,
    pub time: f64,
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    /// Samples on which the Hamming identity failed.
    pub identity_failures: u64,
    /// Mean of `d(ω, ω^ε)`, expected `n ε / 2`.
    pub mean_resample_distance: EstimatorResult,
}

/// Draw `samples` triples from `stream(seed, i)` and check every one.
pub fn triple_check(g: &DynamicsGraph, t: f64, samples: usize, seed: u64) -> Result<TripleReport> {
    check_samples(samples)?;
    let coupling = TripleCoupling::new(g, t)?;
    let start = Instant::now();
    let (failures, sum, sum_sq) = chunked_fold(
        samples,
        seed,
        || (0u64, 0u64, 0u64),
        |acc, r| {
            let s = coupling.sample(r);
            if !s.hamming_identity_holds() {
                acc.0 += 1;
            }
            let d = (s.n_eps_01 + s.n_eps_10) as u64;
            acc.1 += d;
            acc.2 += d * d;
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        },
    );
    let (mean, var) = integer_moments(samples as u64, sum as u128, sum_sq as u128);
    Ok(TripleReport {
        n: g.vertices(),
        time: t,
        eps: coupling.eps,
        samples,
        seed,
        identity_failures: failures,
        mean_resample_distance: EstimatorResult {
            estimate: mean,
            stderr: (var / samples as f64).sqrt(),
            samples,
            seed,
            naive_estimate: mean,
            wall_time: start.elapsed(),
        },
    })
}

/// Mean and unbiased variance from exact integer power sums.
fn integer_moments(count: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
    if count == 0 {
        return (0.0, 0.0);
    }
    let mean = sum as f64 / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let centred = (count as u128 * sum_sq - sum * sum) as f64;
    (mean, centred / (count as f64 * (count - 1) as f64))
}

/// Statistics of `N^t_01` among samples with `|η_0| = occupancy`.
#[derive(Clone, Debug, Serialize)]
pub struct N01Bucket {
    pub occupancy: usize,
    pub count: u64,
    pub mean: f64,
    pub mean_stderr: f64,
    /// `(1 − e^{−t}) k (n − k) / n`.
    pub expected_mean: f64,
    pub variance: f64,
    /// Large-sample standard error of `variance`, from the fourth central moment.
    pub variance_stderr: f64,
    /// `n (1 − e^{−t})`.
    pub variance_bound: f64,
}

impl N01Bucket {
    pub fn mean_matches(&self, k: f64) -> bool {
        (self.mean - self.expected_mean).abs() <= k * self.mean_stderr
    }

    pub fn variance_within_bound(&self, k: f64) -> bool {
        self.variance <= self.variance_bound + k * self.variance_stderr
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct N01Report {
    pub n: usize,
    pub time: f64,
    pub samples: usize,
    pub seed: u64,
    /// Nonempty buckets in order of occupancy.
    pub buckets: Vec<N01Bucket>,
}

impl N01Report {
    pub fn bucket(&self, occupancy: usize) -> Option<&N01Bucket> {
        self.buckets.iter().find(|b| b.occupancy == occupancy)
    }
}

/// Conditional moments of `N^t_01 = |{x : η_0(x) = 0, η_t(x) = 1}|` given
/// `|η_0|` under exclusion on `complete(n)`. With `occupancy = Some(k)` every
/// `η_0` is a uniform configuration with `k` ones; otherwise `η_0` is uniform.
pub fn n01_statistics(
    g: &DynamicsGraph,
    t: f64,
    samples: usize,
    seed: u64,
    occupancy: Option<usize>,
) -> Result<N01Report> {
    check_samples(samples)?;
    nonnegative_time(t)?;
    if g.complete_rate().is_none() {
        return Err(invalid("transfer-count statistics need the complete graph"));
    }
    let n = g.vertices();
    if occupancy.is_some_and(|k| k > n) {
        return Err(invalid(format!("occupancy exceeds {n} sites")));
    }
    let sampler = PathSampler::new(g)?;
    // per occupancy: count, Σx, Σx², Σx³, Σx⁴
    let sums = chunked_fold(
        samples,
        seed,
        || vec![[0u128; 5]; n + 1],
        |acc, r| {
            let eta0 = match occupancy {
                Some(k) => Configuration::from_indices(n, sample_indices(r, n, k).into_iter()).expect("in range"),
                None => Configuration::uniform(n, r).expect("positive width"),
            };
            let mut eta = eta0.clone();
            sampler.for_each_event(t, r, |e| eta.swap(e.u as usize, e.v as usize));
            let x = (0..n).filter(|&i| !eta0.get(i) && eta.get(i)).count() as u128;
            let b = &mut acc[eta0.count()];
            b[0] += 1;
            b[1] += x;
            b[2] += x * x;
            b[3] += x * x * x;
            b[4] += x * x * x * x;
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
            }
        },
    );
    let decay = 1.0 - (-t).exp();
    let buckets = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| s[0] > 0)
        .map(|(k, s)| {
            let c = s[0] as f64;
            let (mean, variance) = integer_moments(s[0] as u64, s[1], s[2]);
            let raw = |p: usize| s[p] as f64 / c;
            let m4 = raw(4) - 4.0 * mean * raw(3) + 6.0 * mean * mean * raw(2) - 3.0 * mean.powi(4);
            let pop_var = raw(2) - mean * mean;
            N01Bucket {
                occupancy: k,
                count: s[0] as u64,
                mean,
                mean_stderr: (variance / c).sqrt(),
                expected_mean: decay * (k * (n - k)) as f64 / n as f64,
                variance,
                variance_stderr: ((m4 - pop_var * pop_var).max(0.0) / c).sqrt(),
                variance_bound: n as f64 * decay,
            }
        })
        .collect();
    Ok(N01Report {
        n,
        time: t,
        samples,
        seed,
        buckets,
    })
}

/// `ε = (1 − e^{−(1 − s/v) t}) (1 − s/(v − s))`.
pub fn domination_eps(vertices: usize, set_size: usize, t: f64) -> f64 {
    let (v, s) = (vertices as f64, set_size as f64);
    (1.0 - (-(1.0 - s / v) * t).exp()) * (1.0 - s / (v - s))
}

/// Outcome of comparing the empirical law of `|S_t ∖ S|` with `Bin(|S|, ε)`.
#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub vertices: usize,
    pub set_size: usize,
    pub time: f64,
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    /// Mean of `|S_t ∖ S|`, to compare with `|S| ε`.
    pub mean_displaced: f64,
    /// `max_x (F_emp(x) − F_Bin(x))`.
    pub max_violation: f64,
    /// One-sided DKW half-width at 99%.
    pub band: f64,
    pub holds: bool,
}

/// Simulate `|S_t ∖ S|` under exclusion on the complete graph and test
/// `F_emp(x) ≤ F_Bin(x) + band` for every `x`.
pub fn domination_check(g: &DynamicsGraph, s: &SubsetMask, t: f64, samples: usize, seed: u64) -> Result<DominationReport> {
    check_samples(samples)?;
    nonnegative_time(t)?;
    if g.complete_rate().is_none() {
        return Err(invalid("the domination check needs the complete graph"));
    }
    let v = g.vertices();
    s.check_width(v)?;
    let k = s.count();
    if 2 * k >= v {
        return Err(Error::OutOfRange {
            what: "set size",
            detail: format!("|S| = {k} must be below |V|/2 = {}", v as f64 / 2.0),
        });
    }
    let sampler = PathSampler::new(g)?;
    let tagged = s.indicator();
    let outside: Vec<usize> = s.complement().indices().collect();
    let histogram = chunked_fold(
        samples,
        seed,
        || vec![0u64; k + 1],
        |acc, r| {
            let mut w = tagged.clone();
            sampler.for_each_event(t, r, |e| w.swap(e.u as usize, e.v as usize));
            acc[outside.iter().filter(|&&x| w.get(x)).count()] += 1;
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    );
    let eps = domination_eps(v, k, t);
    let cdf = binomial_cdf_table(k as u64, eps)?;
    let mut running = 0u64;
    let mut max_violation = f64::NEG_INFINITY;
    for (x, &h) in histogram.iter().enumerate() {
        running += h;
        max_violation = max_violation.max(running as f64 / samples as f64 - cdf[x]);
    }
    let band = dkw_band(samples, 0.99);
    let mean_displaced = histogram.iter().enumerate().map(|(x, &h)| (x as u64 * h) as f64).sum::<f64>() / samples as f64;
    Ok(DominationReport {
        vertices: v,
        set_size: k,
        time: t,
        eps,
        samples,
        seed,
        mean_displaced,
        max_violation,
        band,
        holds: max_violation <= band,
    })
}

/// A hypercube path that first raises `up` zeros of the start, then lowers
/// `down` coordinates that were ones at the start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpDownPath {
    pub start: Configuration,
    pub up: usize,
    pub down: usize,
    /// Coordinate flipped at each step.
    pub steps: Vec<usize>,
}

impl UpDownPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `ξ_0, ξ_1, …, ξ_{up + down}`.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut cur = self.start.clone();
        let mut out = vec![cur.clone()];
        for &x in &self.steps {
            cur.set(x, !cur.get(x));
            out.push(cur.clone());
        }
        out
    }

    pub fn end(&self) -> Configuration {
        let mut cur = self.start.clone();
        for &x in &self.steps {
            cur.set(x, !cur.get(x));
        }
        cur
    }

    /// Whether `f` changes sign between two consecutive configurations.
    pub fn crosses_boundary(&self, f: &BooleanFunction) -> bool {
        let mut cur = self.start.clone();
        let mut last = f.eval(&cur);
        for &x in &self.steps {
            cur.set(x, !cur.get(x));
            let now = f.eval(&cur);
            if now != last {
                return true;
            }
            last = now;
        }
        false
    }
}

/// Uniformly chosen up moves in uniform order, then uniformly chosen down moves
/// in uniform order.
pub fn updown_path<R: Rng + ?Sized>(start: &Configuration, up: usize, down: usize, rng: &mut R) -> Result<UpDownPath> {
    let zeros: Vec<usize> = (0..start.width()).filter(|&x| !start.get(x)).collect();
    let ones: Vec<usize> = (0..start.width()).filter(|&x| start.get(x)).collect();
    if up > zeros.len() || down > ones.len() {
        return Err(Error::OutOfRange {
            what: "move counts",
            detail: format!("{up} up and {down} down moves from {} zeros and {} ones", zeros.len(), ones.len()),
        });
    }
    let mut steps: Vec<usize> = sample_indices(rng, zeros.len(), up).iter().map(|i| zeros[i]).collect();
    steps.shuffle(rng);
    let mut lower: Vec<usize> = sample_indices(rng, ones.len(), down).iter().map(|i| ones[i]).collect();
    lower.shuffle(rng);
    steps.extend(lower);
    Ok(UpDownPath {
        start: start.clone(),
        up,
        down,
        steps,
    })
}

/// Boundary-hit frequency of up-down paths from `η_t` with the coupling's move
/// counts, beside the influence quantities that bound it.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryHitReport {
    pub n: usize,
    pub time: f64,
    /// Fraction of paths with a sign change of `f` along the way.
    pub hit_rate: EstimatorResult,
    /// Fraction of paths whose endpoints differ under `f` (never above the hit rate).
    pub endpoint_disagreement: EstimatorResult,
    /// `II(f) = Σ I_i²`.
    pub sum_of_squared_influences: f64,
    /// `|E_f| / (√n 2^n)`.
    pub normalized_boundary: f64,
}

/// For each replica: a triple sample on `complete(n)`, then an up-down path
/// from `η_t` with `up = |{ω^ε = 1, η_t = 0}|`, `down = |{ω^ε = 0, η_t = 1}|`.
pub fn boundary_hit_experiment(f: &BooleanFunction, t: f64, samples: usize, seed: u64) -> Result<BoundaryHitReport> {
    check_samples(samples)?;
    let inf = influences(f)?;
    let n = f.n();
    let coupling = TripleCoupling::new(&DynamicsGraph::complete(n)?, t)?;
    let start = Instant::now();
    let [hit, differ] = replica_moments(samples, seed, |r| {
        let s = coupling.sample(r);
        let up = (0..n).filter(|&x| s.omega_eps.get(x) && !s.eta_t.get(x)).count();
        let down = (0..n).filter(|&x| !s.omega_eps.get(x) && s.eta_t.get(x)).count();
        let path = updown_path(&s.eta_t, up, down, r).expect("counts come from the configurations");
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        [
            indicator(path.crosses_boundary(f)),
            indicator(f.eval(&path.start) != f.eval(&path.end())),
        ]
    });
    let wrap = |m: crate::stats::Moments| EstimatorResult {
        estimate: m.mean,
        stderr: m.stderr(),
        samples,
        seed,
        naive_estimate: m.mean,
        wall_time: start.elapsed(),
    };
    Ok(BoundaryHitReport {
        n,
        time: t,
        hit_rate: wrap(hit),
        endpoint_disagreement: wrap(differ),
        sum_of_squared_influences: inf.sum_of_squares,
        normalized_boundary: inf.edge_boundary as f64 / ((n as f64).sqrt() * 2f64.powi(n as i32)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::FunctionSpec;
    use crate::estimators::estimate_exclusion_correlation;
    use crate::rng;
    use crate::stats::chi_square;

    #[test]
    fn triple_invariants_and_marginal() {
        let g = DynamicsGraph::complete(100).unwrap();
        let r = triple_check(&g, 1.0, 20_000, 4).unwrap();
        assert_eq!(r.identity_failures, 0);
        let expected = 100.0 * r.eps / 2.0;
        assert!(r.mean_resample_distance.covers(expected), "{r:?}");
        assert!(triple_sample(10, 1.0, &DynamicsGraph::path(10).unwrap(), &mut rng::stream(0, 0)).is_err());
        assert!(triple_sample(9, 1.0, &g, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn matched_counters_give_equal_configurations() {
        let g = DynamicsGraph::complete(6).unwrap();
        let c = TripleCoupling::new(&g, 0.7).unwrap();
        let mut seen = 0;
        for i in 0..5000 {
            let s = c.sample(&mut rng::stream(11, i));
            if s.n_eps_01 == s.n_t_01 && s.n_eps_10 == s.n_t_01 {
                assert_eq!(s.omega_eps, s.eta_t);
                seen += 1;
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn product_law_matches_direct_simulation() {
        // P(f(η_0) f(η_t) = 1) for majority(9) from the coupling vs the plain simulator
        let f = FunctionSpec::Majority { n: 9 }.build().unwrap();
        let g = DynamicsGraph::complete(9).unwrap();
        let c = TripleCoupling::new(&g, 0.5).unwrap();
        let [agree] = replica_moments(40_000, 21, |r| {
            let s = c.sample(r);
            [if f.eval(&s.omega) == f.eval(&s.eta_t) { 1.0 } else { 0.0 }]
        });
        let direct = estimate_exclusion_correlation(&f, &g, 0.5, 40_000, 22).unwrap();
        // E[f f_t] = 2 P(agree) − 1 and E[f] = 0
        let from_coupling = 2.0 * agree.mean - 1.0;
        let se = (4.0 * agree.stderr().powi(2) + direct.stderr.powi(2)).sqrt();
        assert!((from_coupling - direct.estimate).abs() < 3.0 * se, "{from_coupling} vs {direct:?}");
    }

    #[test]
    fn exchangeable_positions() {
        // given |ω| = 4 and counters (1, 1, 1), the raised site of ω^ε and of η_t
        // are uniform over the 8 positions
        let n = 8;
        let g = DynamicsGraph::complete(n).unwrap();
        let c = TripleCoupling::new(&g, 1.0).unwrap();
        let mut eps_counts = vec![0.0; n];
        let mut t_counts = vec![0.0; n];
        for i in 0..200_000 {
            let s = c.sample(&mut rng::stream(13, i));
            if s.omega.count() != 4 || (s.n_eps_01, s.n_eps_10, s.n_t_01) != (1, 1, 1) {
                continue;
            }
            for x in 0..n {
                if !s.omega.get(x) {
                    eps_counts[x] += f64::from(u8::from(s.omega_eps.get(x)));
                    t_counts[x] += f64::from(u8::from(s.eta_t.get(x)));
                }
            }
        }
        for counts in [&eps_counts, &t_counts] {
            let draws: f64 = counts.iter().sum();
            assert!(draws > 1000.0, "{draws}");
            let (_, p) = chi_square(counts, &vec![draws / n as f64; n]).unwrap();
            assert!(p > 1e-4, "{counts:?}");
        }
    }

    #[test]
    fn n01_examples() {
        let g = DynamicsGraph::complete(10).unwrap();
        let r = n01_statistics(&g, 2f64.ln(), 40_000, 3, Some(5)).unwrap();
        let b = r.bucket(5).unwrap();
        assert_eq!(b.count, 40_000);
        assert!((b.expected_mean - 1.25).abs() < 1e-12);
        assert!(b.mean_matches(3.0), "{b:?}");
        assert!(b.variance_within_bound(3.0));
        let zero = n01_statistics(&g, 0.0, 100, 3, None).unwrap();
        assert!(zero.buckets.iter().all(|b| b.mean == 0.0 && b.variance == 0.0));
        assert!(n01_statistics(&g, 1.0, 1, 3, None).is_err());
        assert!(n01_statistics(&DynamicsGraph::path(10).unwrap(), 1.0, 10, 3, None).is_err());
    }

    #[test]
    fn n01_uniform_start_buckets() {
        let g = DynamicsGraph::complete(100).unwrap();
        let r = n01_statistics(&g, 1.0, 20_000, 8, None).unwrap();
        assert_eq!(r.buckets.iter().map(|b| b.count).sum::<u64>(), 20_000);
        for b in r.buckets.iter().filter(|b| b.count >= 50) {
            assert!(b.variance_within_bound(3.0), "{b:?}");
            assert!(b.mean_matches(4.0), "{b:?}");
        }
    }

    #[test]
    fn domination_examples() {
        assert!((domination_eps(100, 10, 1.0) - (1.0 - (-0.9f64).exp()) * 8.0 / 9.0).abs() < 1e-15);
        assert!((domination_eps(100, 10, 1.0) - 0.52749).abs() < 1e-5);
        assert_eq!(domination_eps(10, 3, 0.0), 0.0);

        let g = DynamicsGraph::complete(20).unwrap();
        let s = SubsetMask::from_indices(20, 0..6).unwrap();
        let zero = domination_check(&g, &s, 0.0, 1000, 1).unwrap();
        assert_eq!(zero.mean_displaced, 0.0);
        assert!(zero.holds);
        let r = domination_check(&g, &s, 1.0, 20_000, 1).unwrap();
        assert!(r.holds, "{r:?}");
        let big = SubsetMask::from_indices(20, 0..10).unwrap();
        assert!(domination_check(&g, &big, 1.0, 100, 1).is_err());
    }

    #[test]
    fn updown_examples() {
        let mut r = rng::stream(2, 0);
        let z = Configuration::zeros(4).unwrap();
        let p = updown_path(&z, 0, 0, &mut r).unwrap();
        assert_eq!(p.configurations(), vec![z.clone()]);
        let p = updown_path(&z, 4, 0, &mut r).unwrap();
        assert_eq!(p.end(), Configuration::ones(4).unwrap());
        assert!(updown_path(&z, 1, 1, &mut r).is_err());

        let start = Configuration::parse("1100101").unwrap();
        for _ in 0..200 {
            let p = updown_path(&start, 2, 3, &mut r).unwrap();
            let cs = p.configurations();
            assert_eq!(p.end().count(), start.count() + 2 - 3);
            let mut distinct = p.steps.clone();
            distinct.sort_unstable();
            distinct.dedup();
            assert_eq!(distinct.len(), 5);
            for (k, w) in cs.windows(2).enumerate() {
                let up = w[1].count() > w[0].count();
                assert_eq!(up, k < 2);
            }
            assert!(p.steps[2..].iter().all(|&x| start.get(x)));
        }
    }

    #[test]
    fn updown_relabeling_invariance() {
        // the first up move from 0011 under a relabeling matches the relabeled law
        let start = Configuration::parse("0011").unwrap();
        let relabel = [2usize, 3, 0, 1];
        let relabeled = Configuration::from_indices(4, start.indices().map(|i| relabel[i])).unwrap();
        let (mut a, mut b) = (vec![0.0; 4], vec![0.0; 4]);
        for i in 0..20_000 {
            let p = updown_path(&start, 1, 1, &mut rng::stream(5, i)).unwrap();
            a[relabel[p.steps[0]]] += 1.0;
            let q = updown_path(&relabeled, 1, 1, &mut rng::stream(6, i)).unwrap();
            b[q.steps[0]] += 1.0;
        }
        let cells: Vec<usize> = (0..4).filter(|&x| a[x] + b[x] > 0.0).collect();
        assert_eq!(cells.len(), 2);
        let total = |v: &[f64]| cells.iter().map(|&c| v[c]).sum::<f64>();
        let obs: Vec<f64> = cells.iter().map(|&c| a[c]).collect();
        let exp: Vec<f64> = cells.iter().map(|&c| b[c] / total(&b) * total(&a)).collect();
        let (_, p) = chi_square(&obs, &exp).unwrap();
        assert!(p > 1e-4);
    }

    #[test]
    fn boundary_hits_dominate_endpoint_disagreement() {
        let f = FunctionSpec::Majority { n: 9 }.build().unwrap();
        let r = boundary_hit_experiment(&f, 0.3, 20_000, 17).unwrap();
        assert!(r.hit_rate.estimate >= r.endpoint_disagreement.estimate);
        assert!(r.hit_rate.estimate > 0.0);
        // generous constant: C′ = 2, δ = 0
        assert!(r.hit_rate.estimate <= 2.0 * r.sum_of_squared_influences.sqrt(), "{r:?}");
    }
}
