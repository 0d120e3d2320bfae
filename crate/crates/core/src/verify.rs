//! The acceptance suite: thirteen numbered checks with fixed tolerances,
//! shared by the `acceptance` test target and `xsense verify`.

use std::fmt;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::SubsetMask;
use crate::boolean::{jointly_pivotal, FunctionSpec, Support};
use crate::couplings::{domination_check, n01_statistics, triple_check};
use crate::dynamics::DynamicsGraph;
use crate::error::{invalid, Result};
use crate::estimators::{
    estimate_character_correlation, estimate_exclusion_correlation, estimate_flip_probability,
    estimate_noise_correlation, sensitivity_sweep, EstimatorResult, SweepDynamics,
};
use crate::kernel::{exact_absolute_correlation, exact_exclusion_correlation, kernel_at, level_eigen, level_generator};
use crate::percolation::{
    complete_crossing_correlation, complete_switch_counts, default_padding, medium_range_correlation,
    rhombus_crossing_probability, PatchShape,
};
use crate::report::{json_bytes, CsvTable, Provenance};
use crate::rng::{self, derive_seed};
use crate::spectral::transform;
use crate::stats::separated;

/// Sample sizes: `Full` uses the sizes the criteria name; `Quick` divides
/// Monte Carlo budgets by ten for smoke runs (statistical power drops, tolerances do not).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    #[default]
    Full,
}

impl Scale {
    fn samples(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => (full / 10).max(1000),
        }
    }
}

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "exact spectral identities"),
    (2, "noise correlation oracle"),
    (3, "exclusion correlation oracle"),
    (4, "kernel structure"),
    (5, "character correlations"),
    (6, "conservation laws"),
    (7, "parity contrast between graphs"),
    (8, "flipped-pairs cancellation"),
    (9, "triple coupling"),
    (10, "binomial domination"),
    (11, "jointly pivotal bound"),
    (12, "percolation trends"),
    (13, "determinism across worker counts"),
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2} ({}): {} [{:.1}s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

/// Every zoo member used by the exact checks, all of width at most 16.
pub fn zoo_catalog() -> Vec<FunctionSpec> {
    use FunctionSpec::*;
    vec![
        Constant { n: 5, value: 1 },
        Constant { n: 4, value: -1 },
        Parity { n: 7, support: Support::All },
        Parity { n: 12, support: Support::FirstHalf },
        Parity { n: 10, support: Support::Bits(vec![1, 4, 7]) },
        Dictator { n: 9, bit: 3 },
        Majority { n: 3 },
        Majority { n: 9 },
        Majority { n: 15 },
        Tribes { width: 2, tribes: 3 },
        Tribes { width: 3, tribes: 4 },
        Tribes { width: 4, tribes: 4 },
        CountBand { n: 8, width: 2, centered: false },
        CountBand { n: 12, width: 3, centered: true },
        CountBand { n: 16, width: 4, centered: false },
        IteratedMajority { levels: 1 },
        IteratedMajority { levels: 2 },
        FlippedPairs { edges: 3 },
        FlippedPairs { edges: 8 },
        Crossing { shape: PatchShape::Rhombus { side: 3 } },
        Crossing { shape: PatchShape::Rhombus { side: 4 } },
        Crossing { shape: PatchShape::Rectangle { a: 1.0, b: 1.0, n: 2 } },
        CoarseMajorityCrossing { n: 3, alpha: 1.0 },
        CoarseMajorityCrossing { n: 4, alpha: 0.0 },
    ]
}

/// Run one criterion. Errors inside a check count as failures.
pub fn run_criterion(id: u8, scale: Scale, seed: u64) -> CriterionOutcome {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, t)| *t);
    let start = Instant::now();
    let seed = derive_seed(seed, id as u64);
    let result = match id {
        1 => spectral_identities(),
        2 => noise_oracle(scale, seed),
        3 => exclusion_oracle(scale, seed),
        4 => kernel_structure(),
        5 => character_correlations(scale, seed),
        6 => conservation(scale, seed),
        7 => parity_contrast(scale, seed),
        8 => flipped_pairs(),
        9 => triple_coupling(scale, seed),
        10 => domination(scale, seed),
        11 => pivotal_bound(),
        12 => percolation_trends(scale, seed),
        13 => determinism(scale, seed),
        _ => Err(invalid(format!("no criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(scale: Scale, seed: u64) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, scale, seed)).collect()
}

type Verdict = Result<(bool, String)>;

fn z_score(r: &EstimatorResult, exact: f64) -> f64 {
    if r.stderr > 0.0 {
        (r.estimate - exact).abs() / r.stderr
    } else if r.estimate == exact {
        0.0
    } else {
        f64::INFINITY
    }
}

fn spectral_identities() -> Verdict {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let catalog = zoo_catalog();
    for spec in &catalog {
        let f = spec.build()?;
        let sp = transform(&f)?;
        let err = (sp.total_mass() - 1.0).abs();
        worst = worst.max(err);
        let table = f.table_for("round trip")?;
        let exact = sp.inverse().iter().zip(table).all(|(&x, &y)| x == y as f64);
        if err > 1e-12 || !exact {
            failures.push(format!("{}(n={})", spec.family_name(), f.n()));
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{} functions, max |Σf̂² − 1| = {worst:.1e}, inverse round trip exact{}",
            catalog.len(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(" ")) }
        ),
    ))
}

fn noise_oracle(scale: Scale, seed: u64) -> Verdict {
    use FunctionSpec::*;
    let fns = [
        Majority { n: 11 },
        Tribes { width: 3, tribes: 4 },
        Parity { n: 12, support: Support::FirstHalf },
        Dictator { n: 12, bit: 5 },
        CountBand { n: 12, width: 3, centered: false },
        IteratedMajority { levels: 2 },
    ];
    let samples = scale.samples(100_000);
    let (mut cases, mut worst, mut failed) = (0, 0.0f64, Vec::new());
    for (i, spec) in fns.iter().enumerate() {
        let f = spec.build()?;
        let sp = transform(&f)?;
        for (j, eps) in [0.1, 0.3, 0.7].into_iter().enumerate() {
            let exact = sp.noise_correlation(eps)?;
            let r = estimate_noise_correlation(&f, eps, samples, derive_seed(seed, (i * 3 + j) as u64))?;
            let z = z_score(&r, exact);
            worst = worst.max(z);
            cases += 1;
            if z > 3.0 {
                failed.push(format!("{} ε={eps}", spec.family_name()));
            }
        }
    }
    Ok((
        failed.is_empty(),
        format!("{cases} cases at {samples} samples, worst |z| = {worst:.2}{}", list(&failed)),
    ))
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!("; outside 3σ: {}", items.join(", "))
    }
}

fn exclusion_oracle(scale: Scale, seed: u64) -> Verdict {
    use FunctionSpec::*;
    let fns = [
        Tribes { width: 2, tribes: 5 },
        CountBand { n: 10, width: 2, centered: false },
        FlippedPairs { edges: 5 },
    ];
    let graphs = [
        DynamicsGraph::complete(10)?,
        DynamicsGraph::path(10)?,
        DynamicsGraph::isolated_edges(5)?,
    ];
    let samples = scale.samples(100_000);
    let (mut cases, mut worst, mut failed) = (0u64, 0.0f64, Vec::new());
    for spec in &fns {
        let f = spec.build()?;
        let sp = transform(&f)?;
        for g in &graphs {
            for t in [0.25, 1.0, 4.0] {
                let exact = exact_exclusion_correlation(&sp, g, t)?;
                let r = estimate_exclusion_correlation(&f, g, t, samples, derive_seed(seed, cases))?;
                let z = z_score(&r, exact);
                worst = worst.max(z);
                cases += 1;
                if z > 3.0 {
                    failed.push(format!("{} on {} t={t}", spec.family_name(), g.family()));
                }
            }
        }
    }
    Ok((
        failed.is_empty(),
        format!("{cases} cases at {samples} samples, worst |z| = {worst:.2}{}", list(&failed)),
    ))
}

fn kernel_structure() -> Verdict {
    let mut graphs = Vec::new();
    for n in 2..=8 {
        graphs.push(DynamicsGraph::complete(n)?);
        graphs.push(DynamicsGraph::path(n)?);
    }
    for m in 1..=4 {
        graphs.push(DynamicsGraph::isolated_edges(m)?);
    }
    graphs.push(DynamicsGraph::grid2d(2)?);
    let times = [0.02, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0];
    let (mut kernels, mut bound_cases) = (0usize, 0usize);
    let (mut sym, mut stoch, mut min_eig, mut kernel_gap) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    let mut bound_min = f64::INFINITY;
    let mut problems = Vec::new();
    for g in &graphs {
        let n = g.vertices();
        for k in 1..n {
            let gen = level_generator(g, k)?;
            let eig = level_eigen(&gen)?;
            // only connected graphs have the uniform vector as the whole rate-0 eigenspace
            if g.family() != "isolated_edges" || n == 2 {
                kernel_gap = kernel_gap.max((eig.uniform_in_kernel() - 1.0).abs());
                if eig.rates.iter().filter(|&&r| r.abs() <= 1e-9).count() != 1 {
                    problems.push(format!("{} n={n} k={k}: rate-0 eigenspace not one-dimensional", g.family()));
                }
            }
            for t in times {
                let p = kernel_at(&gen, t)?;
                kernels += 1;
                sym = sym.max(p.symmetry_error());
                stoch = stoch.max(p.row_sum_error());
                let lo = p.min_eigenvalue();
                min_eig = min_eig.min(lo);
                if k <= 3 && g.assumption_ok() && (-(k as f64) * t).exp() >= 0.75 {
                    bound_cases += 1;
                    bound_min = bound_min.min(lo);
                    if lo < 0.5 {
                        problems.push(format!("{} n={n} k={k} t={t}: min eigenvalue {lo}", g.family()));
                    }
                }
            }
        }
    }
    if sym > 1e-10 {
        problems.push(format!("symmetry error {sym:e}"));
    }
    if stoch > 1e-12 {
        problems.push(format!("row-sum error {stoch:e}"));
    }
    if min_eig < -1e-10 {
        problems.push(format!("negative eigenvalue {min_eig:e}"));
    }
    if kernel_gap > 1e-10 {
        problems.push(format!("uniform vector off the rate-0 eigenspace by {kernel_gap:e}"));
    }
    Ok((
        problems.is_empty(),
        format!(
            "{kernels} kernels: symmetry ≤ {sym:.1e}, row sums ≤ {stoch:.1e}, min eigenvalue {min_eig:.3e}; \
             {bound_cases} cases with e^(−kt) ≥ 3/4 have min eigenvalue ≥ {bound_min:.4}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    ))
}

fn character_correlations(scale: Scale, seed: u64) -> Verdict {
    let n = 8;
    let graphs = [DynamicsGraph::complete(n)?, DynamicsGraph::path(n)?];
    let samples = scale.samples(100_000);
    let t = 1.0;
    let mut r = rng::stream(seed, u64::MAX);
    let (mut worst, mut failed) = (0.0f64, Vec::new());
    for pair in 0..20u64 {
        let g = &graphs[(pair % 2) as usize];
        let k = r.random_range(1..=3usize);
        let draw = |r: &mut rng::StreamRng| sample_indices(r, n, k).iter().fold(0u64, |m, i| m | 1 << i);
        let s = draw(&mut r);
        let s2 = if pair % 4 < 2 { s } else { draw(&mut r) };
        let exact = kernel_at(&level_generator(g, k)?, t)?.entry(s, s2);
        let est = estimate_character_correlation(g, s, s2, t, samples, derive_seed(seed, pair))?;
        let z = z_score(&est, exact);
        worst = worst.max(z);
        if z > 3.0 {
            failed.push(format!("{} S={s:#x} S′={s2:#x}", g.family()));
        }
    }
    Ok((
        failed.is_empty(),
        format!("20 pairs (n=8, |S| ≤ 3, t=1) at {samples} samples, worst |z| = {worst:.2}{}", list(&failed)),
    ))
}

fn conservation(scale: Scale, seed: u64) -> Verdict {
    let graphs = [
        DynamicsGraph::complete(9)?,
        DynamicsGraph::path(9)?,
        DynamicsGraph::grid2d(3)?,
    ];
    let mut worst = 0.0f64;
    for g in graphs.iter().chain([&DynamicsGraph::isolated_edges(4)?]) {
        let sp = transform(&FunctionSpec::Parity { n: g.vertices(), support: Support::All }.build()?)?;
        for t in [0.0, 0.25, 1.0, 4.0, 20.0] {
            worst = worst.max((exact_exclusion_correlation(&sp, g, t)? - 1.0).abs());
        }
    }
    let samples = scale.samples(1_000_000);
    let mut flips = 0.0;
    for (i, g) in graphs.iter().enumerate() {
        let f = FunctionSpec::Parity { n: g.vertices(), support: Support::All }.build()?;
        flips += estimate_flip_probability(&f, g, 1.0, samples, derive_seed(seed, i as u64))?.estimate;
    }
    Ok((
        worst <= 1e-12 && flips == 0.0,
        format!(
            "full parity: max |N − 1| = {worst:.1e} over 4 graphs × 5 times; flip frequency {flips} over 3 × {samples} trajectories"
        ),
    ))
}

fn parity_contrast(scale: Scale, seed: u64) -> Verdict {
    let samples = scale.samples(400_000);
    let est = |n: usize, g: DynamicsGraph, tag: u64| -> Result<EstimatorResult> {
        let f = FunctionSpec::Parity { n, support: Support::FirstHalf }.build()?;
        estimate_exclusion_correlation(&f, &g, 1.0, samples, derive_seed(seed, tag))
    };
    let c: Vec<EstimatorResult> = [8, 16, 32]
        .iter()
        .enumerate()
        .map(|(i, &n)| est(n, DynamicsGraph::complete(n)?, i as u64))
        .collect::<Result<_>>()?;
    let p8 = est(8, DynamicsGraph::path(8)?, 10)?;
    let p32 = est(32, DynamicsGraph::path(32)?, 11)?;
    let decreasing = c.windows(2).all(|w| separated(w[0].estimate, w[0].stderr, w[1].estimate, w[1].stderr, 3.0));
    let stable = p32.estimate >= 0.5 * p8.estimate;
    Ok((
        decreasing && stable,
        format!(
            "complete n=8,16,32: {} (3σ decreasing: {decreasing}); path n=8: {}, n=32: {} (≥ half: {stable})",
            c.iter().map(fmt_est).collect::<Vec<_>>().join(", "),
            fmt_est(&p8),
            fmt_est(&p32)
        ),
    ))
}

fn fmt_est(r: &EstimatorResult) -> String {
    format!("{:.4}±{:.4}", r.estimate, r.stderr)
}

fn flipped_pairs() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [2usize, 3, 4] {
        let g = DynamicsGraph::isolated_edges(m)?;
        let f = transform(&FunctionSpec::CountBand { n: 2 * m, width: 2, centered: false }.build()?)?;
        let h = transform(&FunctionSpec::FlippedPairs { edges: m }.build()?)?;
        let (nf, nh) = (exact_exclusion_correlation(&f, &g, 1.0)?, exact_exclusion_correlation(&h, &g, 1.0)?);
        let (af, ah) = (exact_absolute_correlation(&f, &g, 1.0)?, exact_absolute_correlation(&h, &g, 1.0)?);
        let good = nh < nf && (af - ah).abs() <= 1e-10;
        ok &= good;
        parts.push(format!("{m} edges: N(f)={nf:.6} N(g)={nh:.6} |abs diff|={:.1e}", (af - ah).abs()));
    }
    Ok((ok, parts.join("; ")))
}

fn triple_coupling(scale: Scale, seed: u64) -> Verdict {
    let samples = scale.samples(1_000_000);
    let mut failures = 0;
    for (i, n) in [10usize, 100].into_iter().enumerate() {
        failures += triple_check(&DynamicsGraph::complete(n)?, 1.0, samples, derive_seed(seed, i as u64))?.identity_failures;
    }
    let stat_samples = scale.samples(100_000);
    let small = n01_statistics(&DynamicsGraph::complete(10)?, 2f64.ln(), stat_samples, derive_seed(seed, 2), Some(5))?;
    let b = small.bucket(5).ok_or_else(|| invalid("empty occupancy bucket"))?;
    let mean_ok = b.mean_matches(3.0);
    let large = n01_statistics(&DynamicsGraph::complete(100)?, 1.0, stat_samples, derive_seed(seed, 3), None)?;
    let tested: Vec<_> = large.buckets.iter().chain(&small.buckets).filter(|b| b.count >= 2).collect();
    let bad: Vec<String> = tested
        .iter()
        .filter(|b| !b.variance_within_bound(3.0))
        .map(|b| format!("k={} var={:.3}", b.occupancy, b.variance))
        .collect();
    let worst_var = large.buckets.iter().map(|b| b.variance).fold(0.0, f64::max);
    Ok((
        failures == 0 && mean_ok && bad.is_empty(),
        format!(
            "identity failures {failures} in 2 × {samples}; n=10 k=5 t=ln2 mean {:.4}±{:.4} vs {:.4}; \
             {} buckets, max variance {worst_var:.3} vs bound {:.3}{}",
            b.mean,
            b.mean_stderr,
            b.expected_mean,
            tested.len(),
            100.0 * (1.0 - (-1f64).exp()),
            if bad.is_empty() { String::new() } else { format!("; above bound: {}", bad.join(", ")) }
        ),
    ))
}

fn domination(scale: Scale, seed: u64) -> Verdict {
    let samples = scale.samples(100_000);
    let mut cells = 0u64;
    let mut failed = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut band = 0.0;
    for v in [20usize, 60, 100] {
        for ratio in [0.1, 0.3, 0.45] {
            let k = (ratio * v as f64).round() as usize;
            let s = SubsetMask::from_indices(v, 0..k)?;
            for t in [0.5, 1.0, 2.0] {
                let r = domination_check(&DynamicsGraph::complete(v)?, &s, t, samples, derive_seed(seed, cells))?;
                cells += 1;
                worst = worst.max(r.max_violation);
                band = r.band;
                if !r.holds {
                    failed.push(format!("|V|={v} |S|={k} t={t}"));
                }
            }
        }
    }
    Ok((
        failed.is_empty(),
        format!(
            "{cells} cells at {samples} samples: max CDF excess {worst:.4} vs band {band:.4}{}",
            if failed.is_empty() { String::new() } else { format!("; violated: {}", failed.join(", ")) }
        ),
    ))
}

fn pivotal_bound() -> Verdict {
    let mut checked = 0u64;
    let mut tightest = f64::INFINITY;
    let mut failed = Vec::new();
    for spec in zoo_catalog() {
        let f = spec.build()?;
        let n = f.n();
        if n > 12 {
            continue;
        }
        let sp = transform(&f)?;
        for pm in 1u64..1 << n {
            if pm.count_ones() > 3 {
                continue;
            }
            let p = SubsetMask::from_mask(n, pm)?;
            let lhs = sp.superset_mass_scaled(&p)?;
            let jp = jointly_pivotal(&f, &p)?;
            // lhs / 4^n ≤ count / total
            let rhs = jp.count as i128 * (1i128 << (2 * n));
            if lhs * jp.total as i128 > rhs {
                failed.push(format!("{}(n={n}) P={pm:#x}", spec.family_name()));
            }
            if jp.count > 0 {
                tightest = tightest.min(jp.probability - lhs as f64 / 4f64.powi(n as i32));
            }
            checked += 1;
        }
    }
    Ok((
        failed.is_empty(),
        format!(
            "{checked} (function, P) pairs with 1 ≤ |P| ≤ 3, exact integer comparison, smallest slack {tightest:.3e}{}",
            if failed.is_empty() { String::new() } else { format!("; violated: {}", failed.join(", ")) }
        ),
    ))
}

/// Samples per size for the medium-range trend.
pub const MEDIUM_RANGE_SAMPLES: usize = 200_000;

fn percolation_trends(scale: Scale, seed: u64) -> Verdict {
    let duality = rhombus_crossing_probability(32, scale.samples(100_000), derive_seed(seed, 0))?;
    let dual_ok = duality.covers(0.5);

    let sizes = [16usize, 32, 64];
    let corr: Vec<EstimatorResult> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| complete_crossing_correlation(n, 1.0, scale.samples(100_000), derive_seed(seed, 1 + i as u64)))
        .collect::<Result<_>>()?;
    let corr_ok = decreasing(&corr);

    let switches: Vec<EstimatorResult> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| complete_switch_counts(n, 1.0, scale.samples(500), derive_seed(seed, 4 + i as u64)))
        .collect::<Result<_>>()?;
    let switch_ok = switches.windows(2).all(|w| w[1].estimate > w[0].estimate);

    let medium: Vec<EstimatorResult> = [32usize, 64, 128]
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            medium_range_correlation(
                n,
                0.5,
                1.0,
                default_padding(n, 0.5),
                scale.samples(MEDIUM_RANGE_SAMPLES),
                derive_seed(seed, 7 + i as u64),
            )
        })
        .collect::<Result<_>>()?;
    let medium_ok = decreasing(&medium);

    let show = |v: &[EstimatorResult]| v.iter().map(fmt_est).collect::<Vec<_>>().join(", ");
    Ok((
        dual_ok && corr_ok && switch_ok && medium_ok,
        format!(
            "rhombus n=32 crossing {} (covers 1/2: {dual_ok}); complete-graph correlation n=16,32,64: {} \
             (3σ decreasing: {corr_ok}); switches: {} (increasing: {switch_ok}); \
             medium range n=32,64,128: {} (3σ decreasing: {medium_ok})",
            fmt_est(&duality),
            show(&corr),
            show(&switches),
            show(&medium)
        ),
    ))
}

fn decreasing(v: &[EstimatorResult]) -> bool {
    v.windows(2).all(|w| separated(w[0].estimate, w[0].stderr, w[1].estimate, w[1].stderr, 3.0))
}

/// CSV and JSON outputs of a representative slice of the suite.
pub fn determinism_artifacts(scale: Scale, seed: u64) -> Result<Vec<(String, Vec<u8>)>> {
    let prov = Provenance::new("determinism", seed);
    let samples = scale.samples(20_000);
    let mut out = Vec::new();

    let rows = sensitivity_sweep(
        &FunctionSpec::Parity { n: 8, support: Support::FirstHalf },
        &[8, 16],
        &SweepDynamics::Exclusion {
            graph: crate::dynamics::GraphFamily::Complete,
            times: vec![0.5, 1.0],
        },
        samples,
        seed,
        &Default::default(),
    )?;
    let mut sweep = CsvTable::new(["n", "parameter", "estimate", "stderr", "naive"]);
    for r in &rows {
        sweep.push([
            r.n.to_string(),
            r.parameter.to_string(),
            r.result.estimate.to_string(),
            r.result.stderr.to_string(),
            r.result.naive_estimate.to_string(),
        ])?;
    }
    out.push(("sweep.csv".into(), sweep.to_bytes(&prov)));

    let f = FunctionSpec::Majority { n: 9 }.build()?;
    let noise = estimate_noise_correlation(&f, 0.3, samples, seed)?;
    out.push(("noise.json".into(), json_bytes(&prov, &noise)));
    let triple = triple_check(&DynamicsGraph::complete(20)?, 1.0, samples, seed)?;
    out.push(("triple.json".into(), json_bytes(&prov, &triple)));
    let n01 = n01_statistics(&DynamicsGraph::complete(12)?, 1.0, samples, seed, None)?;
    out.push(("n01.json".into(), json_bytes(&prov, &n01)));
    let dom = domination_check(
        &DynamicsGraph::complete(20)?,
        &SubsetMask::from_indices(20, 0..6)?,
        1.0,
        samples,
        seed,
    )?;
    out.push(("domination.json".into(), json_bytes(&prov, &dom)));
    let medium = medium_range_correlation(12, 0.5, 1.0, 3, samples / 4, seed)?;
    out.push(("medium.json".into(), json_bytes(&prov, &medium)));
    Ok(out)
}

fn determinism(scale: Scale, seed: u64) -> Verdict {
    let run = |threads: usize| -> Result<Vec<(String, Vec<u8>)>> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| invalid(e.to_string()))?
            .install(|| determinism_artifacts(scale, seed))
    };
    let reference = run(1)?;
    let mut differing = Vec::new();
    for threads in [3, 3, 2] {
        for ((name, a), (_, b)) in reference.iter().zip(run(threads)?) {
            if *a != b {
                differing.push(format!("{name} at {threads} workers"));
            }
        }
    }
    let bytes: usize = reference.iter().map(|(_, b)| b.len()).sum();
    Ok((
        differing.is_empty(),
        format!(
            "{} files ({bytes} bytes) identical across 1, 2 and 3 workers and a repeat{}",
            reference.len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    ))
}
