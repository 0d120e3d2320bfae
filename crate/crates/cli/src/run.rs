use std::fmt::Display;

use anyhow::{bail, ensure, Context, Result};
use xsense_core::boolean::{influences, is_monotone};
use xsense_core::couplings::{boundary_hit_experiment, domination_check, n01_statistics, triple_check};
use xsense_core::estimators::{sensitivity_sweep, SweepDynamics};
use xsense_core::kernel::{exact_absolute_correlation_with, exact_exclusion_correlation_with, phi_mass_with};
use xsense_core::percolation::{
    complete_crossing_correlation, complete_switch_counts, medium_range_experiment, rhombus_crossing_probability,
    subbox_flip_probability,
};
use xsense_core::report::{json_bytes, CsvTable, Provenance};
use xsense_core::rng::derive_seed;
use xsense_core::spectral::transform;
use xsense_core::verify::{run_criterion, CriterionOutcome, CRITERIA};
use xsense_core::{BooleanFunction, DynamicsGraph, SubsetMask};

use crate::config::{Command, CoupleSpec, ExperimentConfig, PercSpec};

/// Files produced by a run, written only once everything succeeded.
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    /// Lines for standard output.
    pub summary: Vec<String>,
    pub success: bool,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            summary: Vec::new(),
            success: true,
        }
    }
}

/// Everything a command needs, checked before any computation.
pub struct Plan {
    command: Command,
    config: ExperimentConfig,
    provenance: Provenance,
    function: Option<BooleanFunction>,
    graph: Option<DynamicsGraph>,
}

fn probability(what: &str, p: f64) -> Result<()> {
    ensure!((0.0..=1.0).contains(&p), "{what} = {p} is not in [0, 1]");
    Ok(())
}

fn time(what: &str, t: f64) -> Result<()> {
    ensure!(t.is_finite() && t >= 0.0, "{what} = {t} must be finite and nonnegative");
    Ok(())
}

fn alpha(a: f64) -> Result<()> {
    ensure!(a > 0.0 && a < 1.0, "alpha = {a} must lie in (0, 1)");
    Ok(())
}

pub fn validate(command: Command, config: ExperimentConfig, seed: u64) -> Result<Plan> {
    if let Some(c) = config.command {
        ensure!(c == command, "config is for `{}`, not `{}`", c.name(), command.name());
    }
    let stem = config.stem(command);
    ensure!(
        !stem.is_empty() && stem.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
        "output stem `{stem}` must be nonempty and use only letters, digits, `-`, `_`, `.`"
    );
    if command != Command::Verify {
        ensure!(config.samples >= 2, "samples = {} must be at least 2", config.samples);
    }
    let needs_function = matches!(command, Command::Spectrum | Command::Sweep | Command::Exact)
        || matches!(config.couple, Some(CoupleSpec::BoundaryHits { .. }) if command == Command::Couple);
    let function = match (&config.function, needs_function) {
        (Some(spec), true) if command != Command::Sweep => Some(
            spec.build_with(&config.zoo())
                .with_context(|| format!("building {}", spec.family_name()))?,
        ),
        (None, true) => bail!("`{}` needs a `function`", command.name()),
        _ => None,
    };
    if let Some(f) = &function {
        ensure!(
            f.is_tabulated(),
            "{} has {} bits, above the tabulation cap of {}",
            f.name(),
            f.n(),
            config.zoo().tabulation_cap
        );
    }
    let mut graph = None;
    match command {
        Command::Spectrum => {}
        Command::Sweep => {
            let spec = config.function.as_ref().expect("checked");
            ensure!(!config.sizes.is_empty(), "`sweep` needs nonempty `sizes`");
            ensure!(!config.dynamics.is_empty(), "`sweep` needs at least one entry in `dynamics`");
            let mut labels = Vec::new();
            for d in &config.dynamics {
                match d {
                    SweepDynamics::Exclusion { graph, times } => {
                        ensure!(!times.is_empty(), "sweep times must be nonempty");
                        times.iter().try_for_each(|&t| time("sweep time", t))?;
                        for &n in &config.sizes {
                            let member = spec.resized(n)?;
                            graph.for_width(member.width()?)?;
                        }
                    }
                    SweepDynamics::Noise { eps } => {
                        ensure!(!eps.is_empty(), "sweep noise levels must be nonempty");
                        eps.iter().try_for_each(|&e| probability("eps", e))?;
                    }
                }
                let label = dynamics_label(d);
                ensure!(!labels.contains(&label), "two sweep dynamics share the label `{label}`");
                labels.push(label);
            }
        }
        Command::Exact => {
            let g = config
                .graph
                .as_ref()
                .context("`exact` needs a `graph`")?
                .build()?;
            let f = function.as_ref().expect("checked");
            ensure!(
                g.vertices() == f.n(),
                "graph has {} vertices but the function has {} bits",
                g.vertices(),
                f.n()
            );
            ensure!(
                !config.times.is_empty() || !config.thresholds.is_empty(),
                "`exact` needs `times` or `thresholds`"
            );
            config.times.iter().try_for_each(|&t| time("time", t))?;
            for &c in &config.thresholds {
                ensure!(c.is_finite() && c >= 0.0, "threshold {c} must be finite and nonnegative");
            }
            graph = Some(g);
        }
        Command::Couple => match config.couple.as_ref().context("`couple` needs a `couple` section")? {
            CoupleSpec::Triple { n, t } | CoupleSpec::N01 { n, t, .. } => {
                ensure!(*n >= 1, "n must be positive");
                time("t", *t)?;
                if let CoupleSpec::N01 { occupancy: Some(k), .. } = config.couple.as_ref().expect("present") {
                    ensure!(k <= n, "occupancy {k} exceeds n = {n}");
                }
                graph = Some(DynamicsGraph::complete(*n)?);
            }
            CoupleSpec::Domination { vertices, set_size, t } => {
                ensure!(
                    *set_size >= 1 && 2 * set_size < *vertices,
                    "domination needs 1 <= set_size < vertices / 2, got {set_size} of {vertices}"
                );
                time("t", *t)?;
                graph = Some(DynamicsGraph::complete(*vertices)?);
            }
            CoupleSpec::BoundaryHits { t } => time("t", *t)?,
        },
        Command::Perc => {
            let perc = config.perc.as_ref().context("`perc` needs a `perc` section")?;
            ensure!(!config.sizes.is_empty(), "`perc` needs nonempty `sizes`");
            ensure!(config.sizes.iter().all(|&n| n >= 2), "percolation sizes must be at least 2");
            match perc {
                PercSpec::Rhombus => {}
                PercSpec::CompleteCorrelation { t } => time("t", *t)?,
                PercSpec::Switches { horizon } => time("horizon", *horizon)?,
                PercSpec::MediumRange { alpha: a, t, .. } => {
                    alpha(*a)?;
                    time("t", *t)?;
                }
                PercSpec::SubboxFlip { alpha: a, t } => {
                    alpha(*a)?;
                    time("t", *t)?;
                    for &n in &config.sizes {
                        xsense_core::percolation::CoarseMajority::new(n, *a)?;
                    }
                }
            }
        }
        Command::Verify => {
            for &id in &config.verify.criteria {
                ensure!(CRITERIA.iter().any(|&(i, _)| i == id), "no criterion numbered {id}");
            }
        }
    }
    Ok(Plan {
        command,
        provenance: Provenance::new(config.hash(), seed),
        config,
        function,
        graph,
    })
}

fn dynamics_label(d: &SweepDynamics) -> String {
    match d {
        SweepDynamics::Exclusion { graph, .. } => serde_json::to_value(graph)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_else(|| "exclusion".into()),
        SweepDynamics::Noise { .. } => "noise".into(),
    }
}

fn row<T: Display>(cells: impl IntoIterator<Item = T>) -> Vec<String> {
    cells.into_iter().map(|c| c.to_string()).collect()
}

impl Plan {
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn output_dir(&self) -> Option<std::path::PathBuf> {
        self.config.output.dir.clone()
    }

    fn name(&self, suffix: &str) -> String {
        let stem = self.config.stem(self.command);
        if suffix.is_empty() {
            stem.to_string()
        } else {
            format!("{stem}-{suffix}")
        }
    }

    fn csv(&self, out: &mut Outputs, suffix: &str, table: &CsvTable) {
        out.files.push((format!("{}.csv", self.name(suffix)), table.to_bytes(&self.provenance)));
    }

    fn json<T: serde::Serialize>(&self, out: &mut Outputs, suffix: &str, report: &T) {
        out.files.push((format!("{}.json", self.name(suffix)), json_bytes(&self.provenance, report)));
    }

    pub fn execute(&self) -> Result<Outputs> {
        let mut out = Outputs::new();
        match self.command {
            Command::Spectrum => self.spectrum(&mut out)?,
            Command::Sweep => self.sweep(&mut out)?,
            Command::Exact => self.exact(&mut out)?,
            Command::Couple => self.couple(&mut out)?,
            Command::Perc => self.perc(&mut out)?,
            Command::Verify => self.verify(&mut out),
        }
        Ok(out)
    }

    fn spectrum(&self, out: &mut Outputs) -> Result<()> {
        let f = self.function.as_ref().expect("validated");
        let sp = transform(f)?;
        let mut coeffs = CsvTable::new(["mask", "size", "coefficient"]);
        for (m, c) in sp.coefficients().iter().enumerate() {
            coeffs.push(row([format!("{m:#x}"), m.count_ones().to_string(), c.to_string()]))?;
        }
        self.csv(out, "coefficients", &coeffs);
        let mut levels = CsvTable::new(["level", "energy"]);
        for (k, e) in sp.level_energies().iter().enumerate() {
            levels.push(row([k.to_string(), e.to_string()]))?;
        }
        self.csv(out, "levels", &levels);
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            function: &'a str,
            n: usize,
            mean: f64,
            total_mass: f64,
            monotone: bool,
            influences: xsense_core::boolean::InfluenceReport,
        }
        let summary = Summary {
            function: f.name(),
            n: f.n(),
            mean: f.mean()?,
            total_mass: sp.total_mass(),
            monotone: is_monotone(f)?,
            influences: influences(f)?,
        };
        out.summary.push(format!(
            "{} n={}: mean {}, total influence {}, II {}",
            f.name(),
            f.n(),
            summary.mean,
            summary.influences.total,
            summary.influences.sum_of_squares
        ));
        self.json(out, "summary", &summary);
        Ok(())
    }

    fn sweep(&self, out: &mut Outputs) -> Result<()> {
        let c = &self.config;
        let spec = c.function.as_ref().expect("validated");
        for (k, d) in c.dynamics.iter().enumerate() {
            let rows = sensitivity_sweep(
                spec,
                &c.sizes,
                d,
                c.samples,
                derive_seed(self.provenance.seed, k as u64),
                &c.zoo(),
            )?;
            let mut table = CsvTable::new([
                "family", "n", "bits", "dynamics", "parameter", "value", "estimate", "stderr", "naive_estimate",
                "samples",
            ]);
            for r in &rows {
                table.push(row([
                    r.family.clone(),
                    r.n.to_string(),
                    r.bits.to_string(),
                    r.dynamics.clone(),
                    r.parameter.to_string(),
                    r.value.to_string(),
                    r.result.estimate.to_string(),
                    r.result.stderr.to_string(),
                    r.result.naive_estimate.to_string(),
                    r.result.samples.to_string(),
                ]))?;
                out.summary.push(format!(
                    "{} n={} {} {}={}: {:.5} ± {:.5}",
                    r.family, r.n, r.dynamics, r.parameter, r.value, r.result.estimate, r.result.stderr
                ));
            }
            self.csv(out, &dynamics_label(d), &table);
        }
        Ok(())
    }

    fn exact(&self, out: &mut Outputs) -> Result<()> {
        let c = &self.config;
        let f = self.function.as_ref().expect("validated");
        let g = self.graph.as_ref().expect("validated");
        let sp = transform(f)?;
        if !c.times.is_empty() {
            let mut table = CsvTable::new(["t", "exclusion", "absolute", "eps", "noise"]);
            for &t in &c.times {
                let x = exact_exclusion_correlation_with(&sp, g, t, c.caps.kernel)?;
                let a = exact_absolute_correlation_with(&sp, g, t, c.caps.kernel)?;
                let eps = 1.0 - (-t).exp();
                let noise = sp.noise_correlation(eps)?;
                table.push(row([t, x, a, eps, noise]))?;
                out.summary.push(format!("t={t}: exclusion {x}, absolute {a}, noise at eps={eps}: {noise}"));
            }
            self.csv(out, "", &table);
        }
        if !c.thresholds.is_empty() {
            let mut table = CsvTable::new(["threshold", "mass", "mass_without_conserved"]);
            for &th in &c.thresholds {
                let m = phi_mass_with(&sp, g, th, c.caps.kernel)?;
                table.push(row([m.threshold, m.mass, m.mass_without_conserved]))?;
                out.summary.push(format!("rates <= {th}: mass {}", m.mass));
            }
            self.csv(out, "phi", &table);
        }
        Ok(())
    }

    fn couple(&self, out: &mut Outputs) -> Result<()> {
        let c = &self.config;
        let seed = self.provenance.seed;
        match c.couple.as_ref().expect("validated") {
            CoupleSpec::Triple { t, .. } => {
                let r = triple_check(self.graph.as_ref().expect("validated"), *t, c.samples, seed)?;
                out.success = r.identity_failures == 0;
                out.summary.push(format!("identity failures: {} of {}", r.identity_failures, r.samples));
                self.json(out, "", &r);
            }
            CoupleSpec::N01 { t, occupancy, .. } => {
                let r = n01_statistics(self.graph.as_ref().expect("validated"), *t, c.samples, seed, *occupancy)?;
                for b in &r.buckets {
                    out.summary.push(format!(
                        "|η_0|={}: {} samples, mean {:.4} (expected {:.4}), variance {:.4} (bound {:.4})",
                        b.occupancy, b.count, b.mean, b.expected_mean, b.variance, b.variance_bound
                    ));
                }
                self.json(out, "", &r);
            }
            CoupleSpec::Domination { vertices, set_size, t } => {
                let s = SubsetMask::from_indices(*vertices, 0..*set_size)?;
                let r = domination_check(self.graph.as_ref().expect("validated"), &s, *t, c.samples, seed)?;
                out.summary.push(format!(
                    "eps {:.5}: max CDF excess {:.5} vs band {:.5}: {}",
                    r.eps,
                    r.max_violation,
                    r.band,
                    if r.holds { "holds" } else { "violated" }
                ));
                self.json(out, "", &r);
            }
            CoupleSpec::BoundaryHits { t } => {
                let r = boundary_hit_experiment(self.function.as_ref().expect("validated"), *t, c.samples, seed)?;
                out.summary.push(format!(
                    "hit rate {:.5}, endpoint disagreement {:.5}, II {:.5}",
                    r.hit_rate.estimate, r.endpoint_disagreement.estimate, r.sum_of_squared_influences
                ));
                self.json(out, "", &r);
            }
        }
        Ok(())
    }

    fn perc(&self, out: &mut Outputs) -> Result<()> {
        let c = &self.config;
        let seed = self.provenance.seed;
        let per_size = |k: usize| derive_seed(seed, k as u64);
        let mut table;
        match c.perc.as_ref().expect("validated") {
            PercSpec::Rhombus => {
                table = CsvTable::new(["n", "estimate", "stderr", "samples"]);
                for (k, &n) in c.sizes.iter().enumerate() {
                    let r = rhombus_crossing_probability(n, c.samples, per_size(k))?;
                    table.push(row([n.to_string(), r.estimate.to_string(), r.stderr.to_string(), r.samples.to_string()]))?;
                }
            }
            PercSpec::CompleteCorrelation { t } => {
                table = CsvTable::new(["n", "t", "estimate", "stderr", "naive_estimate", "samples"]);
                for (k, &n) in c.sizes.iter().enumerate() {
                    let r = complete_crossing_correlation(n, *t, c.samples, per_size(k))?;
                    table.push(row([
                        n.to_string(),
                        t.to_string(),
                        r.estimate.to_string(),
                        r.stderr.to_string(),
                        r.naive_estimate.to_string(),
                        r.samples.to_string(),
                    ]))?;
                }
            }
            PercSpec::Switches { horizon } => {
                table = CsvTable::new(["n", "horizon", "mean_switches", "stderr", "trajectories"]);
                for (k, &n) in c.sizes.iter().enumerate() {
                    let r = complete_switch_counts(n, *horizon, c.samples, per_size(k))?;
                    table.push(row([
                        n.to_string(),
                        horizon.to_string(),
                        r.estimate.to_string(),
                        r.stderr.to_string(),
                        r.samples.to_string(),
                    ]))?;
                }
            }
            PercSpec::MediumRange { alpha, t, padding } => {
                table = CsvTable::new([
                    "n", "alpha", "t", "radius", "padding", "sites", "exclusion", "exclusion_stderr", "noise",
                    "noise_stderr",
                ]);
                for r in medium_range_experiment(&c.sizes, *alpha, *t, c.samples, seed, *padding)? {
                    table.push(row([
                        r.n.to_string(),
                        r.alpha.to_string(),
                        r.time.to_string(),
                        r.radius.to_string(),
                        r.padding.to_string(),
                        r.sites.to_string(),
                        r.exclusion.estimate.to_string(),
                        r.exclusion.stderr.to_string(),
                        r.baseline.estimate.to_string(),
                        r.baseline.stderr.to_string(),
                    ]))?;
                }
            }
            PercSpec::SubboxFlip { alpha, t } => {
                table = CsvTable::new(["n", "alpha", "t", "estimate", "stderr", "samples"]);
                for (k, &n) in c.sizes.iter().enumerate() {
                    let r = subbox_flip_probability(n, *alpha, *t, c.samples, per_size(k))?;
                    table.push(row([
                        n.to_string(),
                        alpha.to_string(),
                        t.to_string(),
                        r.estimate.to_string(),
                        r.stderr.to_string(),
                        r.samples.to_string(),
                    ]))?;
                }
            }
        }
        for r in table.rows() {
            out.summary.push(
                table
                    .columns()
                    .iter()
                    .zip(r)
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        self.csv(out, "", &table);
        Ok(())
    }

    fn verify(&self, out: &mut Outputs) {
        let v = &self.config.verify;
        let ids: Vec<u8> = if v.criteria.is_empty() {
            CRITERIA.iter().map(|&(i, _)| i).collect()
        } else {
            v.criteria.clone()
        };
        let mut outcomes: Vec<CriterionOutcome> = Vec::new();
        for id in ids {
            let o = run_criterion(id, v.scale, self.provenance.seed);
            println!("{o}");
            outcomes.push(o);
        }
        let passed = outcomes.iter().filter(|o| o.passed).count();
        out.success = passed == outcomes.len();
        out.summary.push(format!("{passed}/{} criteria passed", outcomes.len()));
        if self.config.output.dir.is_some() {
            #[derive(serde::Serialize)]
            struct Entry<'a> {
                id: u8,
                title: &'a str,
                passed: bool,
                detail: &'a str,
            }
            let entries: Vec<Entry> = outcomes
                .iter()
                .map(|o| Entry {
                    id: o.id,
                    title: o.title,
                    passed: o.passed,
                    detail: &o.detail,
                })
                .collect();
            self.json(out, "", &entries);
        }
    }
}
