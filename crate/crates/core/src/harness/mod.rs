//! Experiment configuration, replicate-parallel orchestration, and reports.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(seed, phase, replicate)`, so a report depends on the config alone and
//! not on how many worker threads ran it.

mod experiments;

pub use experiments::{fit_tail, shortcut_instance, glued_pair_instance, TailFit};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Rng, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DiameterScaling,
    SurplusLaw,
    SizeLaw,
    TailBounds,
    BijectionAudit,
    GhBoundAudit,
    LimitComponent,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DiameterScaling => "diameter_scaling",
            ExperimentKind::SurplusLaw => "surplus_law",
            ExperimentKind::SizeLaw => "size_law",
            ExperimentKind::TailBounds => "tail_bounds",
            ExperimentKind::BijectionAudit => "bijection_audit",
            ExperimentKind::GhBoundAudit => "gh_bound_audit",
            ExperimentKind::LimitComponent => "limit_component",
        }
    }
}

/// One flat config for every experiment kind; fields a kind does not use are
/// ignored, and unset optional fields take kind-specific defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub replicates: Option<usize>,
    /// Excursion grid steps `N`.
    pub grid: Option<usize>,
    /// SIR pool size `K`.
    pub proposals: Option<usize>,
    /// Sample times per glued space.
    pub k_samples: Option<usize>,
    /// Independent tilted-tree chains.
    pub chains: Option<usize>,
    /// Glued-space pairs in `gh_bound_audit`.
    pub pairs: Option<usize>,
    /// Diameter replicates in `limit_component`.
    pub diameters: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

fn default_sigma() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            n: Vec::new(),
            m: Vec::new(),
            lambda: 0.0,
            sigma: 1.0,
            replicates: None,
            grid: None,
            proposals: None,
            k_samples: None,
            chains: None,
            pairs: None,
            diameters: None,
            horizon: None,
            dt: None,
            threads: None,
            output: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replicates == Some(0) {
            return bad("replicates must be at least 1".into());
        }
        if !(-3.0..=3.0).contains(&self.lambda) {
            return bad(format!("λ = {} lies outside [−3, 3]", self.lambda));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("σ = {} must be positive", self.sigma));
        }
        if self.grid.is_some_and(|g| g < 2) || self.k_samples.is_some_and(|k| k < 2) {
            return bad("grid and k_samples must be at least 2".into());
        }
        if self.proposals.is_some_and(|k| k < 2) {
            return bad("proposals must be at least 2".into());
        }
        if self.chains == Some(0) || self.threads == Some(0) {
            return bad("chains and threads must be positive".into());
        }
        if self.horizon.is_some_and(|t| !(t > 0.0)) || self.dt.is_some_and(|d| !(d > 0.0)) {
            return bad("horizon and dt must be positive".into());
        }
        if self.n.contains(&0) || self.m.contains(&0) {
            return bad("sizes must be positive".into());
        }
        Ok(())
    }

    fn replicates_or(&self, d: usize) -> usize {
        self.replicates.unwrap_or(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl TestOutcome {
    /// Passes when `lower ≤ statistic ≤ upper` for whichever bounds are set.
    pub fn within(name: &str, statistic: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = statistic.is_finite() && lower.is_none_or(|l| statistic >= l) && upper.is_none_or(|u| statistic <= u);
        Self { name: name.into(), statistic, lower, upper, passed }
    }

    pub fn at_most(name: &str, statistic: f64, upper: f64) -> Self {
        Self::within(name, statistic, None, Some(upper))
    }
}

/// Raw samples, emitted as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = S>, S: ToString>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub estimates: Vec<Statistic>,
    pub tests: Vec<TestOutcome>,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            kind: config.kind,
            config: config.clone(),
            estimates: Vec::new(),
            tests: Vec::new(),
            notes: Vec::new(),
            runtime_secs: 0.0,
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.tests.iter().all(|t| t.passed)
    }

    pub fn test(&self, name: &str) -> Option<&TestOutcome> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<&Statistic> {
        self.estimates.iter().find(|s| s.name == name)
    }

    fn stat(&mut self, name: &str, value: f64, std_error: Option<f64>, replicates: usize) {
        let seed = self.config.seed;
        self.estimates.push(Statistic { name: name.into(), value, std_error, replicates, seed });
    }

    fn mean_stat(&mut self, name: &str, xs: &[f64]) {
        let e = crate::stats::Estimate::of(xs);
        self.stat(name, e.value, Some(e.std_error), e.n);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Writes the report (`<kind>.json`) or its sample tables
/// (`<kind>_<table>.csv`) into `dir`, returning the paths written.
pub fn emit(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let kind = report.kind.name();
    match format {
        Format::Json => {
            let path = dir.join(format!("{kind}.json"));
            fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
            Ok(vec![path])
        }
        Format::Csv => {
            let mut out = Vec::new();
            for t in &report.tables {
                let path = dir.join(format!("{kind}_{}.csv", t.name));
                t.write_csv(fs::File::create(&path)?)?;
                out.push(path);
            }
            Ok(out)
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(cfg);
    let ctx = Ctx { seed: cfg.seed, pool: thread_pool(cfg.threads)? };
    match cfg.kind {
        ExperimentKind::DiameterScaling => experiments::diameter_scaling(cfg, &ctx, &mut report)?,
        ExperimentKind::SurplusLaw => experiments::surplus_law(cfg, &ctx, &mut report)?,
        ExperimentKind::SizeLaw => experiments::size_law(cfg, &ctx, &mut report)?,
        ExperimentKind::TailBounds => experiments::tail_bounds(cfg, &ctx, &mut report)?,
        ExperimentKind::BijectionAudit => experiments::bijection_audit(cfg, &ctx, &mut report)?,
        ExperimentKind::GhBoundAudit => experiments::gh_bound_audit(cfg, &ctx, &mut report)?,
        ExperimentKind::LimitComponent => experiments::limit_component(cfg, &ctx, &mut report)?,
    }
    report.runtime_secs = start.elapsed().as_secs_f64();
    if let Some(dir) = &cfg.output {
        emit(&report, dir, Format::Json)?;
        emit(&report, dir, Format::Csv)?;
    }
    Ok(report)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::InvalidParameter(e.to_string()))
}

struct Ctx {
    seed: u64,
    pool: rayon::ThreadPool,
}

impl Ctx {
    /// The stream of replicate `i` within phase `phase`.
    fn rng(&self, phase: u64, i: usize) -> Rng {
        RngStream::new(self.seed, 0).derive(phase).substream(i as u64).rng()
    }

    /// `f` over replicates `0..count` in parallel, results in replicate order.
    fn replicates<T, F>(&self, phase: u64, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut Rng) -> Result<T> + Sync,
    {
        self.pool.install(|| (0..count).into_par_iter().map(|i| f(i, &mut self.rng(phase, i))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind, 11);
        c.replicates = Some(40);
        c
    }

    #[test]
    fn seed_is_required() {
        assert!(ExperimentConfig::from_json(r#"{"kind":"surplus_law"}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"kind":"surplus_law","seed":3,"m":[50]}"#).unwrap();
        assert_eq!((c.seed, c.m.clone(), c.sigma), (3, vec![50], 1.0));
        assert!(ExperimentConfig::from_json(r#"{"kind":"size_law","seed":1,"replicates":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind":"size_law","seed":1,"lambda":4}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind":"size_law","seed":1,"colour":4}"#).is_err());
    }

    #[test]
    fn bijection_audit_m5() {
        let mut c = ExperimentConfig::new(ExperimentKind::BijectionAudit, 1);
        c.m = vec![5];
        let r = run(&c).unwrap();
        assert!(r.passed(), "{:?}", r.tests);
        assert_eq!(r.estimate("connected_graphs_m5").unwrap().value, 728.0);
    }

    #[test]
    fn empty_table_has_header_only() {
        let t = Table::new("x", &["a", "b"]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n");
    }

    #[test]
    fn diameter_schema_and_determinism_across_threads() {
        let mut c = tiny(ExperimentKind::DiameterScaling);
        c.n = vec![500, 2000];
        let dir = tempfile::tempdir().unwrap();
        c.threads = Some(1);
        let a = run(&c).unwrap();
        let pa = emit(&a, dir.path(), Format::Csv).unwrap();
        let first = fs::read(&pa[0]).unwrap();
        c.threads = Some(3);
        let b = run(&c).unwrap();
        let pb = emit(&b, &dir.path().join("again"), Format::Csv).unwrap();
        assert_eq!(first, fs::read(&pb[0]).unwrap());
        assert!(String::from_utf8(first).unwrap().starts_with("n,replicate,D,D_over_n13\n"));
        assert_eq!(a.tests, b.tests);
        let json = emit(&a, dir.path(), Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json[0]).unwrap()).unwrap();
        assert_eq!(v["config"]["seed"], 11);
        assert!(v["tests"][0]["statistic"].is_number());
    }

    #[test]
    fn every_kind_runs_small() {
        let mut c = tiny(ExperimentKind::SurplusLaw);
        c.m = vec![30];
        c.proposals = Some(200);
        c.grid = Some(64);
        c.chains = Some(2);
        assert_eq!(run(&c).unwrap().tables[0].rows.len(), 40);

        let mut c = tiny(ExperimentKind::SizeLaw);
        c.n = vec![1000];
        c.dt = Some(0.01);
        assert_eq!(run(&c).unwrap().tests.len(), 1);

        let mut c = tiny(ExperimentKind::TailBounds);
        c.m = vec![50];
        c.replicates = Some(500);
        let r = run(&c).unwrap();
        assert!(r.estimate("alpha_m50").is_some());

        let mut c = tiny(ExperimentKind::GhBoundAudit);
        c.pairs = Some(10);
        assert!(run(&c).unwrap().passed());

        let mut c = tiny(ExperimentKind::LimitComponent);
        c.grid = Some(128);
        c.proposals = Some(100);
        c.k_samples = Some(8);
        c.m = vec![30];
        c.diameters = Some(10);
        assert!(run(&c).unwrap().estimate("mean_limit_diameter").is_some());
    }
}
