use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use critgraph::continuum::LimitComponentSampler;
use critgraph::encoding::{decode, encode_graph, MarkedWalk};
use critgraph::exploration::{bfs_walk, odfs, ExplorationTrace};
use critgraph::graph::{critical_p, generate_gnp, partition, LabeledGraph};
use critgraph::harness::{self, emit, ExperimentConfig, ExperimentKind, Format};
use critgraph::rng::RngStream;
use critgraph::samplers::{oracle_component, ComponentSampler, Strategy, TiltedTreeSampler};

#[derive(Parser)]
#[command(name = "critgraph", version, about = "Critical random graphs and their continuum limits")]
struct Cli {
    /// Seed for every random choice; required by sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, or directory for `experiment`; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample G(n, p) and write it as an edge list.
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "lambda")]
        p: Option<f64>,
        /// Critical-window parameter: p = 1/n + λ n^{-4/3}.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
    },
    /// Run oDFS (or the breadth-first walk) on an edge list.
    Explore {
        input: PathBuf,
        #[arg(long)]
        bfs: bool,
    },
    /// Encode a connected edge list as a marked walk, or decode one.
    Encode {
        input: PathBuf,
        /// Treat the input as marked-walk JSON and write the graph.
        #[arg(long)]
        decode: bool,
    },
    /// Draw tilted trees, one parent array per line.
    SampleTilted {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Draw a component conditioned on its size.
    Component {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: f64,
        /// Use rejection from G(n, p) with this n instead of the tilted construction.
        #[arg(long)]
        oracle_n: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Draw a limit component M^(σ) and write it as JSON.
    Limit(LimitArgs),
    /// Run a Monte Carlo experiment and emit its report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long, default_value_t = 10_000)]
    proposals: usize,
    #[arg(long, default_value_t = 32)]
    k_samples: usize,
    /// Also write the coding excursion as CSV here.
    #[arg(long)]
    excursion_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    DiameterScaling,
    SurplusLaw,
    SizeLaw,
    TailBounds,
    BijectionAudit,
    GhBoundAudit,
    LimitComponent,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::DiameterScaling => ExperimentKind::DiameterScaling,
            Kind::SurplusLaw => ExperimentKind::SurplusLaw,
            Kind::SizeLaw => ExperimentKind::SizeLaw,
            Kind::TailBounds => ExperimentKind::TailBounds,
            Kind::BijectionAudit => ExperimentKind::BijectionAudit,
            Kind::GhBoundAudit => ExperimentKind::GhBoundAudit,
            Kind::LimitComponent => ExperimentKind::LimitComponent,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    kind: Option<Kind>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    proposals: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn need_seed(seed: Option<u64>) -> Result<u64> {
    seed.context("--seed is required; there is no ambient entropy")
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn read_graph(path: &Path) -> Result<LabeledGraph> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(LabeledGraph::read_edge_list(BufReader::new(f))?)
}

fn trace_json(t: &ExplorationTrace) -> serde_json::Value {
    serde_json::json!({
        "order": t.order.iter().map(|v| v + 1).collect::<Vec<_>>(),
        "walk": t.walk,
        "counter": t.counter,
        "components": t.components(),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = || sink(&cli.out);
    match cli.cmd {
        Command::Gnp { n, p, lambda } => {
            let p = match (p, lambda) {
                (Some(p), _) => p,
                (None, Some(l)) => critical_p(n, l),
                (None, None) => bail!("give --p or --lambda"),
            };
            let g = generate_gnp(n, p, &mut RngStream::new(need_seed(cli.seed)?, 0).rng())?;
            let parts = partition(&g);
            info!("G({n}, {p}): {} edges, {} components, largest {:?}", g.edge_count(), parts.len(), parts.sizes().first());
            g.write_edge_list(out()?)?;
        }
        Command::Explore { input, bfs } => {
            let g = read_graph(&input)?;
            let t = if bfs { bfs_walk(&g) } else { odfs(&g) };
            writeln!(out()?, "{}", trace_json(&t))?;
        }
        Command::Encode { input, decode: dec } => {
            if dec {
                let mw = MarkedWalk::from_json(&fs::read_to_string(&input)?)?;
                decode(&mw).write_edge_list(out()?)?;
            } else {
                writeln!(out()?, "{}", encode_graph(&read_graph(&input)?)?.to_json()?)?;
            }
        }
        Command::SampleTilted { m, p, count, exhaustive } => {
            let mut s = if exhaustive {
                TiltedTreeSampler::with_strategy(m, p, Strategy::Exhaustive)?
            } else {
                TiltedTreeSampler::new(m, p)?
            };
            let mut rng = RngStream::new(need_seed(cli.seed)?, 0).rng();
            let mut w = out()?;
            for _ in 0..count {
                let t = s.sample(&mut rng)?;
                let parents: Vec<u32> = t.parents().iter().map(|q| q.map_or(0, |q| q + 1)).collect();
                writeln!(w, "{}", serde_json::json!({ "parent": parents, "area": t.area() }))?;
            }
            eprintln!("{}", serde_json::to_string(s.diagnostics())?);
        }
        Command::Component { m, p, oracle_n, budget } => {
            let mut rng = RngStream::new(need_seed(cli.seed)?, 0).rng();
            let c = match oracle_n {
                Some(n) => oracle_component(n, p, m, budget, &mut rng)?,
                None => ComponentSampler::new(m, p)?.sample(&mut rng)?,
            };
            info!("component of size {} with surplus {}", c.size(), c.surplus);
            c.graph.write_edge_list(out()?)?;
        }
        Command::Limit(a) => {
            let mut rng = RngStream::new(need_seed(cli.seed)?, 0).rng();
            let s = LimitComponentSampler::new(a.sigma, a.grid, a.proposals, a.k_samples, &mut rng)?;
            let d = s.draw(&mut rng)?;
            if let Some(p) = &a.excursion_csv {
                d.excursion.write_csv(fs::File::create(p)?)?;
            }
            info!("{} identifications, diameter {}", d.space.identifications.len(), d.space.diameter());
            writeln!(out()?, "{}", d.space.to_json()?)?;
        }
        Command::Experiment(a) => return experiment(a, cli.seed, cli.threads, cli.out),
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ExperimentConfig::new(a.kind.expect("clap requires kind").into(), need_seed(seed)?),
    };
    if let Some(k) = a.kind {
        cfg.kind = k.into();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !a.n.is_empty() {
        cfg.n = a.n;
    }
    if !a.m.is_empty() {
        cfg.m = a.m;
    }
    cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
    cfg.sigma = a.sigma.unwrap_or(cfg.sigma);
    cfg.replicates = a.replicates.or(cfg.replicates);
    cfg.grid = a.grid.or(cfg.grid);
    cfg.proposals = a.proposals.or(cfg.proposals);
    cfg.threads = threads.or(cfg.threads);
    let dir = out.or(cfg.output.take());
    let report = harness::run(&cfg)?;
    for t in &report.tests {
        let range = match (t.lower, t.upper) {
            (Some(l), Some(u)) => format!("in [{l}, {u}]"),
            (None, Some(u)) => format!("<= {u}"),
            (Some(l), None) => format!(">= {l}"),
            (None, None) => String::new(),
        };
        println!("{} {} = {:.6} {range}", if t.passed { "PASS" } else { "FAIL" }, t.name, t.statistic);
    }
    for s in &report.estimates {
        match s.std_error {
            Some(se) => println!("  {} = {:.6} ± {:.6} (n = {})", s.name, s.value, se, s.replicates),
            None => println!("  {} = {:.6} (n = {})", s.name, s.value, s.replicates),
        }
    }
    if let Some(dir) = dir {
        for p in emit(&report, &dir, Format::Json)?.into_iter().chain(emit(&report, &dir, Format::Csv)?) {
            info!("wrote {}", p.display());
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
