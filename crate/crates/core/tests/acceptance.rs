//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Run with `cargo test --release -p critgraph --test acceptance`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use critgraph::encoding::encode_graph;
use critgraph::enumerate::{all_connected_graphs, edge_mask, graph_from_mask};
use critgraph::harness::{self, ExperimentConfig, ExperimentKind, Report};
use critgraph::rng::stream;
use critgraph::samplers::{oracle_component, ComponentSampler, Strategy, TiltedTreeSampler};
use critgraph::stats::{chi_square_gof, counts, total_variation};

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
    secs: f64,
}

fn summarize(report: &Report, tests: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in tests {
        match report.test(name) {
            Some(t) => {
                ok &= t.passed;
                parts.push(format!("{name}={:.4}", t.statistic));
            }
            None => {
                ok = false;
                parts.push(format!("{name}=missing"));
            }
        }
    }
    (ok, parts.join(" "))
}

fn experiment(kind: ExperimentKind, seed: u64, edit: impl FnOnce(&mut ExperimentConfig)) -> Report {
    let mut cfg = ExperimentConfig::new(kind, seed);
    edit(&mut cfg);
    harness::run(&cfg).unwrap_or_else(|e| panic!("{} failed to run: {e}", kind.name()))
}

/// Law of the tree under the tilt `(1−p)^{−a(T)}`, where `2^{a(T)}` is
/// counted as the number of connected graphs that encode to `T`.
fn fibre_law(m: usize, p: f64) -> BTreeMap<u64, f64> {
    let mut fibre: BTreeMap<u64, u64> = BTreeMap::new();
    for mask in all_connected_graphs(m) {
        let t = encode_graph(&graph_from_mask(m, mask)).unwrap().tree;
        *fibre.entry(edge_mask(&t.to_graph())).or_default() += 1;
    }
    let w: BTreeMap<u64, f64> =
        fibre.into_iter().map(|(k, c)| (k, (1.0 - p).powf(-(c as f64).log2()))).collect();
    let z: f64 = w.values().sum();
    w.into_iter().map(|(k, x)| (k, x / z)).collect()
}

fn tilted_counts(m: usize, p: f64, reps: usize, seed: u64) -> BTreeMap<u64, usize> {
    let mut s = TiltedTreeSampler::with_strategy(m, p, Strategy::Exhaustive).unwrap();
    let mut r = stream(seed, 0);
    counts((0..reps).map(|_| edge_mask(&s.sample(&mut r).unwrap().to_graph())))
}

fn component_vs_oracle() -> (bool, String) {
    let reps = 100_000;
    let mut r = stream(2, 0);
    let mut s = ComponentSampler::new(3, 0.4).unwrap();
    let a = counts((0..reps).map(|_| edge_mask(&s.sample(&mut r).unwrap().graph)));
    let mut r = stream(2, 1);
    let b = counts((0..reps).map(|_| edge_mask(&oracle_component(4, 0.4, 3, 10_000, &mut r).unwrap().graph)));
    let tv = total_variation(&a, &b);
    (tv <= 0.02, format!("tv={tv:.4} (<= 0.02)"))
}

fn tilted_law_exact() -> (bool, String) {
    let exact = fibre_law(5, 0.3);
    let c = tilted_counts(5, 0.3, 100_000, 3);
    let obs: Vec<f64> = exact.keys().map(|k| *c.get(k).unwrap_or(&0) as f64).collect();
    let probs: Vec<f64> = exact.values().copied().collect();
    let strays = c.keys().filter(|k| !exact.contains_key(k)).count();
    let chi = chi_square_gof(&obs, &probs).unwrap();
    let small = fibre_law(3, 0.5);
    let mut law: Vec<f64> = small.values().copied().collect();
    law.sort_by(|a, b| b.total_cmp(a));
    let derived_ok = law.len() == 3 && [0.5, 0.25, 0.25].iter().zip(&law).all(|(a, b)| (a - b).abs() < 1e-12);
    let c3 = tilted_counts(3, 0.5, 100_000, 33);
    let worst = small.iter().map(|(k, q)| (*c3.get(k).unwrap_or(&0) as f64 / 1e5 - q).abs()).fold(0.0, f64::max);
    let ok = exact.len() == 125 && strays == 0 && chi.p_value > 1e-3 && derived_ok && worst <= 0.01;
    (ok, format!("trees={} p_value={:.4} (> 0.001) m3_law={law:?} m3_dev={worst:.4} (<= 0.01)", exact.len(), chi.p_value))
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let mut record = |id, title, f: &mut dyn FnMut() -> (bool, String)| {
        let t = Instant::now();
        let (passed, detail) = f();
        let line = Line { id, title, passed, detail, secs: t.elapsed().as_secs_f64() };
        println!("{} {:>2} {}: {} [{:.1}s]", if line.passed { "PASS" } else { "FAIL" }, line.id, line.title, line.detail, line.secs);
        lines.push(line);
    };

    record(1, "bijection exactness", &mut || {
        let r = experiment(ExperimentKind::BijectionAudit, 1, |c| c.m = vec![6, 7]);
        let (ok, d) = summarize(&r, &["decode_encode_failures", "encode_decode_failures", "count_mismatches", "permitted_edge_failures"]);
        let counts_ok = [(4, 38.0), (5, 728.0), (6, 26704.0)]
            .iter()
            .all(|&(m, n)| r.estimate(&format!("connected_graphs_m{m}")).is_some_and(|s| s.value == n));
        (ok && counts_ok, format!("{d} counts_38_728_26704={counts_ok}"))
    });
    record(2, "component sampler vs G(n,p) oracle", &mut component_vs_oracle);
    record(3, "tilted tree law", &mut tilted_law_exact);

    let mut gh = None;
    record(4, "discrete distortion bound", &mut || {
        let r = experiment(ExperimentKind::GhBoundAudit, 4, |c| {
            c.replicates = Some(10_000);
            c.pairs = Some(1000);
        });
        let out = summarize(&r, &["shortcut_violations"]);
        gh = Some(r);
        out
    });
    let gh = gh.expect("criterion 4 ran");
    record(5, "glued-space distortion bound", &mut || summarize(&gh, &["glued_pair_violations"]));

    record(6, "surplus law", &mut || {
        let r = experiment(ExperimentKind::SurplusLaw, 6, |c| {
            c.m = vec![400];
            c.replicates = Some(10_000);
        });
        summarize(&r, &["surplus_dispersion", "mean_vs_tilted_area"])
    });
    record(7, "largest component size law", &mut || {
        let r = experiment(ExperimentKind::SizeLaw, 7, |c| {
            c.n = vec![100_000];
            c.replicates = Some(2000);
            c.horizon = Some(3.0);
            c.dt = Some(1e-3);
        });
        summarize(&r, &["ks_largest_vs_longest"])
    });
    record(8, "diameter scaling", &mut || {
        let r = experiment(ExperimentKind::DiameterScaling, 8, |c| {
            c.n = vec![50_000, 200_000];
            c.replicates = Some(2000);
        });
        summarize(&r, &["ks_smallest_vs_largest_n", "mean_relative_change"])
    });

    let mut limit = None;
    record(9, "continuum diameter consistency", &mut || {
        let r = experiment(ExperimentKind::LimitComponent, 9, |c| {
            c.m = vec![2500];
            c.replicates = Some(10_000);
            c.diameters = Some(2000);
        });
        let out = summarize(&r, &["ks_limit_vs_discrete_diameter"]);
        limit = Some(r);
        out
    });
    let limit = limit.expect("criterion 9 ran");
    record(10, "limit object structure", &mut || summarize(&limit, &["conditional_dispersion", "cut_ratio_ks_uniform"]));

    record(11, "tail bound shape", &mut || {
        let r = experiment(ExperimentKind::TailBounds, 11, |c| {
            c.m = vec![100, 1000, 10_000];
            c.replicates = Some(10_000);
        });
        let (ok, d) = summarize(&r, &["tail_slope_negative_m100", "tail_slope_negative_m1000", "tail_slope_negative_m10000"]);
        let fits: Vec<String> = [100, 1000, 10_000]
            .iter()
            .map(|m| {
                let get = |k: &str| r.estimate(&format!("{k}_m{m}")).map_or(f64::NAN, |s| s.value);
                format!("m={m}: alpha={:.3} C*={:.3}", get("alpha"), get("dominating_c"))
            })
            .collect();
        (ok, format!("{d} {}", fits.join(", ")))
    });

    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
