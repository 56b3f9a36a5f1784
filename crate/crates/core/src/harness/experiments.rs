use log::info;
use rand::Rng as _;

use super::{Ctx, ExperimentConfig, Report, Table, TestOutcome};
use crate::continuum::{
    brownian_excursion, extract_excursions, glue, modulus, reflected_parabolic, sup_distance, Excursion, GridProfile,
    LimitComponentSampler, PlanarPoints, TiltedPool,
};
use crate::encoding::{build_gh, decode, decode_gx, encode_graph, PointSet};
use crate::enumerate::{all_connected_graphs, all_trees, connected_graph_count, graph_from_mask};
use crate::error::Result;
use crate::exploration::{depth_first_walk, height_process, permitted_edges, RootedOrderedTree};
use crate::graph::{all_pairs, connected_diameter, critical_p, generate_gnp, graph_diameter, partition, Component};
use crate::metric::{distortion, hausdorff, Correspondence};
use crate::rng::Rng;
use crate::samplers::{uniform_tree, ComponentSampler};
use crate::stats::{ks_one_sample, ks_two_sample, linear_fit, mean, variance};

/// Draws `count` items from `chains` independent samplers, chain `c` owning
/// stream `c` of `phase`.
fn from_chains<T, S, F>(ctx: &Ctx, phase: u64, count: usize, chains: usize, make: S, draw: F) -> Result<Vec<T>>
where
    T: Send,
    S: Fn() -> Result<ComponentSampler> + Sync,
    F: Fn(&mut ComponentSampler, &mut Rng) -> Result<T> + Sync,
{
    let chains = chains.min(count).max(1);
    let per = count.div_ceil(chains);
    let parts = ctx.replicates(phase, chains, |c, rng| {
        let mut s = make()?;
        let k = per.min(count.saturating_sub(c * per));
        (0..k).map(|_| draw(&mut s, rng)).collect::<Result<Vec<T>>>()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub(super) fn diameter_scaling(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let sizes = if cfg.n.is_empty() { vec![50_000, 200_000] } else { cfg.n.clone() };
    let reps = cfg.replicates_or(2000);
    let mut table = Table::new("samples", &["n", "replicate", "D", "D_over_n13"]);
    let mut laws = Vec::new();
    for (phase, &n) in sizes.iter().enumerate() {
        let p = critical_p(n, cfg.lambda);
        let d = ctx.replicates(phase as u64, reps, |_, rng| Ok(graph_diameter(&generate_gnp(n, p, rng)?)))?;
        let scale = (n as f64).powf(-1.0 / 3.0);
        let scaled: Vec<f64> = d.iter().map(|&x| x as f64 * scale).collect();
        for (i, (&x, &s)) in d.iter().zip(&scaled).enumerate() {
            table.push([n.to_string(), i.to_string(), x.to_string(), s.to_string()]);
        }
        report.mean_stat(&format!("mean_D_over_n13_n{n}"), &scaled);
        info!("diameter_scaling n={n}: mean {}", mean(&scaled));
        laws.push(scaled);
    }
    if laws.len() >= 2 {
        let (a, b) = (&laws[0], &laws[laws.len() - 1]);
        report.tests.push(TestOutcome::at_most("ks_smallest_vs_largest_n", ks_two_sample(a, b), 0.05));
        report.tests.push(TestOutcome::at_most("mean_relative_change", (mean(b) / mean(a) - 1.0).abs(), 0.05));
    }
    report.tables.push(table);
    Ok(())
}

pub(super) fn surplus_law(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let m = cfg.m.first().copied().unwrap_or(400);
    let p = (m as f64).powf(-1.5);
    let reps = cfg.replicates_or(10_000);
    let rows = from_chains(ctx, 0, reps, cfg.chains.unwrap_or(4), || ComponentSampler::new(m, p), |s, rng| {
        let c = s.sample(rng)?;
        Ok((c.surplus as f64, s.tilted.diagnostics().acceptance_rate))
    })?;
    let surplus: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut table = Table::new("samples", &["replicate", "surplus"]);
    for (i, s) in surplus.iter().enumerate() {
        table.push([i.to_string(), s.to_string()]);
    }
    report.tables.push(table);
    let sigma = m as f64 * p.powf(2.0 / 3.0);
    let pool = TiltedPool::build(sigma, cfg.grid.unwrap_or(1024), cfg.proposals.unwrap_or(100_000), &mut ctx.rng(1, 0))?;
    let continuum = pool.tilted_mean_area();
    let dispersion = variance(&surplus) / mean(&surplus);
    report.mean_stat("mean_surplus", &surplus);
    report.stat("surplus_dispersion", dispersion, None, reps);
    report.stat("tilted_mean_area", continuum, None, pool.len());
    report.stat("sir_effective_sample_size", pool.effective_sample_size(), None, pool.len());
    report.stat("chain_acceptance_rate", mean(&rows.iter().map(|r| r.1).collect::<Vec<_>>()), None, rows.len());
    report.tests.push(TestOutcome::within("surplus_dispersion", dispersion, Some(0.9), Some(1.1)));
    report.tests.push(TestOutcome::at_most("mean_vs_tilted_area", (mean(&surplus) / continuum - 1.0).abs(), 0.10));
    Ok(())
}

pub(super) fn size_law(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let n = cfg.n.first().copied().unwrap_or(100_000);
    let reps = cfg.replicates_or(2000);
    let p = critical_p(n, cfg.lambda);
    let scale = (n as f64).powf(-2.0 / 3.0);
    let discrete = ctx.replicates(0, reps, |_, rng| {
        let g = generate_gnp(n, p, rng)?;
        Ok(partition(&g).sizes().first().copied().unwrap_or(0) as f64 * scale)
    })?;
    let horizon = cfg.horizon.unwrap_or(3.0 + cfg.lambda.abs());
    let dt = cfg.dt.unwrap_or(1e-3);
    let lambda = cfg.lambda;
    let continuum = ctx.replicates(1, reps, |_, rng| {
        let ex = extract_excursions(&reflected_parabolic(lambda, horizon, dt, rng)?);
        Ok((ex.first().map_or(0.0, |e| e.length), ex.first().is_some_and(|e| e.touches_horizon)))
    })?;
    let truncated = continuum.iter().filter(|c| c.1).count();
    if truncated > 0 {
        report.notes.push(format!("{truncated} of {reps} longest excursions reach the horizon T = {horizon}"));
    }
    let longest: Vec<f64> = continuum.iter().map(|c| c.0).collect();
    let mut table = Table::new("samples", &["source", "replicate", "value"]);
    for (i, x) in discrete.iter().enumerate() {
        table.push(["graph".to_string(), i.to_string(), x.to_string()]);
    }
    for (i, x) in longest.iter().enumerate() {
        table.push(["reflected".to_string(), i.to_string(), x.to_string()]);
    }
    report.tables.push(table);
    report.mean_stat("mean_largest_over_n23", &discrete);
    report.mean_stat("mean_longest_excursion", &longest);
    report.tests.push(TestOutcome::at_most("ks_largest_vs_longest", ks_two_sample(&discrete, &longest), 0.05));
    Ok(())
}

/// Fit of `ln P(‖X‖ ≥ x√m)` against `x²` on the upper half of the sample.
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    /// Smallest `C` with `P(x) ≤ C e^{−αx²}` on every grid point.
    pub dominating_c: f64,
    pub points: usize,
}

pub fn fit_tail(scaled: &[f64]) -> TailFit {
    let mut xs = scaled.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let median = xs[xs.len() / 2];
    let tail = |x: f64| (xs.len() - xs.partition_point(|&v| v < x)) as f64 / n;
    let step = 0.05;
    let grid: Vec<f64> = (0..).map(|k| k as f64 * step).take_while(|&x| tail(x) * n >= 10.0).collect();
    let fit: Vec<f64> = grid.iter().copied().filter(|&x| x >= median).collect();
    let (slope, intercept) = if fit.len() >= 2 {
        let x2: Vec<f64> = fit.iter().map(|x| x * x).collect();
        let lp: Vec<f64> = fit.iter().map(|&x| tail(x).ln()).collect();
        linear_fit(&x2, &lp)
    } else {
        (f64::NAN, f64::NAN)
    };
    let alpha = -slope;
    let dominating_c = grid.iter().map(|&x| tail(x) * (alpha * x * x).exp()).fold(0.0, f64::max);
    TailFit { slope, intercept, dominating_c, points: fit.len() }
}

pub(super) fn tail_bounds(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let sizes = if cfg.m.is_empty() { vec![100, 1000, 10_000] } else { cfg.m.clone() };
    let reps = cfg.replicates_or(10_000);
    let mut table = Table::new("samples", &["m", "replicate", "sup_norm", "scaled"]);
    for (phase, &m) in sizes.iter().enumerate() {
        let sup = ctx.replicates(phase as u64, reps, |_, rng| Ok(depth_first_walk(&uniform_tree(m, rng)).sup_norm()))?;
        let scaled: Vec<f64> = sup.iter().map(|&s| s as f64 / (m as f64).sqrt()).collect();
        for (i, (s, x)) in sup.iter().zip(&scaled).enumerate() {
            table.push([m.to_string(), i.to_string(), s.to_string(), x.to_string()]);
        }
        let f = fit_tail(&scaled);
        report.stat(&format!("alpha_m{m}"), -f.slope, None, reps);
        report.stat(&format!("intercept_m{m}"), f.intercept, None, reps);
        report.stat(&format!("dominating_c_m{m}"), f.dominating_c, None, reps);
        report.stat(&format!("fit_points_m{m}"), f.points as f64, None, reps);
        report.tests.push(TestOutcome::at_most(&format!("tail_slope_negative_m{m}"), f.slope, -f64::MIN_POSITIVE));
    }
    report.tables.push(table);
    Ok(())
}

/// Every `(T, Q)` with `Q` under the walk of `T`.
fn marked_pairs(m: usize) -> impl Iterator<Item = (RootedOrderedTree, PointSet)> {
    all_trees(m).into_iter().flat_map(|t| {
        let w = t.walk();
        let cells: Vec<(u32, u32)> =
            w.iter().enumerate().flat_map(|(i, &x)| (1..=x.max(0) as u32).map(move |j| (i as u32, j))).collect();
        (0..1u64 << cells.len()).map(move |sub| {
            let q = PointSet::new((0..cells.len()).filter(|&b| sub >> b & 1 == 1).map(|b| cells[b])).expect("j ≥ 1");
            (t.clone(), q)
        })
    })
}

pub(super) fn bijection_audit(cfg: &ExperimentConfig, _ctx: &Ctx, report: &mut Report) -> Result<()> {
    let mg = cfg.m.first().copied().unwrap_or(6);
    let mt = cfg.m.get(1).copied().unwrap_or(mg + 1);
    let mut table = Table::new("counts", &["m", "connected_graphs", "expected", "graph_failures", "pair_failures"]);
    let (mut graph_fail, mut pair_fail, mut count_fail) = (0u64, 0u64, 0u64);
    for m in 1..=mg {
        let masks = all_connected_graphs(m);
        let mut gf = 0u64;
        for &mask in &masks {
            let g = graph_from_mask(m, mask);
            if decode(&encode_graph(&g)?) != g {
                gf += 1;
            }
        }
        let mut pf = 0u64;
        let mut pairs = 0u64;
        for (t, q) in marked_pairs(m) {
            pairs += 1;
            let back = encode_graph(&decode_gx(&t, &q))?;
            if back.tree != t || back.marks != q {
                pf += 1;
            }
        }
        let expected = connected_graph_count(m);
        if masks.len() as u128 != expected || pairs as u128 != expected {
            count_fail += 1;
        }
        graph_fail += gf;
        pair_fail += pf;
        table.push([m.to_string(), masks.len().to_string(), expected.to_string(), gf.to_string(), pf.to_string()]);
        report.stat(&format!("connected_graphs_m{m}"), masks.len() as f64, None, 1);
    }
    let mut tree_fail = 0u64;
    for m in 1..=mt {
        let mut total = 0u128;
        for t in all_trees(m) {
            let a = t.area();
            if permitted_edges(&t).len() as u64 != a {
                tree_fail += 1;
            }
            total += 1u128 << a;
        }
        if total != connected_graph_count(m) {
            tree_fail += 1;
        }
    }
    report.tables.push(table);
    report.tests.push(TestOutcome::at_most("decode_encode_failures", graph_fail as f64, 0.0));
    report.tests.push(TestOutcome::at_most("encode_decode_failures", pair_fail as f64, 0.0));
    report.tests.push(TestOutcome::at_most("count_mismatches", count_fail as f64, 0.0));
    report.tests.push(TestOutcome::at_most("permitted_edge_failures", tree_fail as f64, 0.0));
    Ok(())
}

/// One `G^X` vs `G^H` instance: `(m, k, ‖X − H/2‖, distortion)`.
pub fn shortcut_instance(rng: &mut Rng, max_m: usize) -> (usize, usize, f64, f64) {
    let m = rng.random_range(2..=max_m);
    let t = uniform_tree(m, rng);
    let x = depth_first_walk(&t).values;
    let h = height_process(&t).values;
    // Q ∩ X = Q ∩ (H/2) holds when Q lives under both
    let cells: Vec<(u32, u32)> = (0..m)
        .flat_map(|i| (1..=x[i].min(h[i] / 2).max(0) as u32).map(move |j| (i as u32, j)))
        .collect();
    let target = rng.random_range(0..=6) as f64;
    let q = if cells.is_empty() { 0.0 } else { (target / cells.len() as f64).min(1.0) };
    let pts = PointSet::new(cells.into_iter().filter(|_| rng.random::<f64>() < q)).expect("j ≥ 1");
    let gap = x.iter().zip(&h).map(|(&a, &b)| (a as f64 - b as f64 / 2.0).abs()).fold(0.0, f64::max);
    let dx = all_pairs(&decode_gx(&t, &pts));
    let dh = all_pairs(&build_gh(&t, &pts));
    let dist = dx.iter().zip(&dh).map(|(&a, &b)| (a as f64 - b as f64).abs()).fold(0.0, f64::max);
    (m, pts.len(), gap, dist)
}

/// One perturbed glued-space pair: `(k, δ, ‖h₁ − h₂‖, modulus, distortion)`.
pub fn glued_pair_instance(rng: &mut Rng, grid: usize, k_samples: usize) -> Result<(usize, f64, f64, f64, f64)> {
    let h1 = brownian_excursion(1.0, grid, rng)?.scaled(2.0);
    let k = rng.random_range(0..=4);
    let mut q1 = Vec::with_capacity(k);
    while q1.len() < k {
        let x: f64 = rng.random();
        let y = rng.random::<f64>() * h1.eval(x) / 2.0;
        if y > 0.0 {
            q1.push((x, y));
        }
    }
    let eps = 10f64.powf(rng.random_range(-3.0..-0.5));
    let mut h2 = h1.clone();
    for v in h2.values[1..grid].iter_mut() {
        *v = (*v + eps * (2.0 * rng.random::<f64>() - 1.0)).max(0.0);
    }
    // moving each point by less than half the closest separation keeps the
    // index matching optimal, so δ below is also the matching distance
    let sep = q1
        .iter()
        .enumerate()
        .flat_map(|(i, a)| q1[i + 1..].iter().map(move |b| (a.0 - b.0).hypot(a.1 - b.1)))
        .fold(f64::INFINITY, f64::min);
    let radius = (0.49 * sep).min(10f64.powf(rng.random_range(-3.0..-0.5)));
    let q2 = loop {
        let cand: Vec<(f64, f64)> = q1
            .iter()
            .map(|&(x, y)| {
                let (r, a) = (radius * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
                (x + r * a.cos(), y + r * a.sin())
            })
            .collect();
        if cand.iter().all(|&(x, y)| (0.0..=1.0).contains(&x) && y > 0.0 && 2.0 * y <= h2.eval(x)) {
            break cand;
        }
    };
    let (p1, p2) = (PlanarPoints { points: q1 }, PlanarPoints { points: q2 });
    let delta = hausdorff(&p1, &p2)?;
    let g1 = glue(&h1, &p1, k_samples)?;
    let g2 = glue(&h2, &p2, k_samples)?;
    let mut times = g1.times.clone();
    times.extend_from_slice(g2.endpoint_times());
    let (a, b) = (g1.metric_on(&times), g2.metric_on(&times));
    let dist = distortion(&Correspondence::identity(times.len()), &a, &b)?;
    Ok((k, delta, sup_distance(&h1, &h2), modulus(&h2, delta), dist))
}

pub(super) fn gh_bound_audit(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let reps = cfg.replicates_or(10_000);
    let max_m = cfg.m.first().copied().unwrap_or(200).max(2);
    let a = ctx.replicates(0, reps, |_, rng| Ok(shortcut_instance(rng, max_m)))?;
    let mut t_short = Table::new("shortcut", &["instance", "m", "k", "sup_gap", "distortion", "bound"]);
    let mut viol_short = 0;
    let mut worst: f64 = 0.0;
    for (i, &(m, k, gap, dist)) in a.iter().enumerate() {
        let bound = k as f64 * (gap + 2.0);
        if dist / 2.0 > bound + 1e-9 {
            viol_short += 1;
        }
        if bound > 0.0 {
            worst = worst.max(dist / 2.0 / bound);
        }
        t_short.push([i.to_string(), m.to_string(), k.to_string(), gap.to_string(), dist.to_string(), bound.to_string()]);
    }
    let pairs = cfg.pairs.unwrap_or(1000);
    let grid = cfg.grid.unwrap_or(256);
    let ks = cfg.k_samples.unwrap_or(32);
    let b = ctx.replicates(1, pairs, |_, rng| glued_pair_instance(rng, grid, ks))?;
    let mut t_glued = Table::new("glued_pair", &["pair", "k", "delta", "sup_h", "modulus", "distortion", "bound"]);
    let mut viol_glued = 0;
    let mut worst_glued: f64 = 0.0;
    for (i, &(k, delta, sup, md, dist)) in b.iter().enumerate() {
        let bound = (k as f64 + 1.0) * (delta + 12.0 * sup + 4.0 * md);
        if dist > bound + 1e-9 {
            viol_glued += 1;
        }
        if bound > 0.0 {
            worst_glued = worst_glued.max(dist / bound);
        }
        t_glued.push([i, k].iter().map(|v| v.to_string()).chain([delta, sup, md, dist, bound].iter().map(|v| v.to_string())));
    }
    report.tables.push(t_short);
    report.tables.push(t_glued);
    report.stat("shortcut_worst_ratio", worst, None, reps);
    report.stat("glued_pair_worst_ratio", worst_glued, None, pairs);
    report.tests.push(TestOutcome::at_most("shortcut_violations", viol_short as f64, 0.0));
    report.tests.push(TestOutcome::at_most("glued_pair_violations", viol_glued as f64, 0.0));
    Ok(())
}

pub(super) fn limit_component(cfg: &ExperimentConfig, ctx: &Ctx, report: &mut Report) -> Result<()> {
    let reps = cfg.replicates_or(10_000);
    let sampler = LimitComponentSampler::new(
        cfg.sigma,
        cfg.grid.unwrap_or(4096),
        cfg.proposals.unwrap_or(100_000),
        cfg.k_samples.unwrap_or(16),
        &mut ctx.rng(0, 0),
    )?;
    let ndiam = cfg.diameters.unwrap_or(2000).min(reps);
    let draws = ctx.replicates(1, reps, |i, rng| {
        let idx = sampler.pool.draw_index(rng);
        let e: Excursion = sampler.pool.excursion(idx);
        let pts = crate::continuum::poisson_under(&e, rng);
        let ratios: Vec<f64> = pts.points.iter().map(|&(x, y)| y / e.eval(x)).collect();
        let diam = if i < ndiam { Some(glue(&e.scaled(2.0), &pts, sampler.k_samples)?.diameter()) } else { None };
        Ok((pts.len() as f64, sampler.pool.area_of(idx), ratios, diam))
    })?;
    let counts: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let areas: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let ratios: Vec<f64> = draws.iter().flat_map(|d| d.2.iter().copied()).collect();
    let diam: Vec<f64> = draws.iter().filter_map(|d| d.3).collect();
    // given ẽ the count is Poisson(∫ẽ), so Σ(N − A)² / ΣA estimates 1
    let cond = counts.iter().zip(&areas).map(|(n, a)| (n - a).powi(2)).sum::<f64>() / areas.iter().sum::<f64>();
    let mut table = Table::new("samples", &["replicate", "identifications", "tilted_area", "diameter"]);
    for (i, d) in draws.iter().enumerate() {
        table.push([i.to_string(), d.0.to_string(), d.1.to_string(), d.3.map_or(String::new(), |x| x.to_string())]);
    }
    report.tables.push(table);
    report.mean_stat("mean_identifications", &counts);
    report.mean_stat("mean_tilted_area", &areas);
    report.stat("unconditional_dispersion", variance(&counts) / mean(&counts), None, reps);
    report.stat("sir_effective_sample_size", sampler.pool.effective_sample_size(), None, sampler.pool.len());
    report.mean_stat("mean_limit_diameter", &diam);
    report.tests.push(TestOutcome::within("conditional_dispersion", cond, Some(0.95), Some(1.05)));
    report.tests.push(TestOutcome::at_most("cut_ratio_ks_uniform", ks_one_sample(&ratios, |u| u.clamp(0.0, 1.0)), 0.03));
    if let Some(&m) = cfg.m.first() {
        let p = (m as f64).powf(-1.5);
        let scale = (m as f64).powf(-0.5);
        let disc = from_chains(ctx, 2, ndiam, cfg.chains.unwrap_or(4), || ComponentSampler::new(m, p), |s, rng| {
            let c: Component = s.sample(rng)?;
            Ok(connected_diameter(&c.graph) as f64 * scale)
        })?;
        let mut t = Table::new("discrete_diameters", &["replicate", "m", "scaled_diameter"]);
        for (i, d) in disc.iter().enumerate() {
            t.push([i.to_string(), m.to_string(), d.to_string()]);
        }
        report.tables.push(t);
        report.mean_stat(&format!("mean_scaled_diameter_m{m}"), &disc);
        report.tests.push(TestOutcome::at_most("ks_limit_vs_discrete_diameter", ks_two_sample(&diam, &disc), 0.07));
    }
    Ok(())
}
