//! The glued space `g(h, Q)`: the real tree coded by `h` with each leaf
//! `τ(ξ^x)` identified with the root-path point at height `2ξ^y`.
//!
//! Quotient distances are exact for the piecewise-linear `h`. Tree distances
//! come from range-minimum queries. Shortest paths through the `2P`
//! identification endpoints are closed once by Floyd–Warshall, after which
//! `d(s, t) = min(d_T(s, t), min_{a,b} d_T(s, e_a) + D(a, b) + d_T(e_b, t))`.

use rand::Rng;
use serde::Serialize;

use super::{poisson_under, Excursion, GridProfile, PlanarPoints, TiltedPool};
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

/// Sparse table over grid values for O(1) range minimum (or maximum).
#[derive(Clone, Debug)]
struct SparseTable {
    levels: Vec<Vec<f64>>,
    max: bool,
}

impl SparseTable {
    fn new(values: &[f64], max: bool) -> Self {
        let pick = |a: f64, b: f64| if max { a.max(b) } else { a.min(b) };
        let mut levels = vec![values.to_vec()];
        let mut w = 1;
        while 2 * w <= values.len() {
            let prev = &levels[levels.len() - 1];
            let next: Vec<f64> = (0..=values.len() - 2 * w).map(|i| pick(prev[i], prev[i + w])).collect();
            levels.push(next);
            w *= 2;
        }
        Self { levels, max }
    }

    /// Over grid indices `i..=j`.
    fn query(&self, i: usize, j: usize) -> f64 {
        let k = (usize::BITS - 1 - (j - i + 1).leading_zeros()) as usize;
        let (a, b) = (self.levels[k][i], self.levels[k][j + 1 - (1 << k)]);
        if self.max {
            a.max(b)
        } else {
            a.min(b)
        }
    }
}

/// Tree pseudo-metric of a grid profile.
#[derive(Clone, Debug)]
struct TreeMetric {
    dt: f64,
    values: Vec<f64>,
    rmq: SparseTable,
}

impl TreeMetric {
    fn new<H: GridProfile + ?Sized>(h: &H) -> Self {
        Self { dt: h.dt(), values: h.values().to_vec(), rmq: SparseTable::new(h.values(), false) }
    }

    fn eval(&self, t: f64) -> f64 {
        let s = t / self.dt;
        if s <= 0.0 {
            return self.values[0];
        }
        let k = s.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        self.values[k] + (s - k as f64) * (self.values[k + 1] - self.values[k])
    }

    /// Minimum of the interpolant on `[s, t]`.
    fn min_between(&self, s: f64, t: f64) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let mut m = self.eval(s).min(self.eval(t));
        let last = self.values.len() - 1;
        let i = ((s / self.dt).ceil().max(0.0) as usize).min(last);
        let j = ((t / self.dt).floor().max(0.0) as usize).min(last);
        if i <= j {
            m = m.min(self.rmq.query(i, j));
        }
        m
    }

    fn distance(&self, s: f64, t: f64) -> f64 {
        (self.eval(s) + self.eval(t) - 2.0 * self.min_between(s, t)).max(0.0)
    }

    /// The last time `u ≤ x` with `h(u) ≤ c`, for `0 ≤ c ≤ h(x)`.
    fn cut_time(&self, x: f64, c: f64) -> f64 {
        let v = &self.values;
        let mut k = ((x / self.dt).floor() as usize).min(v.len() - 1);
        while v[k] > c {
            // h(0) = 0 ≤ c stops this
            k -= 1;
        }
        if k + 1 >= v.len() || v[k + 1] <= v[k] {
            return (k as f64 * self.dt).min(x);
        }
        let frac = ((c - v[k]) / (v[k + 1] - v[k])).clamp(0.0, 1.0);
        ((k as f64 + frac) * self.dt).min(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Identification {
    pub leaf_time: f64,
    /// `2ξ^y`, the height of the root-path point glued to the leaf.
    pub cut_height: f64,
    pub cut_time: f64,
}

#[derive(Clone, Debug)]
pub struct GluedSpace {
    pub sigma: f64,
    pub identifications: Vec<Identification>,
    /// Sample times behind `metric`; index 0 is the root.
    pub times: Vec<f64>,
    pub metric: FiniteMetricSpace<f64>,
    tree: TreeMetric,
    ends: Vec<f64>,
    closure: Vec<f64>,
}

#[derive(Serialize)]
struct GluedJson<'a> {
    sigma: f64,
    pairs: Vec<[f64; 2]>,
    dist: Vec<&'a [f64]>,
}

/// `g(h, Q)` sampled at `k_samples` evenly spaced times plus all endpoints.
/// Every point must satisfy `2y ≤ h(x)`.
pub fn glue<H: GridProfile + ?Sized>(h: &H, pts: &PlanarPoints, k_samples: usize) -> Result<GluedSpace> {
    if k_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 sample times".into()));
    }
    let tree = TreeMetric::new(h);
    let sigma = h.length();
    let mut identifications = Vec::with_capacity(pts.len());
    for &(x, y) in &pts.points {
        let c = 2.0 * y;
        if !(y > 0.0) || !(0.0..=sigma).contains(&x) || c > tree.eval(x) {
            return Err(Error::PointAboveCurve { x, y });
        }
        identifications.push(Identification { leaf_time: x, cut_height: c, cut_time: tree.cut_time(x, c) });
    }
    let ends: Vec<f64> = identifications.iter().flat_map(|id| [id.leaf_time, id.cut_time]).collect();
    let e = ends.len();
    let mut closure = vec![0.0; e * e];
    for a in 0..e {
        for b in 0..e {
            closure[a * e + b] = tree.distance(ends[a], ends[b]);
        }
    }
    for a in 0..e / 2 {
        closure[2 * a * e + 2 * a + 1] = 0.0;
        closure[(2 * a + 1) * e + 2 * a] = 0.0;
    }
    for k in 0..e {
        for a in 0..e {
            let ak = closure[a * e + k];
            for b in 0..e {
                let via = ak + closure[k * e + b];
                if via < closure[a * e + b] {
                    closure[a * e + b] = via;
                }
            }
        }
    }
    let mut times: Vec<f64> = (0..k_samples).map(|i| sigma * i as f64 / (k_samples - 1) as f64).collect();
    times.extend_from_slice(&ends);
    let mut space = GluedSpace {
        sigma,
        identifications,
        times: Vec::new(),
        metric: FiniteMetricSpace::new_unchecked(1, vec![0.0], 0),
        tree,
        ends,
        closure,
    };
    space.metric = space.metric_on(&times);
    space.times = times;
    Ok(space)
}

impl GluedSpace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tree_distance(&self, s: f64, t: f64) -> f64 {
        self.tree.distance(s, t)
    }

    pub fn endpoint_times(&self) -> &[f64] {
        &self.ends
    }

    /// Glued distance to each endpoint.
    fn to_ends(&self, s: f64) -> Vec<f64> {
        let e = self.ends.len();
        let direct: Vec<f64> = self.ends.iter().map(|&x| self.tree.distance(s, x)).collect();
        (0..e)
            .map(|b| (0..e).map(|a| direct[a] + self.closure[a * e + b]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    fn combine(&self, s: f64, t: f64, from_s: &[f64], to_t: &[f64]) -> f64 {
        from_s.iter().zip(to_t).map(|(a, b)| a + b).fold(self.tree.distance(s, t), f64::min)
    }

    pub fn distance(&self, s: f64, t: f64) -> f64 {
        let tt: Vec<f64> = self.ends.iter().map(|&x| self.tree.distance(t, x)).collect();
        self.combine(s, t, &self.to_ends(s), &tt)
    }

    /// The quotient metric at arbitrary times, root at the first time.
    pub fn metric_on(&self, times: &[f64]) -> FiniteMetricSpace<f64> {
        let k = times.len();
        let from: Vec<Vec<f64>> = times.iter().map(|&s| self.to_ends(s)).collect();
        let raw: Vec<Vec<f64>> = times.iter().map(|&t| self.ends.iter().map(|&x| self.tree.distance(t, x)).collect()).collect();
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let d = self.combine(times[i], times[j], &from[i], &raw[j]);
                dist[i * k + j] = d;
                dist[j * k + i] = d;
            }
        }
        FiniteMetricSpace::new_unchecked(k, dist, 0)
    }

    /// Exact diameter over every grid time and endpoint.
    ///
    /// Eccentricity bounding: `ecc(t) ≤ d(t, v) + ecc(v)` for every swept `v`,
    /// and the sweep stops once no upper bound exceeds the best eccentricity.
    pub fn diameter(&self) -> f64 {
        let grid = self.tree.values.len();
        let mut times: Vec<f64> = (0..grid).map(|i| i as f64 * self.tree.dt).collect();
        times.extend_from_slice(&self.ends);
        let raw: Vec<Vec<f64>> = times.iter().map(|&t| self.ends.iter().map(|&x| self.tree.distance(t, x)).collect()).collect();
        let mut upper = vec![f64::INFINITY; times.len()];
        let mut best: f64 = 0.0;
        let mut v = 0;
        loop {
            let from = self.to_ends(times[v]);
            let row: Vec<f64> = (0..times.len()).map(|t| self.combine(times[v], times[t], &from, &raw[t])).collect();
            let ecc = row.iter().cloned().fold(0.0, f64::max);
            best = best.max(ecc);
            for (u, d) in upper.iter_mut().zip(&row) {
                *u = u.min(d + ecc);
            }
            upper[v] = ecc;
            let (next, top) = upper.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &u)| if u > acc.1 { (i, u) } else { acc });
            if top <= best + 1e-12 {
                return best;
            }
            v = next;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let k = self.metric.len();
        let j = GluedJson {
            sigma: self.sigma,
            pairs: self.identifications.iter().map(|id| [id.leaf_time, id.cut_height]).collect(),
            dist: (0..k).map(|i| self.metric.row(i)).collect(),
        };
        Ok(serde_json::to_string(&j)?)
    }
}

/// `sup_{|r − r'| ≤ δ} |h(r) − h(r')|` for the piecewise-linear `h`.
///
/// The sup is attained with one end on the grid and the other on the grid
/// or at distance exactly `δ`.
pub fn modulus<H: GridProfile + ?Sized>(h: &H, delta: f64) -> f64 {
    let v = h.values();
    let dt = h.dt();
    if delta <= 0.0 || v.len() < 2 {
        return 0.0;
    }
    let lo = SparseTable::new(v, false);
    let hi = SparseTable::new(v, true);
    let w = (delta / dt + 1e-9).floor() as usize;
    let last = v.len() - 1;
    let mut best: f64 = 0.0;
    for (g, &x) in v.iter().enumerate() {
        let (a, b) = (g.saturating_sub(w), (g + w).min(last));
        best = best.max(hi.query(a, b) - x).max(x - lo.query(a, b));
        let t = g as f64 * dt;
        best = best.max((x - h.eval(t + delta)).abs()).max((x - h.eval((t - delta).max(0.0))).abs());
    }
    best
}

/// `‖h₁ − h₂‖` over `[0, σ]` for interpolants on possibly different grids.
pub fn sup_distance<A: GridProfile + ?Sized, B: GridProfile + ?Sized>(a: &A, b: &B) -> f64 {
    let (va, vb) = (a.values(), b.values());
    if va.len() == vb.len() && (a.dt() - b.dt()).abs() < 1e-15 {
        return va.iter().zip(vb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    }
    let on_a = (0..va.len()).map(|i| (va[i] - b.eval(i as f64 * a.dt())).abs());
    let on_b = (0..vb.len()).map(|i| (vb[i] - a.eval(i as f64 * b.dt())).abs());
    on_a.chain(on_b).fold(0.0, f64::max)
}

/// `M^(σ) = g(2ẽ, P)` from a pool of tilted proposals.
#[derive(Clone, Debug)]
pub struct LimitComponentSampler {
    pub pool: TiltedPool,
    pub k_samples: usize,
}

/// One draw of the limit component, with the excursion it came from.
#[derive(Clone, Debug)]
pub struct LimitDraw {
    pub excursion: Excursion,
    pub points: PlanarPoints,
    pub space: GluedSpace,
}

impl LimitComponentSampler {
    pub fn new<R: Rng + ?Sized>(sigma: f64, grid: usize, k: usize, k_samples: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { pool: TiltedPool::build(sigma, grid, k, rng)?, k_samples })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LimitDraw> {
        let excursion = self.pool.draw(rng);
        let points = poisson_under(&excursion, rng);
        let space = glue(&excursion.scaled(2.0), &points, self.k_samples)?;
        Ok(LimitDraw { excursion, points, space })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GluedSpace> {
        Ok(self.draw(rng)?.space)
    }
}

pub fn sample_limit_component<R: Rng + ?Sized>(
    sigma: f64,
    grid: usize,
    k: usize,
    k_samples: usize,
    rng: &mut R,
) -> Result<GluedSpace> {
    LimitComponentSampler::new(sigma, grid, k, k_samples, rng)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{brownian_excursion, GridFunction};
    use crate::rng::stream;

    fn brute_tree(h: &GridFunction, s: f64, t: f64) -> f64 {
        // dense evaluation of the interpolant, breakpoints included
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let mut m = h.eval(s).min(h.eval(t));
        for (i, &v) in h.values.iter().enumerate() {
            let x = i as f64 * h.dt;
            if x >= s && x <= t {
                m = m.min(v);
            }
        }
        h.eval(s) + h.eval(t) - 2.0 * m
    }

    #[test]
    fn sparse_table_matches_scan() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 31) as f64).collect();
        let lo = SparseTable::new(&v, false);
        let hi = SparseTable::new(&v, true);
        for i in 0..v.len() {
            for j in i..v.len() {
                let s = &v[i..=j];
                assert_eq!(lo.query(i, j), s.iter().cloned().fold(f64::INFINITY, f64::min));
                assert_eq!(hi.query(i, j), s.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            }
        }
    }

    #[test]
    fn no_points_gives_tree_metric() {
        let e = brownian_excursion(1.0, 200, &mut stream(1, 0)).unwrap();
        let h = GridFunction { dt: e.dt(), values: e.values.clone() };
        let g = glue(&e, &PlanarPoints::default(), 30).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let d = brute_tree(&h, g.times[i], g.times[j]);
                assert!((g.metric.d(i, j) - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cut_point_sits_on_root_path() {
        let h = GridFunction { dt: 1.0, values: vec![0.0, 2.0, 1.0, 3.0, 0.0] };
        let t = TreeMetric::new(&h);
        // from x = 3 (height 3) the root path passes height 1 at time 2, height 0.5 at 0.25
        assert_eq!(t.cut_time(3.0, 1.0), 2.0);
        assert_eq!(t.cut_time(3.0, 0.5), 0.25);
        assert_eq!(t.cut_time(3.0, 2.0), 2.5);
        assert!((t.distance(3.0, t.cut_time(3.0, 1.5)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identification_with_root() {
        let h = GridFunction { dt: 0.25, values: vec![0.0, 1.0, 2.0, 1.0, 0.0] };
        let g = glue(&h, &PlanarPoints { points: vec![(0.5, 1e-13)] }, 5).unwrap();
        assert!(g.distance(0.0, 0.5) < 1e-12);
        assert!((g.tree_distance(0.0, 0.5) - 2.0).abs() < 1e-12);
        assert!(glue(&h, &PlanarPoints { points: vec![(0.5, 1.01)] }, 5).is_err());
    }

    /// Shortest path through every ordered, oriented subset of shortcuts.
    fn brute_glued(g: &GluedSpace, s: f64, t: f64) -> f64 {
        let ids = &g.identifications;
        let p = ids.len();
        let mut best = g.tree_distance(s, t);
        fn go(g: &GluedSpace, at: f64, t: f64, used: u32, acc: f64, best: &mut f64) {
            *best = best.min(acc + g.tree_distance(at, t));
            for (i, id) in g.identifications.iter().enumerate() {
                if used >> i & 1 == 1 {
                    continue;
                }
                for (a, b) in [(id.leaf_time, id.cut_time), (id.cut_time, id.leaf_time)] {
                    go(g, b, t, used | 1 << i, acc + g.tree_distance(at, a), best);
                }
            }
        }
        let _ = p;
        go(g, s, t, 0, 0.0, &mut best);
        best
    }

    #[test]
    fn matches_brute_force_over_shortcuts() {
        let mut r = stream(2, 0);
        for _ in 0..20 {
            let e = brownian_excursion(1.0, 256, &mut r).unwrap().scaled(2.0);
            let mut pts = Vec::new();
            while pts.len() < 3 {
                let x: f64 = r.random();
                let y = r.random::<f64>() * e.eval(x) / 2.0;
                if y > 0.0 {
                    pts.push((x, y));
                }
            }
            let g = glue(&e, &PlanarPoints { points: pts }, 50).unwrap();
            assert_eq!(g.len(), 56);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    let b = brute_glued(&g, g.times[i], g.times[j]);
                    assert!((g.metric.d(i, j) - b).abs() < 1e-9, "{} vs {b}", g.metric.d(i, j));
                }
            }
        }
    }

    #[test]
    fn quotient_metric_properties() {
        let mut r = stream(3, 0);
        let s = LimitComponentSampler::new(1.0, 512, 200, 40, &mut r).unwrap();
        for _ in 0..20 {
            let g = s.sample(&mut r).unwrap();
            let k = 40;
            for (a, id) in g.identifications.iter().enumerate() {
                assert!(id.cut_height > 0.0 && id.cut_time <= id.leaf_time);
                assert!(g.metric.d(k + 2 * a, k + 2 * a + 1).abs() < 1e-12);
            }
            assert!(g.metric.triangle_violation(0, &mut r) <= 1e-9);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    assert!(g.metric.d(i, j) <= g.tree_distance(g.times[i], g.times[j]) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn diameter_matches_exhaustive() {
        let mut r = stream(4, 0);
        let s = LimitComponentSampler::new(1.0, 128, 100, 10, &mut r).unwrap();
        for _ in 0..30 {
            let g = s.sample(&mut r).unwrap();
            let mut times: Vec<f64> = (0..=128).map(|i| i as f64 / 128.0).collect();
            times.extend_from_slice(g.endpoint_times());
            let full = g.metric_on(&times);
            assert!((g.diameter() - full.diameter()).abs() < 1e-12);
        }
    }

    #[test]
    fn modulus_by_hand() {
        let h = GridFunction { dt: 1.0, values: vec![0.0, 2.0, 0.0, 0.0] };
        assert_eq!(modulus(&h, 0.5), 1.0);
        assert_eq!(modulus(&h, 1.0), 2.0);
        assert_eq!(modulus(&h, 0.0), 0.0);
        let dense = GridFunction { dt: 0.001, values: (0..=3000).map(|i| h.eval(i as f64 * 0.001)).collect() };
        assert!((modulus(&dense, 0.5) - 1.0).abs() < 1e-9);
        let g = GridFunction { dt: 0.5, values: vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0] };
        assert!((sup_distance(&h, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_layout() {
        let h = GridFunction { dt: 0.5, values: vec![0.0, 1.0, 0.0] };
        let g = glue(&h, &PlanarPoints { points: vec![(0.5, 0.25)] }, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        assert_eq!(v["sigma"], 1.0);
        assert_eq!(v["pairs"][0], serde_json::json!([0.5, 0.5]));
        assert_eq!(v["dist"].as_array().unwrap().len(), 4);
    }
}
