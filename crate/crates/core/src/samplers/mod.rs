//! Random trees, walks, pointsets and conditioned components.
//!
//! `sample_component(m, p)` is the construction behind the claim that a
//! component of G(n,p) conditioned on size m is a tilted tree plus
//! independent permitted edges.

mod tilted;

pub use tilted::{
    ChainConfig, Diagnostics, Strategy, TiltedTreeSampler, DEFAULT_GLOBAL_MOVE_PROB, EXHAUSTIVE_THRESHOLD,
};

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::encoding::{decode_gx, PointSet};
use crate::enumerate::prufer_decode;
use crate::error::{check_probability, Error, Result};
use crate::exploration::{LatticeExcursion, LatticeKind, RootedOrderedTree};
use crate::graph::{generate_gnp, partition, Component};

/// Uniform labeled tree on `0..m` via a uniform Prüfer sequence, rooted at 0.
pub fn uniform_tree<R: Rng + ?Sized>(m: usize, rng: &mut R) -> RootedOrderedTree {
    assert!(m >= 1, "a tree needs at least one vertex");
    if m == 1 {
        return RootedOrderedTree::single();
    }
    let seq: Vec<u32> = (0..m - 2).map(|_| rng.random_range(0..m as u32)).collect();
    RootedOrderedTree::from_edges(m, &prufer_decode(&seq, m), 0).expect("Prüfer decoding yields a tree")
}

/// Walk of a Poisson(1) Galton–Watson tree conditioned on `m` vertices.
///
/// Throws `m − 1` uniforms on `[0, m]`, counts them per unit cell, and rotates
/// the cells so the Łukasiewicz walk first reaches −1 at step `m`. Returns
/// `X(0..m)`, with `X(0) = 0`; this is the queue walk, not a depth-first one.
pub fn rotation_walk<R: Rng + ?Sized>(m: usize, rng: &mut R) -> LatticeExcursion {
    assert!(m >= 1);
    let mut cnt = vec![0i64; m];
    for _ in 0..m - 1 {
        let u = rng.random::<f64>() * m as f64;
        cnt[(u as usize).min(m - 1)] += 1;
    }
    // S_k = Σ_{l<k} (cnt[l] − 1); first minimiser over k = 1..=m
    let mut s = 0i64;
    let mut best = i64::MAX;
    let mut mu = 0;
    for (k, &c) in cnt.iter().enumerate() {
        s += c - 1;
        if s < best {
            best = s;
            mu = k + 1;
        }
    }
    let mut values = Vec::with_capacity(m);
    let mut x = 0i64;
    for l in 0..m {
        values.push(x);
        x += cnt[(mu + l) % m] - 1;
    }
    debug_assert_eq!(x, -1);
    LatticeExcursion { kind: LatticeKind::DepthFirstWalk, values }
}

/// `Q ∩ X` for a Binomial pointset of intensity `p`, by geometric skips.
pub fn binomial_pointset<R: Rng + ?Sized>(walk: &[i64], p: f64, rng: &mut R) -> Result<PointSet> {
    check_probability(p, "p")?;
    let total: u64 = walk.iter().map(|&x| x.max(0) as u64).sum();
    if p == 0.0 || total == 0 {
        return Ok(PointSet::empty());
    }
    let geom = Geometric::new(p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut points = Vec::new();
    let mut i = 0usize;
    // `base` is the flat index of (i, 1)
    let mut base = 0u64;
    let mut next = geom.sample(rng);
    while next < total {
        while base + walk[i].max(0) as u64 <= next {
            base += walk[i].max(0) as u64;
            i += 1;
        }
        points.push((i as u32, (next - base + 1) as u32));
        next = next.saturating_add(1).saturating_add(geom.sample(rng));
    }
    Ok(PointSet::from_sorted(points))
}

/// Draws connected graphs distributed as a G(n,p) component of size `m`.
pub struct ComponentSampler {
    pub tilted: TiltedTreeSampler,
}

impl ComponentSampler {
    pub fn new(m: usize, p: f64) -> Result<Self> {
        Ok(Self { tilted: TiltedTreeSampler::new(m, p)? })
    }

    pub fn with_strategy(m: usize, p: f64, strategy: Strategy) -> Result<Self> {
        Ok(Self { tilted: TiltedTreeSampler::with_strategy(m, p, strategy)? })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Component> {
        let t = self.tilted.sample(rng)?;
        let q = binomial_pointset(&t.walk(), self.tilted.p(), rng)?;
        Component::from_connected(decode_gx(&t, &q))
    }
}

/// One-shot version of [`ComponentSampler`]; large `m` pays the burn-in every call.
pub fn sample_component<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R) -> Result<Component> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    ComponentSampler::new(m, p)?.sample(rng)
}

/// Brute-force ground truth: a uniform component of G(n,p), kept iff it has `m` vertices.
pub fn oracle_component<R: Rng + ?Sized>(n: usize, p: f64, m: usize, budget: usize, rng: &mut R) -> Result<Component> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    check_probability(p, "p")?;
    for _ in 0..budget {
        let g = generate_gnp(n, p, rng)?;
        let parts = partition(&g);
        let pick = rng.random_range(0..parts.len());
        if parts.members[pick].len() == m {
            return Ok(parts.component(&g, pick));
        }
    }
    Err(Error::BudgetExhausted(budget))
}
