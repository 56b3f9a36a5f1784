//! Trees tilted by `(1 − p)^{−a(T)}`.
//!
//! Up to [`EXHAUSTIVE_THRESHOLD`] vertices every tree is weighed exactly.
//! Beyond that a Metropolis chain mixes subtree-prune-and-regraft moves with
//! uniform independence proposals. Both proposals are symmetric, so the
//! acceptance probability is `min(1, (1 − p)^{a(T) − a(T')})` for either.

use log::debug;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::{prufer_decode, tree_count, tree_from_index};
use crate::error::{Error, Result};
use crate::exploration::RootedOrderedTree;
use crate::stats::integrated_autocorrelation;

pub const EXHAUSTIVE_THRESHOLD: usize = 8;
pub const DEFAULT_GLOBAL_MOVE_PROB: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Steps discarded before the pilot run; `None` means `50 m`.
    pub burn_in: Option<usize>,
    /// Steps between returned trees; `None` means `⌈2τ⌉` from the pilot run.
    pub thinning: Option<usize>,
    /// Length of the pilot run that estimates τ; `None` means `max(20 m, 5000)`.
    pub pilot: Option<usize>,
    /// Chance that a step proposes a fresh uniform tree instead of an SPR move.
    pub global_move_prob: f64,
    /// Fail if τ exceeds this fraction of the pilot length.
    pub max_tau_fraction: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { burn_in: None, thinning: None, pilot: None, global_move_prob: DEFAULT_GLOBAL_MOVE_PROB, max_tau_fraction: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    Metropolis(ChainConfig),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub strategy: &'static str,
    pub proposed: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Integrated autocorrelation time of the area along the pilot run.
    pub area_tau: Option<f64>,
    pub samples: u64,
}

struct ExactTable {
    cdf: Vec<f64>,
}

struct Chain {
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    area: u64,
    thin: usize,
    // proposal buffers for global moves, swapped in on acceptance
    spare_parent: Vec<u32>,
    spare_children: Vec<Vec<u32>>,
    // scratch
    stack: Vec<u32>,
    in_sub: Vec<bool>,
    sub: Vec<u32>,
}

pub struct TiltedTreeSampler {
    m: usize,
    p: f64,
    strategy: Strategy,
    table: Option<ExactTable>,
    chain: Option<Chain>,
    diag: Diagnostics,
}

impl TiltedTreeSampler {
    /// Exhaustive up to the threshold, Metropolis with defaults beyond.
    pub fn new(m: usize, p: f64) -> Result<Self> {
        let strategy =
            if m <= EXHAUSTIVE_THRESHOLD { Strategy::Exhaustive } else { Strategy::Metropolis(ChainConfig::default()) };
        Self::with_strategy(m, p, strategy)
    }

    pub fn with_strategy(m: usize, p: f64, strategy: Strategy) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
        }
        if let Strategy::Metropolis(c) = &strategy {
            if !(0.0..=1.0).contains(&c.global_move_prob) || c.max_tau_fraction <= 0.0 {
                return Err(Error::InvalidParameter("bad chain configuration".into()));
            }
            if c.thinning == Some(0) {
                return Err(Error::InvalidParameter("thinning must be positive".into()));
            }
        }
        if matches!(strategy, Strategy::Exhaustive) && m > 10 {
            return Err(Error::InvalidParameter(format!("exhaustive enumeration of {m}^{} trees", m - 2)));
        }
        let name = match strategy {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Metropolis(_) => "metropolis",
        };
        Ok(Self { m, p, strategy, table: None, chain: None, diag: Diagnostics { strategy: name, ..Default::default() } })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    /// `(1 − p)^{−a}` as a log weight.
    fn log_weight(&self, area: u64) -> f64 {
        -(area as f64) * (1.0 - self.p).ln()
    }

    /// Exact law over trees in Prüfer index order (exhaustive sizes only).
    pub fn exact_probabilities(&self) -> Result<Vec<f64>> {
        if self.m > 10 {
            return Err(Error::InvalidParameter("too many trees to enumerate".into()));
        }
        let lw: Vec<f64> = (0..tree_count(self.m)).map(|i| self.log_weight(tree_from_index(self.m, i).area())).collect();
        let top = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / z).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<RootedOrderedTree> {
        if self.m == 1 {
            self.diag.samples += 1;
            return Ok(RootedOrderedTree::single());
        }
        let strategy = self.strategy.clone();
        let t = match strategy {
            Strategy::Exhaustive => self.sample_exact(rng),
            Strategy::Metropolis(cfg) => self.sample_chain(&cfg, rng)?,
        };
        self.diag.samples += 1;
        Ok(t)
    }

    fn sample_exact<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RootedOrderedTree {
        if self.table.is_none() {
            let probs = self.exact_probabilities().expect("size checked at construction");
            let mut acc = 0.0;
            let cdf = probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            self.table = Some(ExactTable { cdf });
        }
        let cdf = &self.table.as_ref().unwrap().cdf;
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        tree_from_index(self.m, idx as u64)
    }

    fn sample_chain<R: Rng + ?Sized>(&mut self, cfg: &ChainConfig, rng: &mut R) -> Result<RootedOrderedTree> {
        if self.chain.is_none() {
            self.start_chain(cfg, rng)?;
        }
        let thin = self.chain.as_ref().unwrap().thin;
        for _ in 0..thin {
            self.step(cfg.global_move_prob, rng);
        }
        self.update_rate();
        let c = self.chain.as_ref().unwrap();
        let parents = c.parent.iter().map(|&q| if q == u32::MAX { None } else { Some(q) }).collect();
        Ok(RootedOrderedTree::from_parents(parents).expect("chain state is a tree"))
    }

    fn start_chain<R: Rng + ?Sized>(&mut self, cfg: &ChainConfig, rng: &mut R) -> Result<()> {
        let m = self.m;
        let mut c = Chain {
            parent: vec![u32::MAX; m],
            children: vec![Vec::new(); m],
            area: 0,
            thin: 1,
            spare_parent: vec![u32::MAX; m],
            spare_children: vec![Vec::new(); m],
            stack: Vec::with_capacity(m),
            in_sub: vec![false; m],
            sub: Vec::with_capacity(m),
        };
        load(&random_prufer(m, rng), &mut c.parent, &mut c.children);
        c.area = area_of(&c.children, &mut c.stack);
        self.chain = Some(c);
        let burn = cfg.burn_in.unwrap_or(50 * m);
        for _ in 0..burn {
            self.step(cfg.global_move_prob, rng);
        }
        let thin = match cfg.thinning {
            Some(k) => k,
            None => {
                let pilot = cfg.pilot.unwrap_or((20 * m).max(5000));
                let mut trace = Vec::with_capacity(pilot);
                for _ in 0..pilot {
                    self.step(cfg.global_move_prob, rng);
                    trace.push(self.chain.as_ref().unwrap().area as f64);
                }
                let tau = integrated_autocorrelation(&trace);
                self.diag.area_tau = Some(tau);
                let limit = cfg.max_tau_fraction * pilot as f64;
                if tau > limit {
                    return Err(Error::NonConvergence { tau, limit });
                }
                (2.0 * tau).ceil() as usize
            }
        };
        self.diag.burn_in = burn;
        self.diag.thinning = thin;
        self.chain.as_mut().unwrap().thin = thin;
        self.update_rate();
        debug!("tilted chain m={m} p={}: thin {thin}, {:?}", self.p, self.diag);
        Ok(())
    }

    fn update_rate(&mut self) {
        self.diag.acceptance_rate =
            if self.diag.proposed == 0 { 0.0 } else { self.diag.accepted as f64 / self.diag.proposed as f64 };
    }

    fn step<R: Rng + ?Sized>(&mut self, global_prob: f64, rng: &mut R) {
        let log_q = (1.0 - self.p).ln();
        let c = self.chain.as_mut().unwrap();
        let m = c.parent.len();
        self.diag.proposed += 1;
        if rng.random::<f64>() < global_prob {
            load(&random_prufer(m, rng), &mut c.spare_parent, &mut c.spare_children);
            let new_area = area_of(&c.spare_children, &mut c.stack);
            if accept(c.area, new_area, log_q, rng) {
                std::mem::swap(&mut c.parent, &mut c.spare_parent);
                std::mem::swap(&mut c.children, &mut c.spare_children);
                c.area = new_area;
                self.diag.accepted += 1;
            }
            return;
        }
        // prune v (not the root) and regraft under a vertex outside its subtree
        let v = rng.random_range(1..m as u32);
        c.mark_subtree(v);
        let u = loop {
            let u = rng.random_range(0..m as u32);
            if !c.in_sub[u as usize] {
                break u;
            }
        };
        let old_parent = c.parent[v as usize];
        c.clear_subtree();
        if u == old_parent {
            self.diag.accepted += 1;
            return;
        }
        c.reattach(v, old_parent, u);
        let new_area = c.compute_area();
        if accept(c.area, new_area, log_q, rng) {
            c.area = new_area;
            self.diag.accepted += 1;
        } else {
            c.reattach(v, u, old_parent);
        }
    }
}

// weight ratio (1 − p)^{a − a'} = exp((a − a') ln(1 − p))
fn accept<R: Rng + ?Sized>(old: u64, new: u64, log_q: f64, rng: &mut R) -> bool {
    let lr = (old as f64 - new as f64) * log_q;
    lr >= 0.0 || rng.random::<f64>().ln() < lr
}

/// Loads Prüfer output, `(leaf, neighbour)` pairs rooted at `m − 1`, as a
/// tree rooted at 0 with sorted child lists.
fn load(edges: &[(u32, u32)], parent: &mut [u32], children: &mut [Vec<u32>]) {
    let m = parent.len();
    parent[m - 1] = u32::MAX;
    for &(a, b) in edges {
        parent[a as usize] = b;
    }
    let (mut prev, mut v) = (u32::MAX, 0u32);
    while v != u32::MAX {
        let next = parent[v as usize];
        parent[v as usize] = prev;
        prev = v;
        v = next;
    }
    children.iter_mut().for_each(Vec::clear);
    for w in 0..m {
        if parent[w] != u32::MAX {
            children[parent[w] as usize].push(w as u32);
        }
    }
}

fn area_of(children: &[Vec<u32>], stack: &mut Vec<u32>) -> u64 {
    stack.clear();
    stack.push(0);
    let mut a = 0u64;
    while let Some(v) = stack.pop() {
        a += stack.len() as u64;
        stack.extend(children[v as usize].iter().rev());
    }
    a
}

fn random_prufer<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<(u32, u32)> {
    let seq: Vec<u32> = (0..m.saturating_sub(2)).map(|_| rng.random_range(0..m as u32)).collect();
    prufer_decode(&seq, m)
}

impl Chain {
    fn compute_area(&mut self) -> u64 {
        area_of(&self.children, &mut self.stack)
    }

    fn mark_subtree(&mut self, v: u32) {
        self.sub.clear();
        self.stack.clear();
        self.stack.push(v);
        while let Some(w) = self.stack.pop() {
            self.in_sub[w as usize] = true;
            self.sub.push(w);
            self.stack.extend(&self.children[w as usize]);
        }
    }

    fn clear_subtree(&mut self) {
        for &w in &self.sub {
            self.in_sub[w as usize] = false;
        }
    }

    fn reattach(&mut self, v: u32, from: u32, to: u32) {
        let ch = &mut self.children[from as usize];
        let at = ch.binary_search(&v).expect("v is a child of its parent");
        ch.remove(at);
        let ch = &mut self.children[to as usize];
        let at = ch.binary_search(&v).unwrap_err();
        ch.insert(at, v);
        self.parent[v as usize] = to;
    }
}
