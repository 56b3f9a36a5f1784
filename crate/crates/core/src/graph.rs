//! Labeled graphs, G(n,p), components and graph distances.
//!
//! Adjacency is stored in CSR form with every neighbour list sorted, which
//! is what makes "explore the smallest label first" deterministic.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{check_probability, Error, Result};
use crate::metric::FiniteMetricSpace;

pub type Vertex = u32;

/// Above this size `distance_stats` keeps only an evenly spaced sample of sources.
pub const DEFAULT_DISTANCE_CAP: usize = 2048;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    n: usize,
    offsets: Vec<usize>,
    adj: Vec<Vertex>,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, offsets: vec![0; n + 1], adj: Vec::new() }
    }

    /// Builds a graph from 0-based pairs in any order. Repeated pairs collapse.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        norm.dedup();
        Ok(Self::from_sorted_pairs(n, &norm))
    }

    /// Same as [`from_edges`](Self::from_edges) with 1-based labels.
    pub fn from_labeled_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut shifted = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == 0 || v == 0 {
                return Err(Error::InvalidGraph("labels start at 1".into()));
            }
            shifted.push((u - 1, v - 1));
        }
        Self::from_edges(n, &shifted)
    }

    // `pairs` must be lexicographically sorted with u < v and no repeats.
    // Pushing in that order leaves every list sorted: the smaller neighbours
    // of w arrive from rows u < w before row w itself is visited.
    fn from_sorted_pairs(n: usize, pairs: &[(Vertex, Vertex)]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(u, v) in pairs {
            deg[u as usize + 1] += 1;
            deg[v as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let offsets = deg.clone();
        let mut fill = deg;
        let mut adj = vec![0; 2 * pairs.len()];
        for &(u, v) in pairs {
            adj[fill[u as usize]] = v;
            fill[u as usize] += 1;
            adj[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        Self { n, offsets, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n as Vertex)
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Subgraph induced on `vertices` (ascending), relabeled to `0..k` in order.
    pub fn induced(&self, vertices: &[Vertex]) -> LabeledGraph {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let k = vertices.len();
        let mut offsets = Vec::with_capacity(k + 1);
        let mut adj = Vec::new();
        offsets.push(0);
        for &v in vertices {
            for &w in self.neighbors(v) {
                if let Ok(local) = vertices.binary_search(&w) {
                    adj.push(local as Vertex);
                }
            }
            offsets.push(adj.len());
        }
        LabeledGraph { n: k, offsets, adj }
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edge_count())?;
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }

    /// Reads the `n m` header format. Blank lines and `#` comments are skipped.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize> {
                s.ok_or_else(|| Error::Parse { line: idx + 1, msg: "expected two integers".into() })?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })
            };
            let a = parse(it.next())?;
            let b = parse(it.next())?;
            if header.is_none() {
                header = Some((a, b));
            } else {
                edges.push((a as u32, b as u32));
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        if edges.len() != m {
            return Err(Error::Parse { line: 0, msg: format!("header promises {m} edges, found {}", edges.len()) });
        }
        Self::from_labeled_edges(n, &edges)
    }
}

/// G(n,p) by geometric skips over the lexicographic pair order.
pub fn generate_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<LabeledGraph> {
    check_probability(p, "p")?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if p == 0.0 || n == 1 {
        return Ok(LabeledGraph::empty(n));
    }
    let geom = Geometric::new(p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut pairs = Vec::with_capacity(((n as f64) * (n as f64 - 1.0) * p * 0.5 * 1.1) as usize + 16);
    let mut u = 0usize;
    let mut off = 0u64;
    let mut skip = geom.sample(rng);
    while u + 1 < n {
        let row = (n - 1 - u) as u64;
        let target = off.saturating_add(skip);
        if target < row {
            pairs.push((u as Vertex, (u as u64 + 1 + target) as Vertex));
            off = target + 1;
            skip = geom.sample(rng);
        } else {
            skip = target - row;
            u += 1;
            off = 0;
        }
    }
    Ok(LabeledGraph::from_sorted_pairs(n, &pairs))
}

/// Edge probability `1/n + λ n^{-4/3}` of the critical window, clamped to [0, 1].
pub fn critical_p(n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    (1.0 / n + lambda * n.powf(-4.0 / 3.0)).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Original vertices, ascending.
    pub vertices: Vec<Vertex>,
    /// Induced graph on `0..size`, order-preserving relabel of `vertices`.
    pub graph: LabeledGraph,
    pub surplus: usize,
}

impl Component {
    pub fn from_connected(graph: LabeledGraph) -> Result<Self> {
        let parts = partition(&graph);
        if parts.len() != 1 {
            return Err(Error::Disconnected(parts.len()));
        }
        let m = graph.n();
        let surplus = graph.edge_count() + 1 - m;
        Ok(Self { vertices: (0..m as Vertex).collect(), graph, surplus })
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// The relabeled root is always vertex 0, the smallest original label.
    pub fn root(&self) -> Vertex {
        0
    }
}

/// Vertex sets of the components, largest first, ties by smallest vertex.
#[derive(Clone, Debug)]
pub struct Partition {
    pub members: Vec<Vec<Vertex>>,
    pub edges: Vec<usize>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn surplus(&self, i: usize) -> usize {
        self.edges[i] + 1 - self.members[i].len()
    }

    pub fn component(&self, g: &LabeledGraph, i: usize) -> Component {
        Component { vertices: self.members[i].clone(), graph: g.induced(&self.members[i]), surplus: self.surplus(i) }
    }
}

pub fn partition(g: &LabeledGraph) -> Partition {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut members = Vec::new();
    let mut edges = Vec::new();
    let mut queue = Vec::new();
    for s in 0..n as Vertex {
        if seen[s as usize] {
            continue;
        }
        seen[s as usize] = true;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        let mut deg = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            deg += g.degree(v);
            for &w in g.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push(w);
                }
            }
        }
        let mut vs = queue.clone();
        vs.sort_unstable();
        members.push(vs);
        edges.push(deg / 2);
    }
    // discovery order is by smallest vertex, so a stable sort keeps the tie rule
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()));
    Partition {
        members: order.iter().map(|&i| std::mem::take(&mut members[i])).collect(),
        edges: order.iter().map(|&i| edges[i]).collect(),
    }
}

pub fn components(g: &LabeledGraph) -> Vec<Component> {
    let p = partition(g);
    (0..p.len()).map(|i| p.component(g, i)).collect()
}

/// Reusable BFS workspace; only touched entries are reset between calls.
pub struct Bfs {
    dist: Vec<u32>,
    queue: Vec<Vertex>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Self { dist: vec![u32::MAX; n], queue: Vec::with_capacity(n) }
    }

    /// Returns the eccentricity of `src` and one vertex attaining it.
    pub fn run(&mut self, g: &LabeledGraph, src: Vertex) -> (u32, Vertex) {
        for &v in &self.queue {
            self.dist[v as usize] = u32::MAX;
        }
        self.queue.clear();
        self.queue.push(src);
        self.dist[src as usize] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let dv = self.dist[v as usize] + 1;
            for &w in g.neighbors(v) {
                if self.dist[w as usize] == u32::MAX {
                    self.dist[w as usize] = dv;
                    self.queue.push(w);
                }
            }
        }
        let last = *self.queue.last().unwrap();
        (self.dist[last as usize], last)
    }

    /// Distance from the last source, `u32::MAX` if unreachable.
    pub fn dist(&self, v: Vertex) -> u32 {
        self.dist[v as usize]
    }

    pub fn reached(&self) -> &[Vertex] {
        &self.queue
    }
}

/// All-pairs BFS distances of a graph as a dense matrix, `u32::MAX` across components.
pub fn all_pairs(g: &LabeledGraph) -> Vec<u32> {
    let n = g.n();
    let mut out = vec![u32::MAX; n * n];
    let mut bfs = Bfs::new(n);
    for s in 0..n {
        bfs.run(g, s as Vertex);
        for &v in bfs.reached() {
            out[s * n + v as usize] = bfs.dist(v);
        }
    }
    out
}

/// Exact diameter of a connected graph.
///
/// Trees use a double sweep; otherwise eccentricity bounds are tightened BFS by
/// BFS until every vertex is settled.
pub fn connected_diameter(g: &LabeledGraph) -> u32 {
    let n = g.n();
    if n <= 1 {
        return 0;
    }
    let mut bfs = Bfs::new(n);
    if g.edge_count() + 1 == n {
        let (_, far) = bfs.run(g, 0);
        return bfs.run(g, far).0;
    }
    let mut lower = vec![0u32; n];
    let mut upper = vec![u32::MAX; n];
    let mut cand: Vec<Vertex> = (0..n as Vertex).collect();
    let mut best = 0u32;
    let mut pick_high = true;
    let mut v = (0..n as Vertex).max_by_key(|&v| (g.degree(v), std::cmp::Reverse(v))).unwrap();
    loop {
        let (ecc, _) = bfs.run(g, v);
        best = best.max(ecc);
        cand.retain(|&w| {
            let d = bfs.dist(w);
            let wi = w as usize;
            lower[wi] = lower[wi].max(d.max(ecc - d));
            upper[wi] = upper[wi].min(ecc + d);
            best = best.max(lower[wi]);
            true
        });
        cand.retain(|&w| upper[w as usize] > best && lower[w as usize] < upper[w as usize] && w != v);
        if cand.is_empty() {
            return best;
        }
        v = if pick_high {
            *cand.iter().max_by_key(|&&w| (upper[w as usize], g.degree(w))).unwrap()
        } else {
            *cand.iter().min_by_key(|&&w| (lower[w as usize], std::cmp::Reverse(g.degree(w)))).unwrap()
        };
        pick_high = !pick_high;
    }
}

/// `max_i diam(C_i)` over all components, skipping those too small to matter.
pub fn graph_diameter(g: &LabeledGraph) -> u32 {
    let parts = partition(g);
    let mut best = 0u32;
    for i in 0..parts.len() {
        if parts.members[i].len() as u32 <= best + 1 {
            break;
        }
        let sub = g.induced(&parts.members[i]);
        best = best.max(connected_diameter(&sub));
    }
    best
}

/// Distances of a component and its exact diameter.
pub fn distance_stats(c: &Component) -> (FiniteMetricSpace<u32>, u32) {
    distance_stats_capped(c, DEFAULT_DISTANCE_CAP)
}

/// Above `cap` vertices the metric covers `cap` evenly spaced vertices
/// (always including the root); the diameter is still exact.
pub fn distance_stats_capped(c: &Component, cap: usize) -> (FiniteMetricSpace<u32>, u32) {
    let g = &c.graph;
    let m = g.n();
    let cap = cap.max(1);
    let sources: Vec<Vertex> =
        if m <= cap { (0..m as Vertex).collect() } else { (0..cap).map(|i| (i * m / cap) as Vertex).collect() };
    let k = sources.len();
    let mut dist = vec![0u32; k * k];
    let mut bfs = Bfs::new(m);
    let mut full_max = 0;
    for (a, &s) in sources.iter().enumerate() {
        let (ecc, _) = bfs.run(g, s);
        full_max = full_max.max(ecc);
        for (b, &t) in sources.iter().enumerate() {
            dist[a * k + b] = bfs.dist(t);
        }
    }
    let diameter = if m <= cap { full_max } else { connected_diameter(g) };
    (FiniteMetricSpace::new_unchecked(k, dist, 0), diameter)
}
