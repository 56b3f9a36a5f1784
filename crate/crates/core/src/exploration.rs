//! Ordered depth-first and breadth-first exploration.
//!
//! The open set is a `Vec` whose top is the front of `O_i`. Nothing below the
//! top ever moves while it is open, so "the j-th vertex counting from the
//! bottom" is simply `stack[j - 1]`.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabeledGraph, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    DepthFirst,
    BreadthFirst,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplorationTrace {
    pub order_kind: Order,
    /// `v_0, …, v_{n-1}`.
    pub order: Vec<Vertex>,
    /// `X(i)` (or `Y(i)` for breadth-first).
    pub walk: Vec<i64>,
    /// `c_i`.
    pub counter: Vec<u32>,
    /// Parent in the search forest, indexed by vertex.
    pub parent: Vec<Option<Vertex>>,
    /// Forest children in the order they were affixed (ascending).
    pub children: Vec<Vec<Vertex>>,
}

impl ExplorationTrace {
    pub fn components(&self) -> u32 {
        self.counter.last().copied().unwrap_or(0)
    }

    /// The open set `O_i`, front first, rebuilt by replaying the search.
    pub fn open_set(&self, i: usize) -> Vec<Vertex> {
        let mut open: VecDeque<Vertex> = VecDeque::new();
        for (s, &v) in self.order.iter().enumerate() {
            if open.is_empty() {
                open.push_back(v);
            }
            if s == i {
                return open.into_iter().collect();
            }
            let front = open.pop_front();
            debug_assert_eq!(front, Some(v));
            match self.order_kind {
                Order::DepthFirst => self.children[v as usize].iter().rev().for_each(|&w| open.push_front(w)),
                Order::BreadthFirst => open.extend(&self.children[v as usize]),
            }
        }
        Vec::new()
    }

    /// The depth-first tree; requires a connected graph.
    pub fn tree(&self) -> Result<RootedOrderedTree> {
        if self.components() != 1 {
            return Err(Error::Disconnected(self.components() as usize));
        }
        RootedOrderedTree::from_parents(self.parent.clone())
    }
}

pub fn odfs(g: &LabeledGraph) -> ExplorationTrace {
    explore(g, Order::DepthFirst)
}

pub fn bfs_walk(g: &LabeledGraph) -> ExplorationTrace {
    explore(g, Order::BreadthFirst)
}

const UNSEEN: u8 = 0;
const OPEN: u8 = 1;
const DONE: u8 = 2;

fn explore(g: &LabeledGraph, kind: Order) -> ExplorationTrace {
    let n = g.n();
    let mut state = vec![UNSEEN; n];
    let mut order = Vec::with_capacity(n);
    let mut walk = Vec::with_capacity(n);
    let mut counter = Vec::with_capacity(n);
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    // depth-first keeps the front at the back of the Vec
    let mut open: VecDeque<Vertex> = VecDeque::new();
    let mut lowest = 0usize;
    let mut c = 0u32;
    for _ in 0..n {
        if open.is_empty() {
            while state[lowest] != UNSEEN {
                lowest += 1;
            }
            state[lowest] = OPEN;
            open.push_back(lowest as Vertex);
            c += 1;
        }
        let v = match kind {
            Order::DepthFirst => open.pop_back(),
            Order::BreadthFirst => open.pop_front(),
        }
        .unwrap();
        state[v as usize] = DONE;
        order.push(v);
        counter.push(c);
        walk.push(open.len() as i64 - (c as i64 - 1));
        let fresh: Vec<Vertex> = g.neighbors(v).iter().copied().filter(|&w| state[w as usize] == UNSEEN).collect();
        for &w in &fresh {
            state[w as usize] = OPEN;
            parent[w as usize] = Some(v);
        }
        match kind {
            Order::DepthFirst => fresh.iter().rev().for_each(|&w| open.push_back(w)),
            Order::BreadthFirst => open.extend(&fresh),
        }
        children[v as usize] = fresh;
    }
    ExplorationTrace { order_kind: kind, order, walk, counter, parent, children }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedOrderedTree {
    parent: Vec<Option<Vertex>>,
    children: Vec<Vec<Vertex>>,
    root: Vertex,
}

impl RootedOrderedTree {
    pub fn single() -> Self {
        Self { parent: vec![None], children: vec![Vec::new()], root: 0 }
    }

    /// Children lists come out ascending regardless of input order.
    pub fn from_parents(parent: Vec<Option<Vertex>>) -> Result<Self> {
        let m = parent.len();
        if m == 0 {
            return Err(Error::InvalidGraph("empty tree".into()));
        }
        let roots: Vec<usize> = (0..m).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidGraph(format!("{} roots", roots.len())));
        }
        let mut children = vec![Vec::new(); m];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p as usize >= m || p as usize == v {
                    return Err(Error::InvalidGraph(format!("bad parent {p} of {v}")));
                }
                children[p as usize].push(v as Vertex);
            }
        }
        let t = Self { parent, children, root: roots[0] as Vertex };
        if t.preorder().len() != m {
            return Err(Error::InvalidGraph("parent map has a cycle".into()));
        }
        Ok(t)
    }

    /// Orients an undirected tree away from `root`.
    pub fn from_edges(m: usize, edges: &[(Vertex, Vertex)], root: Vertex) -> Result<Self> {
        if edges.len() + 1 != m {
            return Err(Error::InvalidGraph(format!("{} edges for {m} vertices", edges.len())));
        }
        let g = LabeledGraph::from_edges(m, edges)?;
        let mut parent = vec![None; m];
        let mut seen = vec![false; m];
        let mut queue = vec![root];
        seen[root as usize] = true;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in g.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    parent[w as usize] = Some(v);
                    queue.push(w);
                }
            }
        }
        if queue.len() != m {
            return Err(Error::Disconnected(2));
        }
        Self::from_parents(parent)
    }

    pub fn size(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v as usize]
    }

    pub fn parents(&self) -> &[Option<Vertex>] {
        &self.parent
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v as usize]
    }

    /// `(parent, child)` pairs.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        (0..self.size()).filter_map(|v| self.parent[v].map(|p| (p, v as Vertex))).collect()
    }

    pub fn to_graph(&self) -> LabeledGraph {
        LabeledGraph::from_edges(self.size(), &self.edges()).expect("tree edges are valid")
    }

    /// Depth-first order, children visited in ascending label order.
    pub fn preorder(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            if out.len() > self.size() {
                break;
            }
            stack.extend(self.children[v as usize].iter().rev());
        }
        out
    }

    /// Depth of every vertex, indexed by vertex.
    pub fn depths(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.size()];
        for v in self.preorder() {
            for &w in &self.children[v as usize] {
                d[w as usize] = d[v as usize] + 1;
            }
        }
        d
    }

    pub fn height(&self) -> u32 {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Calls `f(i, v_i, stack)` at every step of the depth-first exploration,
    /// after `v_i` is removed: `stack` holds `O_i ∖ {v_i}` with the bottom first.
    pub fn replay<F: FnMut(usize, Vertex, &[Vertex])>(&self, mut f: F) {
        let mut stack = vec![self.root];
        let mut i = 0;
        while let Some(v) = stack.pop() {
            f(i, v, &stack);
            stack.extend(self.children[v as usize].iter().rev());
            i += 1;
        }
    }

    /// Like [`replay`](Self::replay) but also hands over the root-to-`v_i` path.
    pub fn replay_with_path<F: FnMut(usize, Vertex, &[Vertex], &[Vertex])>(&self, mut f: F) {
        let depth = self.depths();
        let mut path: Vec<Vertex> = Vec::new();
        self.replay(|i, v, stack| {
            path.truncate(depth[v as usize] as usize);
            path.push(v);
            f(i, v, stack, &path);
        });
    }

    /// Depth-first walk `X(i) = |O_i| − 1`.
    pub fn walk(&self) -> Vec<i64> {
        let mut w = Vec::with_capacity(self.size());
        self.replay(|_, _, stack| w.push(stack.len() as i64));
        w
    }

    pub fn area(&self) -> u64 {
        self.walk().iter().map(|&x| x as u64).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    DepthFirstWalk,
    Height,
    Contour,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::DepthFirstWalk => "depth_first_walk",
            LatticeKind::Height => "height",
            LatticeKind::Contour => "contour",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeExcursion {
    pub kind: LatticeKind,
    pub values: Vec<i64>,
}

impl LatticeExcursion {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear interpolation between integer times; zero from the last index on.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.values.first().copied().unwrap_or(0) as f64;
        }
        let last = self.values.len().saturating_sub(1);
        if s >= last as f64 {
            return 0.0;
        }
        let k = s.floor() as usize;
        let a = self.values[k] as f64;
        let b = self.values[k + 1] as f64;
        a + (s - k as f64) * (b - a)
    }

    pub fn sup_norm(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "value", "kind"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([i.to_string(), v.to_string(), self.kind.name().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn depth_first_walk(t: &RootedOrderedTree) -> LatticeExcursion {
    LatticeExcursion { kind: LatticeKind::DepthFirstWalk, values: t.walk() }
}

pub fn height_process(t: &RootedOrderedTree) -> LatticeExcursion {
    let d = t.depths();
    LatticeExcursion { kind: LatticeKind::Height, values: t.preorder().iter().map(|&v| d[v as usize] as i64).collect() }
}

/// Contour `C(0..=2(m−1))` and the map `K(i) = 2i − H(i)` into it.
pub fn contour_process(t: &RootedOrderedTree) -> (LatticeExcursion, Vec<usize>) {
    let m = t.size();
    let mut values = Vec::with_capacity(2 * m - 1);
    let mut stack: Vec<(Vertex, usize)> = vec![(t.root(), 0)];
    values.push(0);
    while let Some(top) = stack.last_mut() {
        let (v, next) = *top;
        let ch = t.children(v);
        if next < ch.len() {
            top.1 += 1;
            stack.push((ch[next], 0));
            values.push(stack.len() as i64 - 1);
        } else {
            stack.pop();
            if !stack.is_empty() {
                values.push(stack.len() as i64 - 1);
            }
        }
    }
    let h = height_process(t);
    let k = h.values.iter().enumerate().map(|(i, &hi)| 2 * i - hi as usize).collect();
    (LatticeExcursion { kind: LatticeKind::Contour, values }, k)
}

pub fn area(t: &RootedOrderedTree) -> u64 {
    t.area()
}

/// Non-tree pairs that share a stack, as `(v_i, w)` with `v_i` explored first.
///
/// Each permitted pair is listed exactly once, at the step of its earlier
/// endpoint, in the order of the marks `(i, j)`.
pub fn permitted_edges(t: &RootedOrderedTree) -> Vec<(Vertex, Vertex)> {
    let mut out = Vec::new();
    t.replay(|_, v, stack| out.extend(stack.iter().map(|&w| (v, w))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::all_trees;

    fn g(n: usize, e: &[(u32, u32)]) -> LabeledGraph {
        LabeledGraph::from_labeled_edges(n, e).unwrap()
    }

    fn tree(n: usize, e: &[(u32, u32)]) -> RootedOrderedTree {
        let e0: Vec<_> = e.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        RootedOrderedTree::from_edges(n, &e0, 0).unwrap()
    }

    #[test]
    fn odfs_by_hand() {
        let t = odfs(&LabeledGraph::empty(1));
        assert_eq!((t.order.clone(), t.walk.clone()), (vec![0], vec![0]));
        let t = odfs(&g(3, &[(1, 2), (2, 3)]));
        assert_eq!((t.order.clone(), t.walk.clone()), (vec![0, 1, 2], vec![0, 0, 0]));
        let t = odfs(&g(3, &[(1, 2), (1, 3)]));
        assert_eq!((t.order.clone(), t.walk.clone()), (vec![0, 1, 2], vec![0, 1, 0]));
    }

    #[test]
    fn odfs_explores_smallest_first() {
        // 1 sees 4 and 2; 2 sees 3; so the order is 1,2,3,4
        let t = odfs(&g(4, &[(1, 4), (1, 2), (2, 3)]));
        assert_eq!(t.order, vec![0, 1, 2, 3]);
        assert_eq!(t.walk, vec![0, 1, 1, 0]);
        assert_eq!(t.open_set(1), vec![1, 3]);
    }

    #[test]
    fn bfs_by_hand() {
        let t = bfs_walk(&g(3, &[(1, 2), (2, 3)]));
        assert_eq!((t.order.clone(), t.walk.clone()), (vec![0, 1, 2], vec![0, 0, 0]));
        let t = bfs_walk(&g(3, &[(1, 2), (1, 3)]));
        assert_eq!((t.order.clone(), t.walk.clone()), (vec![0, 1, 2], vec![0, 1, 0]));
        let t = bfs_walk(&g(4, &[(1, 2), (3, 4)]));
        assert_eq!(t.walk, vec![0, 0, -1, -1]);
        assert_eq!(t.counter, vec![1, 1, 2, 2]);
    }

    #[test]
    fn bfs_and_dfs_differ_on_a_broom() {
        // 1–2, 1–3, 2–4: breadth-first visits 3 before 4
        let gr = g(4, &[(1, 2), (1, 3), (2, 4)]);
        assert_eq!(odfs(&gr).order, vec![0, 1, 3, 2]);
        assert_eq!(bfs_walk(&gr).order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn new_minimum_exactly_at_component_roots() {
        let gr = crate::graph::generate_gnp(400, 1.0 / 400.0, &mut crate::rng::stream(6, 0)).unwrap();
        let t = bfs_walk(&gr);
        let mut min = i64::MAX;
        for i in 0..400 {
            let is_root = t.parent[t.order[i] as usize].is_none();
            assert_eq!(t.walk[i] < min, is_root, "step {i}");
            min = min.min(t.walk[i]);
        }
    }

    #[test]
    fn disconnected_walk_counts_components() {
        let gr = crate::graph::generate_gnp(300, 1.2 / 300.0, &mut crate::rng::stream(6, 1)).unwrap();
        let t = odfs(&gr);
        assert_eq!(t.components() as usize, crate::graph::partition(&gr).len());
        assert_eq!(t.order[0], 0);
        assert!(t.tree().is_err());
    }

    #[test]
    fn connected_trace_properties() {
        for (s, tr) in all_trees(6).iter().enumerate().step_by(37) {
            let gr = tr.to_graph();
            let t = odfs(&gr);
            assert!(t.counter.iter().all(|&c| c == 1), "tree {s}");
            assert_eq!(t.tree().unwrap(), *tr);
            assert_eq!(t.walk, tr.walk());
            for i in 0..6 {
                assert_eq!(t.walk[i], t.open_set(i).len() as i64 - 1);
            }
            assert_eq!(*t.walk.last().unwrap(), 0);
        }
    }

    #[test]
    fn open_vertices_hang_off_the_current_path() {
        let d_tree = crate::samplers::uniform_tree(60, &mut crate::rng::stream(2, 9));
        let depth = d_tree.depths();
        d_tree.replay_with_path(|_, _, stack, path| {
            for &w in stack {
                let p = d_tree.parent(w).unwrap();
                assert!(path.contains(&p) && !path.contains(&w));
                assert_eq!(depth[w as usize], depth[p as usize] + 1);
            }
        });
    }

    #[test]
    fn figure_one_tree() {
        // root children 2, 6, 7; 2 → 3; 3 → 4, 5; 7 → 8, 9
        let t = tree(9, &[(1, 2), (1, 6), (1, 7), (2, 3), (3, 4), (3, 5), (7, 8), (7, 9)]);
        assert_eq!(height_process(&t).values, vec![0, 1, 2, 3, 3, 1, 1, 2, 2]);
        assert_eq!(t.height(), 3);
    }

    #[test]
    fn heights_and_contours() {
        assert_eq!(height_process(&RootedOrderedTree::single()).values, vec![0]);
        let path = tree(3, &[(1, 2), (2, 3)]);
        assert_eq!(height_process(&path).values, vec![0, 1, 2]);
        let (c, k) = contour_process(&path);
        assert_eq!(c.values, vec![0, 1, 2, 1, 0]);
        assert_eq!(k, vec![0, 1, 2]);
        let (c, k) = contour_process(&RootedOrderedTree::single());
        assert_eq!((c.values, k), (vec![0], vec![0]));

        let t = crate::samplers::uniform_tree(50, &mut crate::rng::stream(1, 50));
        let h = height_process(&t);
        let (c, k) = contour_process(&t);
        assert_eq!(c.len(), 2 * 49 + 1);
        assert!(c.values.windows(2).all(|w| (w[0] - w[1]).abs() == 1));
        assert_eq!((c.values[0], *c.values.last().unwrap()), (0, 0));
        for i in 0..50 {
            assert_eq!(c.values[k[i]], h.values[i]);
        }
        assert!(h.values.windows(2).all(|w| w[1] <= w[0] + 1));
    }

    #[test]
    fn area_and_permitted_by_hand() {
        let path = tree(3, &[(1, 2), (2, 3)]);
        assert_eq!(area(&path), 0);
        assert!(permitted_edges(&path).is_empty());
        let star = tree(3, &[(1, 2), (1, 3)]);
        assert_eq!(area(&star), 1);
        assert_eq!(permitted_edges(&star), vec![(1, 2)]);
    }

    #[test]
    fn permitted_edges_are_non_tree_and_count_area() {
        for m in 1..=6 {
            for t in all_trees(m) {
                let p = permitted_edges(&t);
                assert_eq!(p.len() as u64, area(&t));
                let tg = t.to_graph();
                let mut seen = std::collections::BTreeSet::new();
                for &(u, v) in &p {
                    assert!(!tg.has_edge(u, v));
                    assert!(seen.insert((u.min(v), u.max(v))));
                }
            }
        }
    }

    #[test]
    fn sum_over_trees_of_two_to_area() {
        let s: u64 = all_trees(4).iter().map(|t| 1u64 << area(t)).sum();
        assert_eq!(all_trees(4).len(), 16);
        assert_eq!(s, 38);
    }

    #[test]
    fn interpolation() {
        let x = LatticeExcursion { kind: LatticeKind::DepthFirstWalk, values: vec![0, 2, 1, 0] };
        assert_eq!(x.eval(0.5), 1.0);
        assert_eq!(x.eval(1.25), 1.75);
        assert_eq!(x.eval(3.0), 0.0);
        assert_eq!(x.eval(7.5), 0.0);
    }

    #[test]
    fn walk_csv() {
        let x = LatticeExcursion { kind: LatticeKind::Height, values: vec![0, 1] };
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,value,kind\n0,0,height\n1,1,height\n");
    }

    #[test]
    fn from_parents_rejects_bad_maps() {
        assert!(RootedOrderedTree::from_parents(vec![None, None]).is_err());
        assert!(RootedOrderedTree::from_parents(vec![None, Some(2), Some(1)]).is_err());
        assert!(RootedOrderedTree::from_parents(vec![]).is_err());
    }
}
