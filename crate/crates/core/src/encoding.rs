//! Connected graphs as marked depth-first walks, and the height-process graph.
//!
//! A mark `(i, j)` joins `v_i` to the `j`-th vertex of `O_i ∖ {v_i}` counted
//! from the bottom of the stack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::{odfs, RootedOrderedTree};
use crate::graph::{Component, LabeledGraph, Vertex};

/// A finite set of lattice points `(i, j)` with `j ≥ 1`, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    points: Vec<(u32, u32)>,
}

impl PointSet {
    pub fn new<I: IntoIterator<Item = (u32, u32)>>(points: I) -> Result<Self> {
        let mut points: Vec<(u32, u32)> = points.into_iter().collect();
        if let Some(&(i, _)) = points.iter().find(|p| p.1 == 0) {
            return Err(Error::InvalidParameter(format!("lattice point ({i}, 0) has j = 0")));
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { points })
    }

    pub(crate) fn from_sorted(points: Vec<(u32, u32)>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]) && points.iter().all(|p| p.1 >= 1));
        Self { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(u32, u32)] {
        &self.points
    }

    pub fn contains(&self, p: (u32, u32)) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    /// `Q ∩ f`: the points with `1 ≤ j ≤ f(i)`.
    pub fn under(&self, f: &[i64]) -> PointSet {
        PointSet {
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(i, j)| (i as usize) < f.len() && j as i64 <= f[i as usize])
                .collect(),
        }
    }

    /// `Q ∩ (H/2)`: the points with `2j ≤ H(i)`.
    pub fn under_half(&self, h: &[i64]) -> PointSet {
        PointSet {
            points: self
                .points
                .iter()
                .copied()
                .filter(|&(i, j)| (i as usize) < h.len() && 2 * j as i64 <= h[i as usize])
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedWalk {
    pub tree: RootedOrderedTree,
    pub marks: PointSet,
}

#[derive(Serialize, Deserialize)]
struct MarkedWalkJson {
    walk: Vec<i64>,
    /// 1-based parent labels, 0 for the root.
    parent: Vec<u32>,
    marks: Vec<[u32; 2]>,
}

impl MarkedWalk {
    pub fn walk(&self) -> Vec<i64> {
        self.tree.walk()
    }

    pub fn to_json(&self) -> Result<String> {
        let j = MarkedWalkJson {
            walk: self.walk(),
            parent: self.tree.parents().iter().map(|p| p.map_or(0, |p| p + 1)).collect(),
            marks: self.marks.points().iter().map(|&(i, j)| [i, j]).collect(),
        };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: MarkedWalkJson = serde_json::from_str(s)?;
        let tree = RootedOrderedTree::from_parents(j.parent.iter().map(|&p| p.checked_sub(1)).collect())?;
        let walk = tree.walk();
        if walk != j.walk {
            return Err(Error::InvalidParameter("walk does not match the parent map".into()));
        }
        let marks = PointSet::new(j.marks.iter().map(|m| (m[0], m[1])))?;
        if marks.under(&walk).len() != marks.len() {
            return Err(Error::InvalidParameter("a mark lies above the walk".into()));
        }
        Ok(Self { tree, marks })
    }
}

/// The marked walk of a connected component (relabeled graph).
pub fn encode(c: &Component) -> Result<MarkedWalk> {
    encode_graph(&c.graph)
}

pub fn encode_graph(g: &LabeledGraph) -> Result<MarkedWalk> {
    let trace = odfs(g);
    let tree = trace.tree()?;
    let m = g.n();
    let mut pos = vec![u32::MAX; m];
    let mut stack = vec![tree.root()];
    pos[tree.root() as usize] = 0;
    let mut marks = Vec::new();
    let mut i = 0u32;
    while let Some(v) = stack.pop() {
        pos[v as usize] = u32::MAX;
        let mut here: Vec<(u32, u32)> = g
            .neighbors(v)
            .iter()
            .filter(|&&w| pos[w as usize] != u32::MAX)
            .map(|&w| (i, pos[w as usize] + 1))
            .collect();
        here.sort_unstable();
        marks.extend(here);
        for &c in tree.children(v).iter().rev() {
            pos[c as usize] = stack.len() as u32;
            stack.push(c);
        }
        i += 1;
    }
    debug_assert_eq!(marks.len() + m - 1, g.edge_count());
    Ok(MarkedWalk { tree, marks: PointSet::from_sorted(marks) })
}

/// `G^X(T, Q)`: the tree plus one edge per point of `Q` under the walk.
pub fn decode_gx(t: &RootedOrderedTree, q: &PointSet) -> LabeledGraph {
    let mut edges = t.edges();
    let pts = q.points();
    let mut k = 0;
    t.replay(|i, v, stack| {
        while k < pts.len() && (pts[k].0 as usize) < i {
            k += 1;
        }
        while k < pts.len() && pts[k].0 as usize == i {
            let j = pts[k].1 as usize;
            if j <= stack.len() {
                edges.push((v, stack[j - 1]));
            }
            k += 1;
        }
    });
    LabeledGraph::from_edges(t.size(), &edges).expect("decoded edges are valid")
}

pub fn decode(mw: &MarkedWalk) -> LabeledGraph {
    decode_gx(&mw.tree, &mw.marks)
}

/// `G^H(T, Q)`: for `(i, j)` with `0 < 2j ≤ H(i)`, join `v_i` to its ancestor at depth `2j − 1`.
pub fn build_gh(t: &RootedOrderedTree, q: &PointSet) -> LabeledGraph {
    let mut edges = t.edges();
    let pts = q.points();
    let mut k = 0;
    t.replay_with_path(|i, v, _, path| {
        while k < pts.len() && (pts[k].0 as usize) < i {
            k += 1;
        }
        let h = path.len() - 1;
        while k < pts.len() && pts[k].0 as usize == i {
            let j = pts[k].1 as usize;
            if 0 < 2 * j && 2 * j <= h {
                let a: Vertex = path[2 * j - 1];
                if a != v {
                    edges.push((v, a));
                }
            }
            k += 1;
        }
    });
    LabeledGraph::from_edges(t.size(), &edges).expect("height-process edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{all_trees, edge_mask};
    use crate::exploration::area;

    fn tree(n: usize, e: &[(u32, u32)]) -> RootedOrderedTree {
        let e0: Vec<_> = e.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        RootedOrderedTree::from_edges(n, &e0, 0).unwrap()
    }

    fn ps(p: &[(u32, u32)]) -> PointSet {
        PointSet::new(p.iter().copied()).unwrap()
    }

    #[test]
    fn tree_has_no_marks() {
        let t = tree(4, &[(1, 2), (2, 3), (2, 4)]);
        let mw = encode_graph(&t.to_graph()).unwrap();
        assert!(mw.marks.is_empty());
        assert_eq!(mw.tree, t);
    }

    #[test]
    fn triangle_by_hand() {
        let tri = LabeledGraph::from_labeled_edges(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let mw = encode_graph(&tri).unwrap();
        assert_eq!(mw.tree, tree(3, &[(1, 2), (1, 3)]));
        assert_eq!(mw.marks, ps(&[(1, 1)]));
        assert_eq!(decode(&mw), tri);
    }

    #[test]
    fn decode_by_hand() {
        let star = tree(3, &[(1, 2), (1, 3)]);
        assert_eq!(decode_gx(&star, &PointSet::empty()), star.to_graph());
        assert_eq!(decode_gx(&star, &ps(&[(1, 1)])).edge_count(), 3);
        assert_eq!(decode_gx(&star, &ps(&[(5, 9)])), star.to_graph());
    }

    #[test]
    fn gh_by_hand() {
        let path = tree(4, &[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(build_gh(&path, &PointSet::empty()), path.to_graph());
        let g = build_gh(&path, &ps(&[(3, 1)]));
        assert!(g.has_edge(3, 1));
        assert_eq!(g.edge_count(), 4);
        let star = tree(3, &[(1, 2), (1, 3)]);
        assert_eq!(build_gh(&star, &ps(&[(1, 1)])), star.to_graph());
    }

    #[test]
    fn pointset_rejects_zero_column() {
        assert!(PointSet::new([(1, 0)]).is_err());
        assert_eq!(ps(&[(2, 1), (1, 1), (2, 1)]).points(), &[(1, 1), (2, 1)]);
    }

    #[test]
    fn encode_rejects_disconnected() {
        let g = LabeledGraph::from_labeled_edges(3, &[(1, 2)]).unwrap();
        assert!(encode_graph(&g).is_err());
    }

    fn all_marks(t: &RootedOrderedTree) -> Vec<(u32, u32)> {
        let w = t.walk();
        let mut out = Vec::new();
        for (i, &x) in w.iter().enumerate() {
            for j in 1..=x as u32 {
                out.push((i as u32, j));
            }
        }
        out
    }

    #[test]
    fn decode_keeps_tree_and_partitions_graphs() {
        for m in 1..=5 {
            let mut masks = Vec::new();
            for t in all_trees(m) {
                let marks = all_marks(&t);
                assert_eq!(marks.len() as u64, area(&t));
                for sub in 0..1u32 << marks.len() {
                    let q = PointSet::from_sorted(
                        (0..marks.len()).filter(|&b| sub >> b & 1 == 1).map(|b| marks[b]).collect(),
                    );
                    let g = decode_gx(&t, &q);
                    assert_eq!(g.edge_count(), m - 1 + q.len());
                    let back = encode_graph(&g).unwrap();
                    assert_eq!(back.tree, t);
                    assert_eq!(back.marks, q);
                    masks.push(edge_mask(&g));
                }
            }
            let total = masks.len();
            masks.sort_unstable();
            masks.dedup();
            assert_eq!(masks.len(), total);
            assert_eq!(total as u128, crate::enumerate::connected_graph_count(m));
        }
    }

    #[test]
    fn json_round_trip() {
        let tri = LabeledGraph::from_labeled_edges(4, &[(1, 2), (2, 3), (1, 3), (3, 4)]).unwrap();
        let mw = encode_graph(&tri).unwrap();
        let s = mw.to_json().unwrap();
        assert!(s.contains("\"walk\"") && s.contains("\"parent\"") && s.contains("\"marks\""));
        assert_eq!(MarkedWalk::from_json(&s).unwrap(), mw);
        assert!(MarkedWalk::from_json(r#"{"walk":[0,0],"parent":[0,1],"marks":[[0,1]]}"#).is_err());
    }
}
