//! Exhaustive enumeration of small labeled trees and connected graphs.

use crate::exploration::RootedOrderedTree;
use crate::graph::{LabeledGraph, Vertex};

/// Decodes a Prüfer sequence over `0..m` into tree edges in linear time.
pub fn prufer_decode(seq: &[u32], m: usize) -> Vec<(Vertex, Vertex)> {
    assert_eq!(seq.len() + 2, m.max(2), "a Prüfer sequence for {m} vertices has {} entries", m.max(2) - 2);
    if m == 1 {
        return Vec::new();
    }
    let mut degree = vec![1u32; m];
    for &v in seq {
        degree[v as usize] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    let mut ptr = degree.iter().position(|&d| d == 1).unwrap();
    let mut leaf = ptr;
    for &v in seq {
        let v = v as usize;
        edges.push((leaf as Vertex, v as Vertex));
        degree[leaf] = 0;
        degree[v] -= 1;
        if degree[v] == 1 && v < ptr {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf as Vertex, (m - 1) as Vertex));
    edges
}

/// Number of labeled trees, `m^{m−2}`. Overflows past `m = 16`.
pub fn tree_count(m: usize) -> u64 {
    if m <= 2 {
        1
    } else {
        (m as u64).pow(m as u32 - 2)
    }
}

/// The tree whose Prüfer sequence spells `index` in base `m`, rooted at 0.
pub fn tree_from_index(m: usize, mut index: u64) -> RootedOrderedTree {
    let len = m.saturating_sub(2);
    let mut seq = vec![0u32; len];
    for s in seq.iter_mut().rev() {
        *s = (index % m as u64) as u32;
        index /= m as u64;
    }
    if m == 1 {
        return RootedOrderedTree::single();
    }
    RootedOrderedTree::from_edges(m, &prufer_decode(&seq, m), 0).expect("Prüfer decoding yields a tree")
}

/// All `m^{m−2}` labeled trees on `0..m`, rooted at 0, in Prüfer index order.
pub fn all_trees(m: usize) -> Vec<RootedOrderedTree> {
    (0..tree_count(m)).map(|i| tree_from_index(m, i)).collect()
}

/// Index of the pair `u < v` in lexicographic order.
pub fn pair_index(u: usize, v: usize, m: usize) -> usize {
    debug_assert!(u < v && v < m);
    u * (2 * m - u - 1) / 2 + (v - u - 1)
}

/// Edge set of a graph as a bitmask over [`pair_index`] (m ≤ 11).
pub fn edge_mask(g: &LabeledGraph) -> u64 {
    let m = g.n();
    g.edges().fold(0u64, |acc, (u, v)| acc | 1 << pair_index(u as usize, v as usize, m))
}

pub fn graph_from_mask(m: usize, mask: u64) -> LabeledGraph {
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if mask >> pair_index(u, v, m) & 1 == 1 {
                edges.push((u as Vertex, v as Vertex));
            }
        }
    }
    LabeledGraph::from_edges(m, &edges).unwrap()
}

fn mask_connected(m: usize, mask: u64) -> bool {
    let mut adj = vec![0u32; m];
    for u in 0..m {
        for v in u + 1..m {
            if mask >> pair_index(u, v, m) & 1 == 1 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
    }
    let full = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[v];
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen & full == full
}

/// Edge masks of every connected graph on `0..m`, ascending (m ≤ 8).
pub fn all_connected_graphs(m: usize) -> Vec<u64> {
    assert!((1..=8).contains(&m));
    let pairs = m * (m - 1) / 2;
    (0..1u64 << pairs).filter(|&mask| mask_connected(m, mask)).collect()
}

/// Connected labeled graph counts from the standard recurrence
/// `c_n = 2^{C(n,2)} − Σ_{k<n} C(n−1,k−1) c_k 2^{C(n−k,2)}`.
pub fn connected_graph_count(m: usize) -> u128 {
    let binom = |n: usize, k: usize| -> u128 { (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) };
    let pow2 = |n: usize| 1u128 << (n * n.saturating_sub(1) / 2);
    let mut c = vec![0u128; m + 1];
    for n in 1..=m {
        let mut s = pow2(n);
        for k in 1..n {
            s -= binom(n - 1, k - 1) * c[k] * pow2(n - k);
        }
        c[n] = s;
    }
    c[m]
}
