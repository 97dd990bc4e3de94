//! Per-node multi-hop computational graphs.
//!
//! An L-layer GNN needs, for node i, the nodes at graph distance exactly
//! 1..L (breadth-first shells on the union topology) plus their degrees.
//! The delay bounds and the peer-to-peer schedule simulator both work off
//! this structure.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::{Error, Result};

/// Breadth-first shells around one root, with full-topology degrees.
///
/// Indices refer to rows of the topology matrix the graph was extracted
/// from. `hop_sets[l-1]` holds the nodes at distance exactly `l`; shells are
/// pairwise disjoint and never contain the root. `hop_degrees` mirrors the
/// shells with each node's degree in the full topology, and
/// `shell_neighbors` mirrors them with each node's sorted full-topology
/// neighbor list (what the schedule simulator walks).
#[derive(Debug, Clone)]
pub struct ComputationalGraph {
    pub root: usize,
    pub hops: usize,
    pub hop_sets: Vec<Vec<usize>>,
    pub hop_degrees: Vec<Vec<usize>>,
    pub root_degree: usize,
    pub root_neighbors: Vec<usize>,
    pub shell_neighbors: Vec<Vec<Vec<usize>>>,
    /// Edges induced on {root} ∪ shells, as (i, j) with i < j.
    pub edges: Vec<(usize, usize)>,
}

impl ComputationalGraph {
    /// All nodes within distance `hops` of the root, root first.
    pub fn ball(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        for shell in &self.hop_sets {
            out.extend_from_slice(shell);
        }
        out
    }
}

/// Sorted adjacency lists of a binary symmetric topology matrix.
pub fn adjacency_lists(topology: &Array2<u8>) -> Vec<Vec<usize>> {
    let n = topology.nrows();
    let mut lists = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && topology[[i, j]] != 0 {
                lists[i].push(j);
            }
        }
    }
    lists
}

/// Extract the breadth-first shells of `root` up to `hops` levels.
///
/// Nodes reachable at several distances land in their minimum-distance
/// shell; nodes farther than `hops` are excluded.
pub fn extract(topology: &Array2<u8>, root: usize, hops: usize) -> Result<ComputationalGraph> {
    let n = topology.nrows();
    if root >= n {
        return Err(Error::RootOutOfRange(root, n));
    }
    if hops == 0 {
        return Err(Error::InvalidConfig("hop count must be at least 1".into()));
    }
    let adj = adjacency_lists(topology);
    extract_with_adjacency(&adj, root, hops)
}

/// Same as [`extract`] but reusing precomputed adjacency lists; handy when
/// sweeping many roots over one topology.
pub fn extract_with_adjacency(
    adj: &[Vec<usize>],
    root: usize,
    hops: usize,
) -> Result<ComputationalGraph> {
    let n = adj.len();
    if root >= n {
        return Err(Error::RootOutOfRange(root, n));
    }
    if hops == 0 {
        return Err(Error::InvalidConfig("hop count must be at least 1".into()));
    }

    let mut dist = vec![usize::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(root);
    let mut hop_sets = vec![Vec::new(); hops];
    while let Some(u) = queue.pop_front() {
        if dist[u] == hops {
            continue;
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                hop_sets[dist[v] - 1].push(v);
                queue.push_back(v);
            }
        }
    }
    for shell in &mut hop_sets {
        shell.sort_unstable();
    }

    let hop_degrees = hop_sets
        .iter()
        .map(|shell| shell.iter().map(|&x| adj[x].len()).collect())
        .collect();
    let shell_neighbors = hop_sets
        .iter()
        .map(|shell| shell.iter().map(|&x| adj[x].clone()).collect())
        .collect();

    let mut edges = Vec::new();
    let in_ball = |v: usize| dist[v] <= hops;
    for u in 0..n {
        if !in_ball(u) {
            continue;
        }
        for &v in &adj[u] {
            if u < v && in_ball(v) {
                edges.push((u, v));
            }
        }
    }

    Ok(ComputationalGraph {
        root,
        hops,
        hop_sets,
        hop_degrees,
        root_degree: adj[root].len(),
        root_neighbors: adj[root].clone(),
        shell_neighbors,
        edges,
    })
}

/// Max and sum of full-topology degrees over the hop-`l` shell; (0, 0) when
/// the shell is empty. `l` is 1-based.
pub fn hop_degree_stats(cg: &ComputationalGraph, l: usize) -> Result<(usize, usize)> {
    if l == 0 || l > cg.hops {
        return Err(Error::HopOutOfRange { hop: l, hops: cg.hops });
    }
    let degrees = &cg.hop_degrees[l - 1];
    let max = degrees.iter().copied().max().unwrap_or(0);
    let sum = degrees.iter().sum();
    Ok((max, sum))
}

#[cfg(test)]
pub(crate) fn topology_from_edges(n: usize, edges: &[(usize, usize)]) -> Array2<u8> {
    let mut t = Array2::zeros((n, n));
    for &(i, j) in edges {
        t[[i, j]] = 1;
        t[[j, i]] = 1;
    }
    t
}

/// Two-level test tree: root 0 with children 1, 2; node 1 has three leaf
/// children, node 2 has four. Used across the delay tests.
#[cfg(test)]
pub(crate) fn two_level_tree() -> Array2<u8> {
    topology_from_edges(
        10,
        &[
            (0, 1),
            (0, 2),
            (1, 3),
            (1, 4),
            (1, 5),
            (2, 6),
            (2, 7),
            (2, 8),
            (2, 9),
        ],
    )
}
