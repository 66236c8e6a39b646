//! Finite simple graphs.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// A simple undirected graph on vertices `0..n`. Edges are stored as
/// ordered pairs `(u, v)` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("loop at vertex {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self::from_edge_set(n, set))
    }

    fn from_edge_set(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Graph { n, edges, adjacency }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edge_set(n, BTreeSet::new())
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edge_set(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect())
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycles need at least 3 vertices");
        Self::from_edge_set(n, (0..n).map(|u| (u.min((u + 1) % n), u.max((u + 1) % n))).collect())
    }

    pub fn path(n: usize) -> Self {
        Self::from_edge_set(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    pub fn star(leaves: usize) -> Self {
        Self::from_edge_set(leaves + 1, (1..=leaves).map(|v| (0, v)).collect())
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        Self::from_edge_set(a + b, (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Vertex sets of the connected components, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut members = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    /// Subgraph induced on `vertices`, relabelled in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in vertices.iter().enumerate() {
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u].min(index[v]), index[u].max(index[v])))
            .collect();
        Self::from_edge_set(vertices.len(), edges)
    }

    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)))
            .collect();
        Self::from_edge_set(self.n + other.n, edges)
    }

    /// Relabels vertices: new vertex `k` is old vertex `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        let mut inverse = vec![0; self.n];
        for (k, &p) in perm.iter().enumerate() {
            inverse[p] = k;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (inverse[u].min(inverse[v]), inverse[u].max(inverse[v])))
            .collect();
        Self::from_edge_set(self.n, edges)
    }

    /// True if `edges` form a spanning tree of this graph.
    pub fn is_spanning_tree(&self, edges: &[(usize, usize)]) -> bool {
        if self.n == 0 || edges.len() != self.n - 1 {
            return false;
        }
        if !edges.iter().all(|&(u, v)| self.has_edge(u, v)) {
            return false;
        }
        match Graph::new(self.n, edges.iter().copied()) {
            Ok(tree) => tree.is_connected(),
            Err(_) => false,
        }
    }
}
