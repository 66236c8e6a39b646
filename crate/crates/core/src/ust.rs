//! Random graphs from step kernels and their uniform spanning trees.
//!
//! Both graph models draw vertex types i.i.d. from `mu` and then include
//! each pair independently: with probability `min(1, w / n)` in the sparse
//! model and `min(1, w)` in the dense one. Pairs inside one type block are
//! visited with geometric skips, so a draw costs `O(n + edges + types²)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::StepKernel;
use crate::probs::BallDistribution;
use crate::rational::{self, Q};
use crate::rng::{self, SampleRng};
use crate::simulate::assemble;
use crate::trees::RootedTree;

/// Draws per sampled graph before [`ust_ball_distribution`] gives up on a
/// connected sample.
const MAX_ATTEMPTS_PER_GRAPH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledGraph {
    pub graph: Graph,
    pub vertex_types: Vec<usize>,
}

fn draw_types(k: &StepKernel, n: usize, rng: &mut SampleRng) -> Vec<usize> {
    let mu = k.mu_f64();
    let mut cdf = Vec::with_capacity(mu.len());
    let mut acc = 0.0;
    for m in mu {
        acc += m;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
        })
        .collect()
}

/// Number of failures before the next success of a `p`-coin.
fn geometric_skip(p: f64, rng: &mut SampleRng) -> usize {
    let u: f64 = rng.random();
    let skip = ((1.0 - u).ln() / (1.0 - p).ln()).floor();
    if skip.is_finite() && skip < usize::MAX as f64 {
        skip as usize
    } else {
        usize::MAX
    }
}

/// Calls `emit(a, b)` for each selected index pair, with `a` in `0..rows`
/// and `b` in `0..cols` (`b < a` when `triangle`).
fn bernoulli_pairs(
    rows: usize,
    cols: usize,
    triangle: bool,
    p: f64,
    rng: &mut SampleRng,
    mut emit: impl FnMut(usize, usize),
) {
    if p <= 0.0 || rows == 0 {
        return;
    }
    let row_len = |a: usize| if triangle { a } else { cols };
    let (mut a, mut b) = (0usize, 0usize);
    let mut offset = if p >= 1.0 { 0 } else { geometric_skip(p, rng) };
    loop {
        // Advance `offset` positions from (a, b).
        while a < rows && b.saturating_add(offset) >= row_len(a) {
            offset -= row_len(a) - b;
            a += 1;
            b = 0;
        }
        if a >= rows {
            return;
        }
        b += offset;
        emit(a, b);
        b += 1;
        offset = if p >= 1.0 { 0 } else { geometric_skip(p, rng) };
    }
}

fn sample_with(k: &StepKernel, n: usize, prob: impl Fn(&Q) -> f64, rng: &mut SampleRng) -> SampledGraph {
    let vertex_types = draw_types(k, n, rng);
    let mut blocks = vec![Vec::new(); k.n()];
    for (v, &t) in vertex_types.iter().enumerate() {
        blocks[t].push(v);
    }
    let mut edges = Vec::new();
    for a in 0..k.n() {
        for b in 0..=a {
            let p = prob(&k.w()[a][b]);
            let (ba, bb) = (&blocks[a], &blocks[b]);
            bernoulli_pairs(ba.len(), bb.len(), a == b, p, rng, |x, y| edges.push((ba[x], bb[y])));
        }
    }
    let graph = Graph::new(n, edges).expect("sampled pairs are distinct and loop-free");
    SampledGraph { graph, vertex_types }
}

/// The sparse model: pairs of types `(a, b)` are joined with probability
/// `min(1, w[a][b] / n)`.
pub fn sample_sparse_graph(k: &StepKernel, n: usize, rng: &mut SampleRng) -> SampledGraph {
    let n_f = n as f64;
    sample_with(k, n, |w| (rational::to_f64(w) / n_f).min(1.0), rng)
}

/// The dense model: pairs of types `(a, b)` are joined with probability
/// `min(1, w[a][b])`. See [`dense_clips`].
pub fn sample_dense_graph(k: &StepKernel, n: usize, rng: &mut SampleRng) -> SampledGraph {
    sample_with(k, n, |w| rational::to_f64(w).min(1.0), rng)
}

/// True when some entry exceeds 1, so the dense model does not sample `k`
/// itself but its truncation at 1.
pub fn dense_clips(k: &StepKernel) -> bool {
    k.max_entry() > Q::from_integer(1.into())
}

/// A uniformly random spanning tree of a connected graph, by loop-erased
/// random walks. Edges are returned as sorted `(u, v)` pairs with `u < v`.
pub fn wilson_ust(g: &Graph, rng: &mut SampleRng) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    if n == 0 || !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[0] = true;
    for start in 1..n {
        let mut u = start;
        while !in_tree[u] {
            let nbrs = g.neighbors(u);
            next[u] = nbrs[rng.random_range(0..nbrs.len())];
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|u| (u.min(next[u]), u.max(next[u]))).collect();
    edges.sort_unstable();
    Ok(edges)
}

/// Adjacency lists of an edge list on `n` vertices.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Vertices within distance `r` of `root`, in breadth-first order, with the
/// index (in that order) of each vertex's parent.
fn bfs_ball(adj: &[Vec<usize>], root: usize, r: usize) -> (Vec<usize>, Vec<usize>) {
    let mut index = BTreeMap::new();
    index.insert(root, 0);
    let mut order = vec![root];
    let mut parents = vec![0];
    let mut level = 0..1;
    for _ in 0..r {
        let start = order.len();
        for pos in level.clone() {
            for &v in &adj[order[pos]] {
                if let std::collections::btree_map::Entry::Vacant(e) = index.entry(v) {
                    e.insert(order.len());
                    order.push(v);
                    parents.push(pos);
                }
            }
        }
        level = start..order.len();
    }
    (order, parents)
}

/// The `r`-ball around `root` in a forest given by adjacency lists.
pub fn tree_ball(adj: &[Vec<usize>], root: usize, r: usize) -> RootedTree {
    assemble(&bfs_ball(adj, root, r).1)
}

/// The `r`-ball around `root` in `g`, or `None` if it contains a cycle.
pub fn graph_ball(g: &Graph, root: usize, r: usize) -> Option<RootedTree> {
    let adj: Vec<Vec<usize>> = (0..g.n()).map(|v| g.neighbors(v).to_vec()).collect();
    let (order, parents) = bfs_ball(&adj, root, r);
    let inside: std::collections::BTreeSet<usize> = order.iter().copied().collect();
    let edges = order.iter().map(|&v| adj[v].iter().filter(|u| inside.contains(u)).count()).sum::<usize>() / 2;
    (edges + 1 == order.len()).then(|| assemble(&parents))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UstReport {
    pub distribution: BallDistribution,
    pub graphs: usize,
    pub roots_per_graph: usize,
    pub resampled_disconnected: usize,
    /// Set when several roots share one tree, so samples are not independent.
    pub correlated_roots: bool,
}

/// Ball classes at radius `r` around uniform roots of uniform spanning trees
/// of `graphs` independent dense graphs on `n` vertices.
///
/// Graph `g` uses the generator stream `(seed, g)`. Disconnected draws are
/// redrawn from the same stream and counted; more than half of all draws
/// being disconnected is an error.
pub fn ust_ball_distribution(
    k: &StepKernel,
    n: usize,
    r: usize,
    graphs: usize,
    roots_per_graph: usize,
    seed: u64,
) -> Result<UstReport> {
    if n < 2 || graphs == 0 || roots_per_graph == 0 {
        return Err(Error::InvalidGraph("need n >= 2, graphs >= 1 and roots_per_graph >= 1".into()));
    }
    let per_graph: Vec<Option<(Vec<String>, usize)>> = (0..graphs)
        .into_par_iter()
        .map(|index| {
            let mut rng = rng::sample_rng(seed, index as u64);
            let mut resampled = 0;
            let g = loop {
                let g = sample_dense_graph(k, n, &mut rng).graph;
                if g.is_connected() {
                    break g;
                }
                resampled += 1;
                if resampled >= MAX_ATTEMPTS_PER_GRAPH {
                    return None;
                }
            };
            let tree = wilson_ust(&g, &mut rng).expect("connected");
            let adj = adjacency(n, &tree);
            let codes = (0..roots_per_graph)
                .map(|_| tree_ball(&adj, rng.random_range(0..n), r).code().to_owned())
                .collect();
            Some((codes, resampled))
        })
        .collect();
    let mut counts = BTreeMap::new();
    let mut resampled = 0;
    for entry in &per_graph {
        match entry {
            Some((codes, extra)) => {
                resampled += extra;
                for c in codes {
                    *counts.entry(c.clone()).or_insert(0u64) += 1;
                }
            }
            None => {
                return Err(Error::PersistentDisconnection {
                    resampled: MAX_ATTEMPTS_PER_GRAPH,
                    draws: MAX_ATTEMPTS_PER_GRAPH,
                })
            }
        }
    }
    let draws = graphs + resampled;
    if 2 * resampled > draws {
        return Err(Error::PersistentDisconnection { resampled, draws });
    }
    Ok(UstReport {
        distribution: BallDistribution::from_counts(r, &counts, (graphs * roots_per_graph) as u64),
        graphs,
        roots_per_graph,
        resampled_disconnected: resampled,
        correlated_roots: roots_per_graph > 1,
    })
}

/// Ball classes at radius `r` around vertex 0 of `graphs` independent sparse
/// graphs on `n` vertices. Balls containing a cycle go to the residual.
pub fn sparse_ball_distribution(k: &StepKernel, n: usize, r: usize, graphs: usize, seed: u64) -> BallDistribution {
    let counts = (0..graphs)
        .into_par_iter()
        .fold(BTreeMap::<String, u64>::new, |mut counts, index| {
            let mut rng = rng::sample_rng(seed, index as u64);
            let g = sample_sparse_graph(k, n, &mut rng).graph;
            if let Some(ball) = graph_ball(&g, 0, r) {
                *counts.entry(ball.code().to_owned()).or_default() += 1;
            }
            counts
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (code, c) in b {
                *a.entry(code).or_default() += c;
            }
            a
        });
    BallDistribution::from_counts(r, &counts, graphs as u64)
}
