//! Seeded generators for kernels and graphs shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepfi::rational::{q, qi};
use stepfi::{Graph, StepAkernel, StepKernel, Q};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn constant(d: i64) -> StepKernel {
    StepKernel::constant(qi(d)).unwrap()
}

pub fn uniform(rows: &[&[i64]]) -> StepKernel {
    let n = rows.len() as i64;
    StepKernel::new(
        vec![q(1, n); rows.len()],
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect(),
    )
    .unwrap()
}

pub fn kernel(mu: &[(i64, i64)], rows: &[&[(i64, i64)]]) -> StepKernel {
    StepKernel::new(
        mu.iter().map(|&(a, b)| q(a, b)).collect(),
        rows.iter().map(|r| r.iter().map(|&(a, b)| q(a, b)).collect()).collect(),
    )
    .unwrap()
}

/// Positive masses with small integer weights, normalized.
pub fn random_mu(rng: &mut TestRng, n: usize) -> Vec<Q> {
    let weights: Vec<i64> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&x| q(x, total)).collect()
}

/// Zero with probability `zero`, otherwise one of a few small rationals.
pub fn random_entry(rng: &mut TestRng, zero: f64) -> Q {
    if rng.random::<f64>() < zero {
        return qi(0);
    }
    const VALUES: [(i64, i64); 6] = [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (5, 1)];
    let (a, b) = VALUES[rng.random_range(0..VALUES.len())];
    q(a, b)
}

pub fn random_kernel(rng: &mut TestRng, n: usize) -> StepKernel {
    let mut w = vec![vec![qi(0); n]; n];
    for i in 0..n {
        for j in i..n {
            let x = random_entry(rng, 0.35);
            w[i][j] = x.clone();
            w[j][i] = x;
        }
    }
    StepKernel::new(random_mu(rng, n), w).unwrap()
}

pub fn random_akernel(rng: &mut TestRng, n: usize) -> StepAkernel {
    let w = (0..n).map(|_| (0..n).map(|_| random_entry(rng, 0.35)).collect()).collect();
    StepAkernel::new(random_mu(rng, n), w).unwrap()
}

/// A kernel whose support graph is connected (a path through all types
/// plus random extra entries), so every degree is positive.
pub fn random_connected_kernel(rng: &mut TestRng, n: usize) -> StepKernel {
    let mut w = vec![vec![qi(0); n]; n];
    for i in 0..n {
        for j in i..n {
            let zero = if j == i + 1 || n == 1 { 0.0 } else { 0.5 };
            let x = random_entry(rng, zero);
            w[i][j] = x.clone();
            w[j][i] = x;
        }
    }
    StepKernel::new(random_mu(rng, n), w).unwrap()
}

/// Positive masses summing to one for `parts` pieces.
pub fn random_masses(rng: &mut TestRng, parts: usize) -> Vec<Q> {
    random_mu(rng, parts)
}

/// Connected pieces of at most `max_piece` types glued block-diagonally.
pub fn random_pieces(rng: &mut TestRng, pieces: usize, max_piece: usize) -> Vec<StepKernel> {
    (0..pieces).map(|_| {
        let n = rng.random_range(1..=max_piece);
        random_connected_kernel(rng, n)
    }).collect()
}

pub fn union(masses: &[Q], pieces: &[StepKernel]) -> StepKernel {
    let parts: Vec<(Q, StepKernel)> = masses.iter().cloned().zip(pieces.iter().cloned()).collect();
    StepKernel::disjoint_union(&parts).unwrap()
}

/// A random kernel with one to three components and at most `max_types`
/// types; sometimes includes an isolated type.
pub fn random_disconnected_kernel(rng: &mut TestRng, max_types: usize) -> StepKernel {
    let count = rng.random_range(1..=3usize.min(max_types));
    let mut budget = max_types;
    let mut pieces = Vec::new();
    for left in (0..count).rev() {
        let n = rng.random_range(1..=(budget - left).min(3));
        budget -= n;
        pieces.push(random_connected_kernel(rng, n));
    }
    if budget > 0 && rng.random_bool(0.3) {
        pieces.push(constant(0));
    }
    let masses = random_masses(rng, pieces.len());
    union(&masses, &pieces)
}

/// Splits `splits` random types and then relabels all types randomly.
pub fn split_and_shuffle(rng: &mut TestRng, k: &StepKernel, splits: usize) -> StepKernel {
    let mut out = k.clone();
    for _ in 0..splits {
        let i = rng.random_range(0..out.n());
        out = out.split_type(i).unwrap();
    }
    let mut perm: Vec<usize> = (0..out.n()).collect();
    perm.shuffle(rng);
    out.permute(&perm).unwrap()
}

pub fn shuffle_akernel(rng: &mut TestRng, k: &StepAkernel) -> StepAkernel {
    let mut perm: Vec<usize> = (0..k.n()).collect();
    perm.shuffle(rng);
    k.permute(&perm).unwrap()
}

/// A pair `(U, W)` that is piecewise projectively fractionally isomorphic by
/// construction: the same connected pieces and masses, each piece scaled by
/// its own factor on the `W` side, then split and shuffled.
pub fn ppfi_pair(rng: &mut TestRng, max_pieces: usize, max_piece: usize) -> (StepKernel, StepKernel) {
    let count = rng.random_range(1..=max_pieces);
    let pieces = random_pieces(rng, count, max_piece);
    let masses = random_masses(rng, count);
    const FACTORS: [(i64, i64); 5] = [(1, 3), (1, 2), (1, 1), (2, 1), (7, 3)];
    let scaled: Vec<StepKernel> = pieces
        .iter()
        .map(|p| {
            let (a, b) = FACTORS[rng.random_range(0..FACTORS.len())];
            p.scale(&q(a, b)).unwrap()
        })
        .collect();
    let u = union(&masses, &pieces);
    let w = union(&masses, &scaled);
    let splits = rng.random_range(0..3);
    (u, split_and_shuffle(rng, &w, splits))
}

/// Changes one entry (and its mirror) of a kernel to a different positive
/// value.
pub fn perturb(rng: &mut TestRng, k: &StepKernel) -> StepKernel {
    let n = k.n();
    let mut w: Vec<Vec<Q>> = k.w().to_vec();
    let i = rng.random_range(0..n);
    let j = rng.random_range(0..n);
    let bump = q(rng.random_range(1..=3), 4);
    let x = &w[i][j] + bump;
    w[i][j] = x.clone();
    w[j][i] = x;
    StepKernel::new(k.mu().to_vec(), w).unwrap()
}

/// Erdős–Rényi graph.
pub fn random_graph(rng: &mut TestRng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

pub fn shuffle_graph(rng: &mut TestRng, g: &Graph) -> Graph {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(rng);
    g.permute(&perm)
}

/// Random graph that is a disjoint union of a few regular-ish pieces, to
/// make practional isomorphisms between different graphs common.
pub fn random_union_graph(rng: &mut TestRng, max_n: usize) -> Graph {
    let mut g = Graph::empty(0);
    while g.n() < max_n {
        let room = max_n - g.n();
        if room < 3 {
            break;
        }
        let piece = match rng.random_range(0..4) {
            0 => Graph::cycle(rng.random_range(3..=room.min(6))),
            1 => Graph::complete(rng.random_range(1..=room.min(4))),
            2 => Graph::path(rng.random_range(1..=room.min(4))),
            _ => {
                let n = rng.random_range(2..=room.min(5));
                random_graph(rng, n, 0.5)
            }
        };
        g = g.disjoint_union(&piece);
        if rng.random_bool(0.4) {
            break;
        }
    }
    if g.n() == 0 {
        g = Graph::path(2);
    }
    g
}

/// Brute-force spanning trees of a small graph, each as a sorted edge list.
pub fn all_spanning_trees(g: &Graph) -> Vec<Vec<(usize, usize)>> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let need = g.n() - 1;
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        g: &Graph,
        edges: &[(usize, usize)],
        start: usize,
        need: usize,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() == need {
            if g.is_spanning_tree(chosen) {
                out.push(chosen.clone());
            }
            return;
        }
        for i in start..edges.len() {
            chosen.push(edges[i]);
            rec(g, edges, i + 1, need, chosen, out);
            chosen.pop();
        }
    }
    rec(g, &edges, 0, need, &mut chosen, &mut out);
    out
}
