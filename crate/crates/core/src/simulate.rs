//! Seeded Monte Carlo samplers for the Poisson multitype process and the
//! spanning-tree process.
//!
//! Sample `i` of a run draws all of its randomness from
//! [`rng::sample_rng`]`(seed, i)` and runs are aggregated with integer
//! counts, so a report depends only on the kernel and the [`SimConfig`],
//! never on the number of worker threads.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{StepAkernel, StepKernel};
use crate::probs::BallDistribution;
use crate::rational;
use crate::rng::{self, SampleRng};
use crate::trees::RootedTree;

pub const DEFAULT_MAX_NODES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub samples: u64,
    pub depth: usize,
    pub max_nodes: usize,
}

impl SimConfig {
    pub fn new(seed: u64, samples: u64, depth: usize) -> Self {
        SimConfig { seed, samples, depth, max_nodes: DEFAULT_MAX_NODES }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.max_nodes == 0 {
            return Err(Error::InvalidKernel("samples and max_nodes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<BallDistribution>,
    pub truncated_samples: u64,
    /// Fraction of samples with no particle in generation `g`.
    pub extinction_by_generation: Vec<f64>,
    /// Mean number of particles in generation `g`.
    pub mean_generation_size: Vec<f64>,
}

/// One sampled tree, or the marker that the node cap was hit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sample {
    Tree(RootedTree),
    Truncated,
}

/// A random rooted tree truncated at a given depth.
pub trait TreeSampler: Sync {
    fn sample(&self, depth: usize, max_nodes: usize, rng: &mut SampleRng) -> Sample;
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut SampleRng) -> usize {
    let total = *cdf.last().expect("nonempty cdf");
    let u = rng.random::<f64>() * total;
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Rooted tree from a parent array in breadth-first order (parents precede
/// children, node 0 is the root).
pub(crate) fn assemble(parents: &[usize]) -> RootedTree {
    let n = parents.len();
    let mut children: Vec<Vec<RootedTree>> = vec![Vec::new(); n];
    let mut built: Option<RootedTree> = None;
    for v in (0..n).rev() {
        let tree = RootedTree::from_children(std::mem::take(&mut children[v]));
        if v == 0 {
            built = Some(tree);
        } else {
            children[parents[v]].push(tree);
        }
    }
    built.expect("tree has a root")
}

/// Sampler for the Poisson process: a type-`i` particle has
/// `Poisson(w[i][j] mu[j])` children of type `j`.
pub struct XSampler {
    intensity: Vec<Vec<f64>>,
    root_cdf: Vec<f64>,
    root: Option<usize>,
}

impl XSampler {
    pub fn new(k: &StepAkernel) -> Self {
        XSampler { intensity: k.intensities_f64(), root_cdf: cumulative(k.mu_f64()), root: None }
    }

    /// Same process with the root type fixed.
    pub fn rooted_at(k: &StepAkernel, root: usize) -> Result<Self> {
        if root >= k.n() {
            return Err(Error::TypeOutOfRange { index: root, n: k.n() });
        }
        Ok(XSampler { root: Some(root), ..Self::new(k) })
    }
}

impl TreeSampler for XSampler {
    fn sample(&self, depth: usize, max_nodes: usize, rng: &mut SampleRng) -> Sample {
        let root = self.root.unwrap_or_else(|| draw(&self.root_cdf, rng));
        let mut types = vec![root];
        let mut parents = vec![0];
        let mut level = 0..1;
        for _ in 0..depth {
            let start = types.len();
            for v in level.clone() {
                let i = types[v];
                for (j, &mean) in self.intensity[i].iter().enumerate() {
                    for _ in 0..rng::poisson(rng, mean) {
                        types.push(j);
                        parents.push(v);
                    }
                }
                if types.len() > max_nodes {
                    return Sample::Truncated;
                }
            }
            level = start..types.len();
            if level.is_empty() {
                break;
            }
        }
        Sample::Tree(assemble(&parents))
    }
}

/// Sampler for the spanning-tree process on a kernel with positive minimum
/// degree. Ancestral particles of type `i` have one ancestral child of type
/// `j` with probability `w[i][j] mu[j] / deg(i)`; every particle has
/// `Poisson(w[i][j] mu[j] / deg(j))` other children of type `j`.
pub struct USampler {
    other: Vec<Vec<f64>>,
    ancestral_cdf: Vec<Vec<f64>>,
    root_cdf: Vec<f64>,
    root_ancestral_child: bool,
}

impl USampler {
    pub fn new(k: &StepKernel) -> Result<Self> {
        let degrees = k.degrees();
        if let Some(i) = degrees.iter().position(Zero::is_zero) {
            return Err(Error::Degenerate(i));
        }
        let ancestral_cdf = (0..k.n())
            .map(|i| cumulative((0..k.n()).map(|j| rational::to_f64(&(k.intensity(i, j) / &degrees[i])))))
            .collect();
        Ok(USampler {
            other: k.markov_renormalize().intensities_f64(),
            ancestral_cdf,
            root_cdf: cumulative(k.mu_f64()),
            root_ancestral_child: true,
        })
    }

    /// The process with the root's ancestral child and its subtree removed.
    pub fn without_ancestral_branch(k: &StepKernel) -> Result<Self> {
        Ok(USampler { root_ancestral_child: false, ..Self::new(k)? })
    }
}

impl TreeSampler for USampler {
    fn sample(&self, depth: usize, max_nodes: usize, rng: &mut SampleRng) -> Sample {
        let root = draw(&self.root_cdf, rng);
        // (type, ancestral)
        let mut nodes = vec![(root, true)];
        let mut parents = vec![0];
        let mut level = 0..1;
        for _ in 0..depth {
            let start = nodes.len();
            for v in level.clone() {
                let (i, ancestral) = nodes[v];
                if ancestral && (v != 0 || self.root_ancestral_child) {
                    nodes.push((draw(&self.ancestral_cdf[i], rng), true));
                    parents.push(v);
                }
                for (j, &mean) in self.other[i].iter().enumerate() {
                    for _ in 0..rng::poisson(rng, mean) {
                        nodes.push((j, false));
                        parents.push(v);
                    }
                }
                if nodes.len() > max_nodes {
                    return Sample::Truncated;
                }
            }
            level = start..nodes.len();
            if level.is_empty() {
                break;
            }
        }
        Sample::Tree(assemble(&parents))
    }
}

pub fn sample_x(k: &StepAkernel, depth: usize, rng: &mut SampleRng) -> Sample {
    XSampler::new(k).sample(depth, DEFAULT_MAX_NODES, rng)
}

pub fn sample_u(k: &StepKernel, depth: usize, rng: &mut SampleRng) -> Result<Sample> {
    Ok(USampler::new(k)?.sample(depth, DEFAULT_MAX_NODES, rng))
}

fn level_sizes(tree: &RootedTree, depth: usize) -> Vec<u64> {
    let mut sizes = vec![0u64; depth + 1];
    let mut frontier = vec![tree];
    for size in sizes.iter_mut() {
        *size = frontier.len() as u64;
        frontier = frontier.iter().flat_map(|t| t.children()).collect();
    }
    sizes
}

#[derive(Default)]
struct Tally {
    classes: BTreeMap<String, u64>,
    truncated: u64,
    generation_totals: Vec<u64>,
    extinct: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (code, c) in other.classes {
            *self.classes.entry(code).or_default() += c;
        }
        self.truncated += other.truncated;
        add_into(&mut self.generation_totals, &other.generation_totals);
        add_into(&mut self.extinct, &other.extinct);
        self
    }
}

fn add_into(acc: &mut Vec<u64>, other: &[u64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Draws `cfg.samples` trees and tabulates their classes and level sizes.
pub fn run<S: TreeSampler>(sampler: &S, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let depth = cfg.depth;
    let tally = (0..cfg.samples)
        .into_par_iter()
        .fold(Tally::default, |mut tally, index| {
            let mut rng = rng::sample_rng(cfg.seed, index);
            match sampler.sample(depth, cfg.max_nodes, &mut rng) {
                Sample::Tree(tree) => {
                    let sizes = level_sizes(&tree, depth);
                    let extinct: Vec<u64> = sizes.iter().map(|&s| u64::from(s == 0)).collect();
                    add_into(&mut tally.generation_totals, &sizes);
                    add_into(&mut tally.extinct, &extinct);
                    *tally.classes.entry(tree.code().to_owned()).or_default() += 1;
                }
                Sample::Truncated => tally.truncated += 1,
            }
            tally
        })
        .reduce(Tally::default, Tally::merge);
    Ok(report(tally, cfg, depth, true))
}

fn report(tally: Tally, cfg: &SimConfig, generations: usize, with_distribution: bool) -> SimReport {
    let n = cfg.samples as f64;
    let mut totals = tally.generation_totals;
    let mut extinct = tally.extinct;
    totals.resize(generations + 1, 0);
    extinct.resize(generations + 1, 0);
    SimReport {
        distribution: with_distribution
            .then(|| BallDistribution::from_counts(cfg.depth, &tally.classes, cfg.samples)),
        truncated_samples: tally.truncated,
        extinction_by_generation: extinct.iter().map(|&e| e as f64 / n).collect(),
        mean_generation_size: totals.iter().map(|&t| t as f64 / n).collect(),
    }
}

/// Class frequencies of `cfg.samples` draws at depth `cfg.depth`; truncated
/// draws are reported in the residual.
pub fn empirical_ball_distribution<S: TreeSampler>(sampler: &S, cfg: &SimConfig) -> Result<BallDistribution> {
    Ok(run(sampler, cfg)?.distribution.expect("run tabulates classes"))
}

pub fn tv_distance(a: &BallDistribution, b: &BallDistribution) -> Result<f64> {
    a.tv_distance(b)
}

/// Generation sizes of the Poisson process on the Markov renormalization
/// of `k`, followed for `horizon` generations.
///
/// Only per-type particle counts are tracked: `c` particles of type `i`
/// produce `Poisson(c * w†[i][j] mu[j])` children of type `j` in total. A
/// sample that exceeds `cfg.max_nodes` particles is stopped, counted in
/// `truncated_samples`, and treated as surviving with no further
/// contribution to the generation means.
pub fn extinction_stats(k: &StepKernel, horizon: usize, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let intensity = k.markov_renormalize().intensities_f64();
    let root_cdf = cumulative(k.mu_f64());
    let n = k.n();
    let tally = (0..cfg.samples)
        .into_par_iter()
        .fold(Tally::default, |mut tally, index| {
            let mut rng = rng::sample_rng(cfg.seed, index);
            let mut counts = vec![0u64; n];
            counts[draw(&root_cdf, &mut rng)] = 1;
            let mut sizes = vec![0u64; horizon + 1];
            let mut extinct = vec![0u64; horizon + 1];
            let mut alive_total = 1u64;
            let mut truncated = false;
            for g in 0..=horizon {
                let size: u64 = counts.iter().sum();
                sizes[g] = size;
                if size == 0 {
                    extinct[g..].iter_mut().for_each(|e| *e = 1);
                    break;
                }
                if g == horizon {
                    break;
                }
                let mut next = vec![0u64; n];
                for (i, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    for (j, slot) in next.iter_mut().enumerate() {
                        *slot += rng::poisson(&mut rng, c as f64 * intensity[i][j]);
                    }
                }
                alive_total += next.iter().sum::<u64>();
                if alive_total > cfg.max_nodes as u64 {
                    truncated = true;
                    break;
                }
                counts = next;
            }
            tally.truncated += u64::from(truncated);
            add_into(&mut tally.generation_totals, &sizes);
            add_into(&mut tally.extinct, &extinct);
            tally
        })
        .reduce(Tally::default, Tally::merge);
    Ok(report(tally, cfg, horizon, false))
}
