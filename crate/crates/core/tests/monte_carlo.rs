mod common;

use std::collections::BTreeMap;

use common::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stepfi::probs::{u_ball_distribution, x_ball_distribution, BallDistribution};
use stepfi::refinement::refine;
use stepfi::rng::sample_rng;
use stepfi::simulate::*;

const N: u64 = 100_000;

/// Class space for comparisons between two samples: trees of at most this
/// many vertices, plus one residual class.
const MAX_VERTICES: usize = 8;

fn tv(a: &BallDistribution, b: &BallDistribution) -> f64 {
    a.coarsen(MAX_VERTICES).tv_distance(&b.coarsen(MAX_VERTICES)).unwrap()
}

fn four_sigma_ok(empirical: &BallDistribution, exact: &BallDistribution, n: u64) -> Result<(), String> {
    for (code, &p) in &exact.entries {
        if p <= 0.001 {
            continue;
        }
        let f = empirical.get(code);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        if (f - p).abs() > 4.0 * sigma {
            return Err(format!("{code}: empirical {f}, exact {p}"));
        }
    }
    Ok(())
}

#[test]
fn x_leaf_frequency_at_constant_one() {
    let r = run(&XSampler::new(&constant(1)), &SimConfig::new(11, N, 1)).unwrap();
    let p = (-1f64).exp();
    let f = r.distribution.unwrap().get("()");
    assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / N as f64).sqrt(), "{f}");
}

#[test]
fn x_classes_match_exact_law() {
    let k = uniform(&[&[2, 1], &[1, 0]]);
    let emp = empirical_ball_distribution(&XSampler::new(&k), &SimConfig::new(12, N, 2)).unwrap();
    four_sigma_ok(&emp, &x_ball_distribution(&k, 2, 12), N).unwrap();
}

#[test]
fn u_classes_match_exact_law() {
    let k = kernel(&[(1, 3), (2, 3)], &[&[(2, 1), (1, 1)], &[(1, 1), (1, 1)]]);
    let emp = empirical_ball_distribution(&USampler::new(&k).unwrap(), &SimConfig::new(13, N, 2)).unwrap();
    four_sigma_ok(&emp, &u_ball_distribution(&k, 2, 12).unwrap(), N).unwrap();
}

#[test]
fn u_root_degree_is_one_plus_poisson() {
    let emp = empirical_ball_distribution(&USampler::new(&constant(1)).unwrap(), &SimConfig::new(14, N, 1)).unwrap();
    let exact = u_ball_distribution(&constant(1), 1, 12).unwrap();
    assert!(emp.coarsen(12).tv_distance(&exact).unwrap() <= 0.02);
    assert_eq!(emp.get("()"), 0.0);
}

#[test]
fn depth_zero_is_always_a_leaf() {
    let k = uniform(&[&[2, 1], &[1, 0]]);
    let emp = empirical_ball_distribution(&USampler::new(&k).unwrap(), &SimConfig::new(15, 1000, 0)).unwrap();
    assert_eq!(emp.get("()"), 1.0);
}

#[test]
fn block_kernel_looks_like_constant_one() {
    let block = kernel(&[(1, 5), (4, 5)], &[&[(13, 1), (0, 1)], &[(0, 1), (7, 1)]]);
    let cfg = SimConfig::new(16, N, 2);
    let a = empirical_ball_distribution(&USampler::new(&block).unwrap(), &cfg).unwrap();
    let b = empirical_ball_distribution(&USampler::new(&constant(1)).unwrap(), &SimConfig::new(17, N, 2)).unwrap();
    assert!(tv(&a, &b) <= 0.02);
}

#[test]
fn fractionally_isomorphic_kernels_give_close_samples() {
    let a = empirical_ball_distribution(&XSampler::new(&constant(2)), &SimConfig::new(18, N, 2)).unwrap();
    let bip = uniform(&[&[0, 4], &[4, 0]]);
    let b = empirical_ball_distribution(&XSampler::new(&bip), &SimConfig::new(19, N, 2)).unwrap();
    assert!(tv(&a, &b) <= 0.02);
}

#[test]
fn independent_runs_agree() {
    let k = uniform(&[&[2, 1], &[1, 0]]);
    let a = empirical_ball_distribution(&XSampler::new(&k), &SimConfig::new(20, N, 2)).unwrap();
    let b = empirical_ball_distribution(&XSampler::new(&k), &SimConfig::new(21, N, 2)).unwrap();
    assert!(tv(&a, &b) <= 0.01);
}

#[test]
fn ancestral_branch_removed_gives_markov_process() {
    let k = kernel(&[(1, 3), (2, 3)], &[&[(2, 1), (1, 1)], &[(1, 1), (1, 1)]]);
    let cfg = SimConfig::new(22, N, 2);
    let minus = empirical_ball_distribution(&USampler::without_ancestral_branch(&k).unwrap(), &cfg).unwrap();
    let dagger = empirical_ball_distribution(&XSampler::new(&k.markov_renormalize()), &SimConfig::new(23, N, 2)).unwrap();
    assert!(tv(&minus, &dagger) <= 0.02);
}

/// Chi-square homogeneity statistic over classes, pooling rare classes.
fn chi_square(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> (f64, usize) {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let codes: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    for code in codes {
        let x = *a.get(code).unwrap_or(&0) as f64;
        let y = *b.get(code).unwrap_or(&0) as f64;
        if x + y < 20.0 {
            pooled.0 += x;
            pooled.1 += y;
        } else {
            rows.push((x, y));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        rows.push(pooled);
    }
    let (na, nb): (f64, f64) = (rows.iter().map(|r| r.0).sum(), rows.iter().map(|r| r.1).sum());
    let total = na + nb;
    let stat = rows
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (na * col / total, nb * col / total);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    (stat, rows.len() - 1)
}

fn class_counts<S: TreeSampler>(sampler: &S, seed: u64, n: u64, depth: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for i in 0..n {
        if let Sample::Tree(t) = sampler.sample(depth, DEFAULT_MAX_NODES, &mut sample_rng(seed, i)) {
            *counts.entry(t.code().to_owned()).or_default() += 1;
        }
    }
    counts
}

#[test]
fn types_of_one_colour_are_indistinguishable() {
    // Every type has degree 2/3, so refinement keeps a single colour.
    let k = uniform(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]]);
    assert_eq!(refine(&k).0.num_colors(), 1);
    let a = class_counts(&XSampler::rooted_at(&k, 0).unwrap(), 24, N, 2);
    let b = class_counts(&XSampler::rooted_at(&k, 1).unwrap(), 25, N, 2);
    let (stat, df) = chi_square(&a, &b);
    let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
    assert!(stat <= critical, "chi-square {stat} > {critical} (df {df})");
}

#[test]
fn generation_means_of_markov_process() {
    let r = extinction_stats(&constant(1), 10, &SimConfig::new(26, N, 0)).unwrap();
    for g in 1..=10 {
        assert!((r.mean_generation_size[g] - 1.0).abs() <= 0.02, "g={g}: {}", r.mean_generation_size[g]);
    }
    assert!(r.extinction_by_generation.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let k = uniform(&[&[2, 1], &[1, 0]]);
    let cfg = SimConfig::new(27, 20_000, 3);
    let with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let x = run(&XSampler::new(&k), &cfg).unwrap();
            let u = run(&USampler::new(&k).unwrap(), &cfg).unwrap();
            let e = extinction_stats(&k, 30, &cfg).unwrap();
            serde_json::to_string(&(x, u, e)).unwrap()
        })
    };
    assert_eq!(with(1), with(4));
}

#[test]
fn truncated_samples_are_reported() {
    let cfg = SimConfig { seed: 28, samples: 1000, depth: 6, max_nodes: 500 };
    let r = run(&XSampler::new(&constant(4)), &cfg).unwrap();
    assert!(r.truncated_samples > 0);
    let d = r.distribution.unwrap();
    assert!((d.total() - 1.0).abs() < 1e-12);
}
