//! Exact laws of depth-truncated branching-process trees.
//!
//! For the Poisson multitype process on an akernel, a type-`i` particle has
//! `Poisson(w[i][j] * mu[j])` children of each type `j`. The probability that
//! its first `k` levels form the tree `T` with child classes `T_t` of
//! multiplicity `l_t` is
//!
//! ```text
//! P_k(i, T) = exp(-deg(i)) * prod_t (sum_j w[i][j] mu[j] P_{k-1}(j, T_t))^{l_t} / l_t!
//! ```
//!
//! with `P_0(i, leaf) = 1`. The spanning-tree process runs the same
//! recursion on the Markov renormalization for its "other" particles; an
//! "ancestral" particle additionally has exactly one ancestral child, so its
//! law sums over which child class hosts that child.
//!
//! Values are doubles; every comparison in this crate uses an absolute
//! tolerance of `1e-9`.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{StepAkernel, StepKernel};
use crate::rational::{self, Q};
use crate::trees::{code_vertices, enumerate_trees, RootedTree};

/// Separation threshold and equality tolerance for tree probabilities.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Law of a depth-`depth` truncated random tree over isomorphism classes.
///
/// `entries` maps canonical codes to probabilities (or frequencies); the
/// mass not covered by `entries` is `residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallDistribution {
    pub depth: usize,
    pub entries: BTreeMap<String, f64>,
    pub residual: f64,
}

impl BallDistribution {
    /// Empirical distribution from class counts out of `total` draws; draws
    /// not in `counts` go to the residual.
    pub fn from_counts(depth: usize, counts: &BTreeMap<String, u64>, total: u64) -> Self {
        let n = total.max(1) as f64;
        let entries: BTreeMap<String, f64> =
            counts.iter().map(|(code, &c)| (code.clone(), c as f64 / n)).collect();
        let covered: u64 = counts.values().sum();
        BallDistribution { depth, entries, residual: (total - covered) as f64 / n }
    }

    pub fn get(&self, code: &str) -> f64 {
        self.entries.get(code).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum::<f64>() + self.residual
    }

    /// Moves every class with more than `max_vertices` vertices into the
    /// residual, so that distributions tabulated to different sizes can be
    /// compared.
    pub fn coarsen(&self, max_vertices: usize) -> Self {
        let mut entries = BTreeMap::new();
        let mut residual = self.residual;
        for (code, &p) in &self.entries {
            if code_vertices(code) <= max_vertices {
                entries.insert(code.clone(), p);
            } else {
                residual += p;
            }
        }
        BallDistribution { depth: self.depth, entries, residual }
    }

    /// Total variation distance: half the L1 distance over the union of
    /// classes, with the residuals treated as one more class.
    pub fn tv_distance(&self, other: &BallDistribution) -> Result<f64> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(self.depth, other.depth));
        }
        let mut sum = (self.residual - other.residual).abs();
        for (code, &p) in &self.entries {
            sum += (p - other.get(code)).abs();
        }
        for (code, &p) in &other.entries {
            if !self.entries.contains_key(code) {
                sum += p.abs();
            }
        }
        Ok((0.5 * sum).min(1.0))
    }
}

/// Memoized tree law of the Poisson process on an akernel.
pub struct XTreeLaw {
    intensity: Vec<Vec<f64>>,
    degree: Vec<f64>,
    mu: Vec<f64>,
    memo: HashMap<(usize, usize, String), f64>,
}

impl XTreeLaw {
    pub fn new(k: &StepAkernel) -> Self {
        let intensity = k.intensities_f64();
        // Degrees from the exact rationals, not from summing rounded terms.
        let degree = k.degrees().iter().map(rational::to_f64).collect();
        XTreeLaw { intensity, degree, mu: k.mu_f64(), memo: HashMap::new() }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Probability that the first `depth` levels from a type-`i` particle
    /// are isomorphic to `tree`.
    pub fn prob_at(&mut self, i: usize, tree: &RootedTree, depth: usize) -> Result<f64> {
        if i >= self.n() {
            return Err(Error::TypeOutOfRange { index: i, n: self.n() });
        }
        check_height(tree, depth)?;
        Ok(self.prob_at_unchecked(i, tree, depth))
    }

    fn prob_at_unchecked(&mut self, i: usize, tree: &RootedTree, depth: usize) -> f64 {
        if depth == 0 {
            return if tree.is_leaf() { 1.0 } else { 0.0 };
        }
        let key = (i, depth, tree.code().to_owned());
        if let Some(&p) = self.memo.get(&key) {
            return p;
        }
        let mut p = (-self.degree[i]).exp();
        for (child, multiplicity) in tree.profile() {
            let mut rate = 0.0;
            for j in 0..self.n() {
                let x = self.intensity[i][j];
                if x != 0.0 {
                    rate += x * self.prob_at_unchecked(j, child, depth - 1);
                }
            }
            p *= rate.powi(multiplicity as i32) / factorial_f64(multiplicity);
        }
        self.memo.insert(key, p);
        p
    }

    /// `mu`-average of [`XTreeLaw::prob_at`].
    pub fn prob(&mut self, tree: &RootedTree, depth: usize) -> Result<f64> {
        check_height(tree, depth)?;
        let mut total = 0.0;
        for i in 0..self.n() {
            total += self.mu[i] * self.prob_at_unchecked(i, tree, depth);
        }
        Ok(total)
    }
}

fn check_height(tree: &RootedTree, depth: usize) -> Result<()> {
    if tree.height() > depth {
        Err(Error::TreeTooTall { height: tree.height(), depth })
    } else {
        Ok(())
    }
}

fn factorial_f64(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

pub fn x_tree_prob_at(k: &StepAkernel, i: usize, tree: &RootedTree, depth: usize) -> Result<f64> {
    XTreeLaw::new(k).prob_at(i, tree, depth)
}

pub fn x_tree_prob(k: &StepAkernel, tree: &RootedTree, depth: usize) -> Result<f64> {
    XTreeLaw::new(k).prob(tree, depth)
}

/// Memoized tree law of the spanning-tree process on a kernel with positive
/// minimum degree.
pub struct UTreeLaw {
    /// Law of "other" particles: the Poisson process on the Markov
    /// renormalization.
    other: XTreeLaw,
    /// `w[i][j] mu[j] / deg(i)`: where the ancestral child of `i` lands.
    ancestral_step: Vec<Vec<f64>>,
    mu: Vec<f64>,
    memo: HashMap<(usize, usize, String), f64>,
}

impl UTreeLaw {
    pub fn new(k: &StepKernel) -> Result<Self> {
        let degrees = k.degrees();
        if let Some(i) = degrees.iter().position(Zero::is_zero) {
            return Err(Error::Degenerate(i));
        }
        let ancestral_step = (0..k.n())
            .map(|i| {
                (0..k.n())
                    .map(|j| rational::to_f64(&(k.intensity(i, j) / &degrees[i])))
                    .collect()
            })
            .collect();
        Ok(UTreeLaw {
            other: XTreeLaw::new(&k.markov_renormalize()),
            ancestral_step,
            mu: k.mu_f64(),
            memo: HashMap::new(),
        })
    }

    /// Probability that the first `depth` levels below an ancestral
    /// particle of type `i` are isomorphic to `tree`.
    pub fn ancestral_prob_at(&mut self, i: usize, tree: &RootedTree, depth: usize) -> Result<f64> {
        if i >= self.mu.len() {
            return Err(Error::TypeOutOfRange { index: i, n: self.mu.len() });
        }
        check_height(tree, depth)?;
        Ok(self.ancestral_unchecked(i, tree, depth))
    }

    fn ancestral_unchecked(&mut self, i: usize, tree: &RootedTree, depth: usize) -> f64 {
        if depth == 0 {
            return if tree.is_leaf() { 1.0 } else { 0.0 };
        }
        if tree.is_leaf() {
            return 0.0;
        }
        let key = (i, depth, tree.code().to_owned());
        if let Some(&p) = self.memo.get(&key) {
            return p;
        }
        let classes: Vec<RootedTree> = tree.profile().iter().map(|&(c, _)| c.clone()).collect();
        let mut p = 0.0;
        for class in &classes {
            let mut host = 0.0;
            for j in 0..self.mu.len() {
                let q = self.ancestral_step[i][j];
                if q != 0.0 {
                    host += q * self.ancestral_unchecked(j, class, depth - 1);
                }
            }
            if host == 0.0 {
                continue;
            }
            let rest = tree.without_child(class).expect("class is a child of tree");
            p += host * self.other.prob_at_unchecked(i, &rest, depth);
        }
        self.memo.insert(key, p);
        p
    }

    /// Probability that the depth-`depth` ball at the root is `tree`.
    pub fn prob(&mut self, tree: &RootedTree, depth: usize) -> Result<f64> {
        check_height(tree, depth)?;
        let mut total = 0.0;
        for i in 0..self.mu.len() {
            total += self.mu[i] * self.ancestral_unchecked(i, tree, depth);
        }
        Ok(total)
    }
}

pub fn u_tree_prob(k: &StepKernel, tree: &RootedTree, depth: usize) -> Result<f64> {
    UTreeLaw::new(k)?.prob(tree, depth)
}

pub fn x_ball_distribution(k: &StepAkernel, depth: usize, max_vertices: usize) -> BallDistribution {
    let mut law = XTreeLaw::new(k);
    tabulate(depth, max_vertices, |t| law.prob(t, depth).expect("enumerated trees fit"))
}

pub fn u_ball_distribution(k: &StepKernel, depth: usize, max_vertices: usize) -> Result<BallDistribution> {
    let mut law = UTreeLaw::new(k)?;
    Ok(tabulate(depth, max_vertices, |t| law.prob(t, depth).expect("enumerated trees fit")))
}

fn tabulate(depth: usize, max_vertices: usize, mut prob: impl FnMut(&RootedTree) -> f64) -> BallDistribution {
    let mut entries = BTreeMap::new();
    for t in enumerate_trees(depth, max_vertices) {
        let p = prob(&t);
        if p > 0.0 {
            entries.insert(t.code().to_owned(), p);
        }
    }
    let residual = 1.0 - entries.values().sum::<f64>();
    BallDistribution { depth, entries, residual }
}

/// Result of the survival fixed-point iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Survival {
    pub gamma: f64,
    /// Survival probability per type.
    pub s: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Survival probability of the Poisson process on a symmetric kernel.
///
/// Components whose mean-offspring operator has spectral radius at most one
/// are decided exactly (survival 0): for a component with masses `D` and
/// matrix `W`, the radius is at most one iff `D - D W D` is positive
/// semidefinite. On the remaining types `s = 1 - exp(-M s)` is iterated
/// from `s = 1`, which decreases monotonically to the largest fixed point.
pub fn survival(k: &StepKernel, tol: f64, max_iter: usize) -> Result<Survival> {
    let n = k.n();
    let mut active = vec![false; n];
    for members in k.components().components {
        if !subcritical(k, &members) {
            for &i in &members {
                active[i] = true;
            }
        }
    }
    let intensity = k.intensities_f64();
    let mu = k.mu_f64();
    let mut s: Vec<f64> = active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    let apply = |s: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if !active[i] {
                    return 0.0;
                }
                let rate: f64 = (0..n).map(|j| intensity[i][j] * s[j]).sum();
                -(-rate).exp_m1()
            })
            .collect()
    };
    let mut iterations = 0;
    loop {
        let next = apply(&s);
        let residual = s.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= tol {
            let gamma = mu.iter().zip(&next).map(|(m, x)| m * x).sum::<f64>().clamp(0.0, 1.0);
            return Ok(Survival { gamma, s: next, iterations, residual });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations, residual });
        }
        s = next;
        iterations += 1;
    }
}

fn subcritical(k: &StepKernel, members: &[usize]) -> bool {
    let m = members.len();
    let mut a = vec![vec![Q::zero(); m]; m];
    for (r, &i) in members.iter().enumerate() {
        for (c, &j) in members.iter().enumerate() {
            a[r][c] = -(&k.mu()[i] * &k.w()[i][j] * &k.mu()[j]);
        }
        a[r][r] += &k.mu()[i];
    }
    is_positive_semidefinite(a)
}

/// Exact PSD test for a symmetric rational matrix by symmetric elimination:
/// a negative pivot refutes, and a zero pivot is only allowed with a zero
/// row.
pub fn is_positive_semidefinite(mut a: Vec<Vec<Q>>) -> bool {
    let m = a.len();
    for p in 0..m {
        let pivot = a[p][p].clone();
        if pivot < Q::zero() {
            return false;
        }
        if pivot.is_zero() {
            if a[p][p + 1..].iter().any(|x| !x.is_zero()) {
                return false;
            }
            continue;
        }
        for r in p + 1..m {
            if a[r][p].is_zero() {
                continue;
            }
            let factor = &a[r][p] / &pivot;
            for c in p..m {
                let delta = &factor * &a[p][c];
                a[r][c] -= delta;
            }
        }
    }
    true
}

/// A tree whose probabilities differ between two kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub tree: RootedTree,
    pub depth: usize,
    pub p_u: f64,
    pub p_w: f64,
}

/// Scans trees in (vertex count, code) order and returns the first whose
/// probability under `u` and `w` differs by more than [`PROB_TOLERANCE`].
/// Each tree is evaluated at depth `max(height, 1)`.
pub fn separating_tree_search(
    u: &StepAkernel,
    w: &StepAkernel,
    max_height: usize,
    max_vertices: usize,
) -> Option<Separation> {
    let mut law_u = XTreeLaw::new(u);
    let mut law_w = XTreeLaw::new(w);
    enumerate_trees(max_height.max(1), max_vertices).into_iter().find_map(|tree| {
        let depth = tree.height().max(1);
        let p_u = law_u.prob(&tree, depth).expect("enumerated trees fit");
        let p_w = law_w.prob(&tree, depth).expect("enumerated trees fit");
        ((p_u - p_w).abs() > PROB_TOLERANCE).then_some(Separation { tree, depth, p_u, p_w })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn constant(d: i64) -> StepKernel {
        StepKernel::constant(qi(d)).unwrap()
    }

    fn two_type() -> StepKernel {
        StepKernel::new(
            vec![q(1, 2), q(1, 2)],
            vec![vec![qi(2), qi(1)], vec![qi(1), qi(0)]],
        )
        .unwrap()
    }

    fn poisson_pmf(mean: f64, s: usize) -> f64 {
        (-mean).exp() * mean.powi(s as i32) / factorial_f64(s)
    }

    #[test]
    fn x_single_type_is_poisson() {
        let k = constant(3);
        let leaf = RootedTree::leaf();
        assert!((x_tree_prob_at(&k, 0, &leaf, 1).unwrap() - (-3f64).exp()).abs() < 1e-15);
        for s in 0..6 {
            let p = x_tree_prob_at(&k, 0, &RootedTree::star(s), 1).unwrap();
            assert!((p - poisson_pmf(3.0, s)).abs() < 1e-15);
        }
        assert_eq!(x_tree_prob_at(&k, 0, &leaf, 0).unwrap(), 1.0);
        assert!(matches!(
            x_tree_prob_at(&k, 0, &RootedTree::path(3), 1),
            Err(Error::TreeTooTall { height: 2, depth: 1 })
        ));
        assert!(x_tree_prob_at(&k, 1, &leaf, 1).is_err());
    }

    #[test]
    fn x_two_type_values() {
        let k = two_type();
        let leaf = RootedTree::leaf();
        let p0 = x_tree_prob_at(&k, 0, &leaf, 1).unwrap();
        assert!((p0 - 0.223_130_160_148_429_8).abs() < 1e-12);
        let p = x_tree_prob(&k, &leaf, 1).unwrap();
        assert!((p - ((-1.5f64).exp() + (-0.5f64).exp()) / 2.0).abs() < 1e-15);
        assert!((p - 0.414_830_409_930_531_6).abs() < 1e-12);
        assert!((x_tree_prob(&constant(1), &leaf, 1).unwrap() - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn u_single_type_root_law() {
        let k = constant(1);
        assert_eq!(u_tree_prob(&k, &RootedTree::leaf(), 1).unwrap(), 0.0);
        for s in 1..6 {
            let p = u_tree_prob(&k, &RootedTree::star(s), 1).unwrap();
            assert!((p - poisson_pmf(1.0, s - 1)).abs() < 1e-15, "s={s}");
        }
        assert_eq!(u_tree_prob(&k, &RootedTree::leaf(), 0).unwrap(), 1.0);
        assert!(matches!(UTreeLaw::new(&constant(0)), Err(Error::Degenerate(0))));
    }

    #[test]
    fn u_depth_two_path_by_hand() {
        // W = 1: root has one ancestral child and no others; that child has
        // its own ancestral child and no others.
        let k = constant(1);
        let p = u_tree_prob(&k, &RootedTree::path(3), 2).unwrap();
        let e = (-1f64).exp();
        assert!((p - e * e).abs() < 1e-15);
    }

    #[test]
    fn ball_distributions() {
        let b = x_ball_distribution(&constant(1), 1, 6);
        assert_eq!(b.entries.len(), 6);
        for s in 0..6 {
            assert!((b.get(RootedTree::star(s).code()) - poisson_pmf(1.0, s)).abs() < 1e-15);
        }
        assert!((b.residual - 0.000_594).abs() < 1e-6);

        let z = x_ball_distribution(&constant(0), 3, 5);
        assert_eq!(z.entries.len(), 1);
        assert_eq!(z.get("()"), 1.0);
        assert_eq!(z.residual, 0.0);

        let u = u_ball_distribution(&constant(1), 1, 6).unwrap();
        assert_eq!(u.entries.len(), 5);
        for s in 1..6 {
            assert!((u.get(RootedTree::star(s).code()) - poisson_pmf(1.0, s - 1)).abs() < 1e-15);
        }
        assert!((u.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_examples() {
        let s = survival(&constant(2), 1e-14, 10_000).unwrap();
        assert!((s.gamma - 0.796_812_130_020).abs() < 1e-9);
        for d in [0, 1] {
            let s = survival(&constant(d), 1e-12, 10).unwrap();
            assert_eq!(s.gamma, 0.0);
        }
        let half = StepKernel::constant(q(1, 2)).unwrap();
        assert_eq!(survival(&half, 1e-12, 10).unwrap().gamma, 0.0);
        assert!(matches!(
            survival(&constant(2), 1e-14, 2),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn survival_mixes_critical_and_supercritical_components() {
        let k = StepKernel::disjoint_union(&[
            (q(1, 2), StepKernel::constant(qi(2)).unwrap()),
            (q(1, 2), StepKernel::constant(qi(4)).unwrap()),
        ])
        .unwrap();
        // First block has degree 1 (critical), second degree 2.
        let s = survival(&k, 1e-14, 10_000).unwrap();
        assert_eq!(s.s[0], 0.0);
        assert!((s.s[1] - 0.796_812_130_020).abs() < 1e-9);
        assert!((s.gamma - 0.398_406_065_010).abs() < 1e-9);
    }

    #[test]
    fn psd_test() {
        let m = |rows: &[&[i64]]| -> Vec<Vec<Q>> {
            rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
        };
        assert!(is_positive_semidefinite(m(&[&[2, 1], &[1, 2]])));
        assert!(is_positive_semidefinite(m(&[&[1, 1], &[1, 1]])));
        assert!(!is_positive_semidefinite(m(&[&[1, 2], &[2, 1]])));
        assert!(!is_positive_semidefinite(m(&[&[0, 1], &[1, 0]])));
        assert!(is_positive_semidefinite(m(&[&[0, 0], &[0, 3]])));
        assert!(!is_positive_semidefinite(m(&[&[-1]])));
    }

    #[test]
    fn separating_search_examples() {
        let k = two_type();
        let one = constant(1);
        let sep = separating_tree_search(&k, &one, 3, 8).unwrap();
        assert_eq!(sep.tree.code(), "()");
        assert_eq!(sep.depth, 1);
        assert!((sep.p_u - 0.414_830_409_930_531_6).abs() < 1e-12);
        assert!((sep.p_w - 0.367_879).abs() < 1e-6);
        assert!(separating_tree_search(&k, &k, 3, 8).is_none());
        let bip = StepKernel::new(vec![q(1, 2), q(1, 2)], vec![vec![qi(0), qi(4)], vec![qi(4), qi(0)]]).unwrap();
        assert!(separating_tree_search(&constant(2), &bip, 3, 8).is_none());
    }

    #[test]
    fn tv_distance_basics() {
        let a = BallDistribution { depth: 1, entries: [("()".to_owned(), 1.0)].into(), residual: 0.0 };
        let b = BallDistribution { depth: 1, entries: [("(())".to_owned(), 1.0)].into(), residual: 0.0 };
        assert_eq!(a.tv_distance(&a).unwrap(), 0.0);
        assert_eq!(a.tv_distance(&b).unwrap(), 1.0);
        let c = BallDistribution { depth: 2, ..a.clone() };
        assert!(matches!(a.tv_distance(&c), Err(Error::DepthMismatch(1, 2))));
    }

    #[test]
    fn coarsen_moves_large_classes_to_residual() {
        let b = x_ball_distribution(&constant(1), 1, 6).coarsen(3);
        assert_eq!(b.entries.len(), 3);
        assert!((b.total() - 1.0).abs() < 1e-12);
    }
}
