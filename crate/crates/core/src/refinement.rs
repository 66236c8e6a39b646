//! Exact colour refinement on step akernels and finite graphs.
//!
//! Every type starts with the same colour. In each round a type's new colour
//! is the pair (old colour, vector of its weighted degrees into each old
//! colour class); the pairs are sorted and numbered, which makes the
//! numbering independent of how the types are ordered. Refinement stops at
//! the first round that does not split a class. For kernels the weights are
//! `w[i][j] * mu[j]`; for graphs they are adjacency counts.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{StepAkernel, StepKernel};
use crate::rational::{self, Q};

/// Colour classes of a stable refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StablePartition {
    /// Colour of each type (or vertex), numbered canonically from zero.
    pub color: Vec<usize>,
    /// Rounds that split at least one class before stability.
    pub rounds: usize,
}

impl StablePartition {
    pub fn num_colors(&self) -> usize {
        self.color.iter().max().map_or(0, |&c| c + 1)
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.num_colors()];
        for (i, &c) in self.color.iter().enumerate() {
            classes[c].push(i);
        }
        classes
    }

    /// True if every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &StablePartition) -> Result<bool> {
        if self.color.len() != coarser.color.len() {
            return Err(Error::SizeMismatch(self.color.len(), coarser.color.len()));
        }
        let mut image = vec![None; self.num_colors()];
        for (&mine, &theirs) in self.color.iter().zip(&coarser.color) {
            match image[mine] {
                None => image[mine] = Some(theirs),
                Some(c) if c != theirs => return Ok(false),
                Some(_) => {}
            }
        }
        Ok(true)
    }
}

/// Quotient data of a stable partition: the mass of each colour and the
/// weighted degree from any member of colour `a` into colour `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub p: Vec<Q>,
    pub d: Vec<Vec<Q>>,
}

impl Template {
    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k(),
            "p": self.p.iter().map(rational::format_rational).collect::<Vec<_>>(),
            "D": self
                .d
                .iter()
                .map(|row| row.iter().map(rational::format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// A weighted type system: row `i` of `w` read against `mass`.
struct System<'a> {
    w: &'a [Vec<Q>],
    mass: &'a [Q],
}

impl System<'_> {
    fn signature(&self, i: usize, color: &[usize], k: usize) -> Vec<Q> {
        let mut sig = vec![Q::zero(); k];
        for (j, x) in self.w[i].iter().enumerate() {
            if !x.is_zero() {
                sig[color[j]] += x * &self.mass[j];
            }
        }
        sig
    }

    /// One refinement round; returns the new colouring and colour count.
    fn step(&self, color: &[usize], k: usize) -> (Vec<usize>, usize) {
        let keys: Vec<(usize, Vec<Q>)> = (0..color.len())
            .map(|i| (color[i], self.signature(i, color, k)))
            .collect();
        let mut distinct: Vec<&(usize, Vec<Q>)> = keys.iter().collect();
        distinct.sort();
        distinct.dedup();
        let new_color = keys
            .iter()
            .map(|key| distinct.binary_search(&key).expect("key is present"))
            .collect();
        (new_color, distinct.len())
    }

    /// Every partition from the trivial one up to the stable one.
    fn history(&self) -> Vec<Vec<usize>> {
        let n = self.mass.len();
        let mut color = vec![0; n];
        let mut k = usize::from(n > 0);
        let mut out = vec![color.clone()];
        loop {
            let (next, next_k) = self.step(&color, k);
            if next_k == k {
                return out;
            }
            color = next;
            k = next_k;
            out.push(color.clone());
        }
    }

    fn stable(&self) -> StablePartition {
        let mut history = self.history();
        let rounds = history.len() - 1;
        StablePartition { color: history.pop().expect("history is nonempty"), rounds }
    }

    fn template(&self, partition: &StablePartition) -> Template {
        let k = partition.num_colors();
        let mut p = vec![Q::zero(); k];
        let mut d = vec![Vec::new(); k];
        for (i, &c) in partition.color.iter().enumerate() {
            p[c] += &self.mass[i];
            if d[c].is_empty() {
                d[c] = self.signature(i, &partition.color, k);
            }
        }
        Template { p, d }
    }
}

/// Stable colour refinement of an akernel, with its template.
pub fn refine(a: &StepAkernel) -> (StablePartition, Template) {
    let system = System { w: a.w(), mass: a.mu() };
    let partition = system.stable();
    let template = system.template(&partition);
    (partition, template)
}

/// The partition after each refinement round, starting from the trivial one.
pub fn refinement_history(a: &StepAkernel) -> Vec<StablePartition> {
    System { w: a.w(), mass: a.mu() }
        .history()
        .into_iter()
        .enumerate()
        .map(|(rounds, color)| StablePartition { color, rounds })
        .collect()
}

/// Joint refinement of two akernels placed block-diagonally, each keeping
/// its own masses.
#[derive(Clone, Debug)]
pub struct JointRefinement {
    pub partition: StablePartition,
    /// Mass of each stable colour contributed by the first kernel.
    pub mass_u: Vec<Q>,
    /// Mass of each stable colour contributed by the second kernel.
    pub mass_w: Vec<Q>,
}

impl JointRefinement {
    pub fn is_isomorphic(&self) -> bool {
        self.mass_u == self.mass_w
    }

    pub fn to_json(&self) -> Value {
        json!({
            "colors": self.partition.num_colors(),
            "rounds": self.partition.rounds,
            "mass_u": self.mass_u.iter().map(rational::format_rational).collect::<Vec<_>>(),
            "mass_w": self.mass_w.iter().map(rational::format_rational).collect::<Vec<_>>(),
        })
    }
}

pub fn joint_refinement(u: &StepAkernel, w: &StepAkernel) -> JointRefinement {
    let (nu, nw) = (u.n(), w.n());
    let n = nu + nw;
    let mut matrix = vec![vec![Q::zero(); n]; n];
    for i in 0..nu {
        matrix[i][..nu].clone_from_slice(&u.w()[i]);
    }
    for i in 0..nw {
        matrix[nu + i][nu..].clone_from_slice(&w.w()[i]);
    }
    let mass: Vec<Q> = u.mu().iter().chain(w.mu()).cloned().collect();
    let partition = System { w: &matrix, mass: &mass }.stable();
    let k = partition.num_colors();
    let mut mass_u = vec![Q::zero(); k];
    let mut mass_w = vec![Q::zero(); k];
    for (i, &c) in partition.color.iter().enumerate() {
        if i < nu {
            mass_u[c] += &mass[i];
        } else {
            mass_w[c] += &mass[i];
        }
    }
    JointRefinement { partition, mass_u, mass_w }
}

/// Fractional isomorphism: equal iterated degree measures.
pub fn frac_iso(u: &StepAkernel, w: &StepAkernel) -> bool {
    joint_refinement(u, w).is_isomorphic()
}

/// The unique `t > 0` with `U` fractionally isomorphic to `tW`, if any.
///
/// Fractionally isomorphic kernels have equal L1 norms, so `t` can only be
/// `||U||_1 / ||W||_1`.
pub fn proj_frac_iso(u: &StepKernel, w: &StepKernel) -> Result<Option<Q>> {
    let (nu, nw) = (u.l1_norm(), w.l1_norm());
    if nu.is_zero() || nw.is_zero() {
        return Err(Error::ZeroKernel);
    }
    let t = nu / nw;
    let scaled = w.scale(&t)?;
    Ok(frac_iso(u.as_akernel(), scaled.as_akernel()).then_some(t))
}

/// Components of two kernels grouped into equivalence classes.
#[derive(Clone, Debug)]
pub struct ComponentGrouping {
    pub classes: Vec<GroupClass>,
    pub isolated_u: Q,
    pub isolated_w: Q,
}

#[derive(Clone, Debug)]
pub struct GroupClass {
    /// Indices into the first kernel's component list.
    pub members_u: Vec<usize>,
    pub members_w: Vec<usize>,
    pub mass_u: Q,
    pub mass_w: Q,
}

impl ComponentGrouping {
    pub fn holds(&self) -> bool {
        self.isolated_u == self.isolated_w && self.classes.iter().all(|c| c.mass_u == c.mass_w)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "isolated_u": rational::format_rational(&self.isolated_u),
            "isolated_w": rational::format_rational(&self.isolated_w),
            "classes": self.classes.iter().map(|c| json!({
                "components_u": c.members_u,
                "components_w": c.members_w,
                "mass_u": rational::format_rational(&c.mass_u),
                "mass_w": rational::format_rational(&c.mass_w),
            })).collect::<Vec<_>>(),
        })
    }
}

fn group_components<P>(
    pieces_u: Vec<(Q, P)>,
    pieces_w: Vec<(Q, P)>,
    isolated_u: Q,
    isolated_w: Q,
    same_class: impl Fn(&P, &P) -> bool,
) -> ComponentGrouping {
    let mut representatives: Vec<P> = Vec::new();
    let mut classes: Vec<GroupClass> = Vec::new();
    for (side, pieces) in [pieces_u, pieces_w].into_iter().enumerate() {
        for (index, (mass, piece)) in pieces.into_iter().enumerate() {
            let slot = match representatives.iter().position(|r| same_class(r, &piece)) {
                Some(slot) => slot,
                None => {
                    representatives.push(piece);
                    classes.push(GroupClass {
                        members_u: Vec::new(),
                        members_w: Vec::new(),
                        mass_u: Q::zero(),
                        mass_w: Q::zero(),
                    });
                    classes.len() - 1
                }
            };
            let class = &mut classes[slot];
            if side == 0 {
                class.members_u.push(index);
                class.mass_u += mass;
            } else {
                class.members_w.push(index);
                class.mass_w += mass;
            }
        }
    }
    ComponentGrouping { classes, isolated_u, isolated_w }
}

fn normalized_components(k: &StepKernel) -> Result<Vec<(Q, StepKernel)>> {
    let decomposition = k.components();
    decomposition
        .components
        .iter()
        .zip(decomposition.masses)
        .map(|(members, mass)| {
            let piece = k.restrict(members)?;
            let norm = piece.l1_norm();
            if norm.is_zero() {
                return Err(Error::Internal(format!("component {members:?} has zero norm")));
            }
            Ok((mass, piece.scale(&(Q::one() / norm))?))
        })
        .collect()
}

/// Per-component projective grouping: components are compared after
/// normalizing each to unit L1 norm.
pub fn piecewise_grouping(u: &StepKernel, w: &StepKernel) -> Result<ComponentGrouping> {
    let iso_u = u.components().isolated_mass(u);
    let iso_w = w.components().isolated_mass(w);
    Ok(group_components(
        normalized_components(u)?,
        normalized_components(w)?,
        iso_u,
        iso_w,
        |a, b| frac_iso(a.as_akernel(), b.as_akernel()),
    ))
}

/// Piecewise projective fractional isomorphism.
pub fn piecewise_proj_frac_iso(u: &StepKernel, w: &StepKernel) -> Result<bool> {
    Ok(piecewise_grouping(u, w)?.holds())
}

fn rescaled_components(k: &StepKernel) -> Result<Vec<(Q, StepKernel)>> {
    let decomposition = k.components();
    decomposition
        .components
        .iter()
        .zip(decomposition.masses)
        .map(|(members, mass)| Ok((mass, k.rescale_restrict(members)?)))
        .collect()
}

/// Component factorization of fractional isomorphism: group the rescaled
/// components by plain fractional isomorphism and compare class masses.
pub fn kernel_factor_grouping(u: &StepKernel, w: &StepKernel) -> Result<ComponentGrouping> {
    let iso_u = u.components().isolated_mass(u);
    let iso_w = w.components().isolated_mass(w);
    Ok(group_components(
        rescaled_components(u)?,
        rescaled_components(w)?,
        iso_u,
        iso_w,
        |a, b| frac_iso(a.as_akernel(), b.as_akernel()),
    ))
}

pub fn kernel_factor_check(u: &StepKernel, w: &StepKernel) -> Result<bool> {
    Ok(kernel_factor_grouping(u, w)?.holds())
}

fn adjacency_matrix(g: &Graph) -> Vec<Vec<Q>> {
    let mut m = vec![vec![Q::zero(); g.n()]; g.n()];
    for (u, v) in g.edges() {
        m[u][v] = Q::one();
        m[v][u] = Q::one();
    }
    m
}

/// Coarsest equitable partition of `g` and its template: `p[j]` is the
/// fraction of vertices in class `j`, `d[j][l]` the number of neighbours a
/// class-`j` vertex has in class `l`.
pub fn graph_equitable(g: &Graph) -> Result<(StablePartition, Template)> {
    if g.n() == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let matrix = adjacency_matrix(g);
    let ones = vec![Q::one(); g.n()];
    let system = System { w: &matrix, mass: &ones };
    let partition = system.stable();
    let mut template = system.template(&partition);
    let n = rational::qi(g.n() as i64);
    for p in &mut template.p {
        *p /= &n;
    }
    Ok((partition, template))
}

/// Practional isomorphism: equal templates of the coarsest equitable
/// partitions. Canonical colour numbering makes the templates directly
/// comparable.
pub fn practional_iso(g: &Graph, h: &Graph) -> Result<bool> {
    Ok(graph_equitable(g)?.1 == graph_equitable(h)?.1)
}

/// Component factorization for graphs: group components by practional
/// isomorphism and compare their vertex fractions.
pub fn graph_factor_check(g: &Graph, h: &Graph) -> Result<bool> {
    if g.n() == 0 || h.n() == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let pieces = |x: &Graph| -> Result<Vec<(Q, Template)>> {
        let n = rational::qi(x.n() as i64);
        x.components()
            .iter()
            .map(|c| Ok((rational::qi(c.len() as i64) / &n, graph_equitable(&x.induced(c))?.1)))
            .collect()
    };
    Ok(group_components(pieces(g)?, pieces(h)?, Q::zero(), Q::zero(), |a, b| a == b).holds())
}
