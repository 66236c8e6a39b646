//! Step kernels: a finite type space with positive masses and a nonnegative
//! rational intensity matrix.
//!
//! A [`StepAkernel`] may be asymmetric; a [`StepKernel`] is symmetric and
//! dereferences to the underlying akernel, so every pointwise quantity
//! (degrees, norms, scaling) is available on both.

use std::collections::VecDeque;
use std::ops::Deref;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

/// A possibly asymmetric step kernel.
///
/// Type `i` is an atom of mass `mu[i] > 0`; the masses sum to one. The degree
/// of type `i` is `sum_j w[i][j] * mu[j]`, i.e. the kernel is read along rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepAkernel {
    mu: Vec<Q>,
    w: Vec<Vec<Q>>,
    labels: Option<Vec<String>>,
}

impl StepAkernel {
    pub fn new(mu: Vec<Q>, w: Vec<Vec<Q>>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidKernel("kernel needs at least one type".into()));
        }
        if let Some(i) = mu.iter().position(|m| !m.is_positive()) {
            return Err(Error::InvalidKernel(format!("mu[{i}] must be positive")));
        }
        if rational::sum(&mu) != Q::one() {
            return Err(Error::InvalidKernel(format!(
                "mu sums to {}, expected 1",
                rational::format_rational(&rational::sum(&mu))
            )));
        }
        if w.len() != n {
            return Err(Error::InvalidKernel(format!("w has {} rows, expected {n}", w.len())));
        }
        for (i, row) in w.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!(
                    "w[{i}] has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|x| x.is_negative()) {
                return Err(Error::InvalidKernel(format!("w[{i}][{j}] is negative")));
            }
        }
        Ok(StepAkernel { mu, w, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::InvalidKernel(format!(
                "{} labels for {} types",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Single-type kernel with constant intensity `d`.
    pub fn constant(d: Q) -> Result<Self> {
        Self::new(vec![Q::one()], vec![vec![d]])
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[Q] {
        &self.mu
    }

    pub fn w(&self) -> &[Vec<Q>] {
        &self.w
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| (0..i).all(|j| self.w[i][j] == self.w[j][i]))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::TypeOutOfRange { index: i, n: self.n() })
        }
    }

    pub fn degree(&self, i: usize) -> Result<Q> {
        self.check_index(i)?;
        Ok(self.degree_unchecked(i))
    }

    fn degree_unchecked(&self, i: usize) -> Q {
        self.w[i]
            .iter()
            .zip(&self.mu)
            .fold(Q::zero(), |acc, (w, m)| acc + w * m)
    }

    pub fn degrees(&self) -> Vec<Q> {
        (0..self.n()).map(|i| self.degree_unchecked(i)).collect()
    }

    /// `sum_{i,j} mu[i] mu[j] w[i][j]`.
    pub fn l1_norm(&self) -> Q {
        self.degrees()
            .iter()
            .zip(&self.mu)
            .fold(Q::zero(), |acc, (d, m)| acc + d * m)
    }

    pub fn min_degree(&self) -> Q {
        self.degrees().into_iter().min().expect("kernel has a type")
    }

    pub fn max_degree(&self) -> Q {
        self.degrees().into_iter().max().expect("kernel has a type")
    }

    /// Largest matrix entry, i.e. the sup norm of the kernel.
    pub fn max_entry(&self) -> Q {
        self.w.iter().flatten().max().cloned().expect("kernel has a type")
    }

    /// Expected number of type-`j` children of a type-`i` particle.
    pub fn intensity(&self, i: usize, j: usize) -> Q {
        &self.w[i][j] * &self.mu[j]
    }

    /// Intensities `w[i][j] * mu[j]` as doubles, for sampling and tree laws.
    pub fn intensities_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| rational::to_f64(&self.intensity(i, j))).collect())
            .collect()
    }

    pub fn mu_f64(&self) -> Vec<f64> {
        self.mu.iter().map(rational::to_f64).collect()
    }

    /// Multiplies every intensity by `t`.
    pub fn scale(&self, t: &Q) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::InvalidKernel("scale factor must be positive".into()));
        }
        Ok(StepAkernel {
            mu: self.mu.clone(),
            w: self.w.iter().map(|row| row.iter().map(|x| x * t).collect()).collect(),
            labels: self.labels.clone(),
        })
    }

    /// Relabels types: new type `k` is old type `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        Ok(StepAkernel {
            mu: perm.iter().map(|&p| self.mu[p].clone()).collect(),
            w: perm
                .iter()
                .map(|&p| perm.iter().map(|&r| self.w[p][r].clone()).collect())
                .collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| perm.iter().map(|&p| l[p].clone()).collect()),
        })
    }

    /// Splits type `i` into two types with half its mass each and identical
    /// rows and columns. The result describes the same kernel on a finer
    /// step partition.
    pub fn split_type(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        let half = &self.mu[i] / rational::qi(2);
        let mut mu = self.mu.clone();
        mu[i] = half.clone();
        mu.push(half);
        let mut w: Vec<Vec<Q>> = self
            .w
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row.push(row[i].clone());
                row
            })
            .collect();
        w.push(w[i].clone());
        let labels = self.labels.as_ref().map(|l| {
            let mut l = l.clone();
            l.push(format!("{}'", l[i]));
            l
        });
        Ok(StepAkernel { mu, w, labels })
    }
}

/// A symmetric step kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepKernel(StepAkernel);

impl Deref for StepKernel {
    type Target = StepAkernel;

    fn deref(&self) -> &StepAkernel {
        &self.0
    }
}

impl From<StepKernel> for StepAkernel {
    fn from(k: StepKernel) -> StepAkernel {
        k.0
    }
}

impl TryFrom<StepAkernel> for StepKernel {
    type Error = Error;

    fn try_from(a: StepAkernel) -> Result<StepKernel> {
        if let Some((i, j)) = first_asymmetry(&a) {
            return Err(Error::InvalidKernel(format!("w[{i}][{j}] != w[{j}][{i}]")));
        }
        Ok(StepKernel(a))
    }
}

fn first_asymmetry(a: &StepAkernel) -> Option<(usize, usize)> {
    (0..a.n())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .find(|&(i, j)| a.w[i][j] != a.w[j][i])
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::SizeMismatch(perm.len(), n));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidKernel(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Connected components of a symmetric kernel.
///
/// `isolated` holds the degree-0 types; `components` are the connected
/// pieces of the support graph on the remaining types, ordered by their
/// smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDecomposition {
    pub isolated: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub masses: Vec<Q>,
}

impl ComponentDecomposition {
    pub fn isolated_mass(&self, k: &StepAkernel) -> Q {
        rational::sum(self.isolated.iter().map(|&i| &k.mu()[i]))
    }
}

impl StepKernel {
    pub fn new(mu: Vec<Q>, w: Vec<Vec<Q>>) -> Result<Self> {
        StepAkernel::new(mu, w)?.try_into()
    }

    pub fn constant(d: Q) -> Result<Self> {
        Ok(StepKernel(StepAkernel::constant(d)?))
    }

    pub fn as_akernel(&self) -> &StepAkernel {
        &self.0
    }

    pub fn scale(&self, t: &Q) -> Result<Self> {
        Ok(StepKernel(self.0.scale(t)?))
    }

    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        Ok(StepKernel(self.0.permute(perm)?))
    }

    pub fn split_type(&self, i: usize) -> Result<Self> {
        Ok(StepKernel(self.0.split_type(i)?))
    }

    pub fn components(&self) -> ComponentDecomposition {
        let n = self.n();
        let degrees = self.degrees();
        let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i].is_zero()).collect();
        let mut seen: Vec<bool> = degrees.iter().map(Zero::is_zero).collect();
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut members = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for j in 0..n {
                    if !seen[j] && self.w()[i][j].is_positive() {
                        seen[j] = true;
                        members.push(j);
                        queue.push_back(j);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        let masses = components
            .iter()
            .map(|c| rational::sum(c.iter().map(|&i| &self.mu()[i])))
            .collect();
        ComponentDecomposition { isolated, components, masses }
    }

    /// The kernel restricted to `types`, with masses renormalized to sum to
    /// one on `types`.
    pub fn restrict(&self, types: &[usize]) -> Result<Self> {
        let (types, mass) = self.type_set(types)?;
        let mu = types.iter().map(|&i| &self.mu()[i] / &mass).collect();
        let w = types
            .iter()
            .map(|&i| types.iter().map(|&j| self.w()[i][j].clone()).collect())
            .collect();
        let labels = self.labels().map(|l| types.iter().map(|&i| l[i].clone()).collect());
        Ok(StepKernel(StepAkernel { mu, w, labels }))
    }

    /// Restriction rescaled by the mass of `types`; on a union of components
    /// this preserves every degree.
    pub fn rescale_restrict(&self, types: &[usize]) -> Result<Self> {
        let (_, mass) = self.type_set(types)?;
        self.restrict(types)?.scale(&mass)
    }

    fn type_set(&self, types: &[usize]) -> Result<(Vec<usize>, Q)> {
        let mut types = types.to_vec();
        types.sort_unstable();
        types.dedup();
        if types.is_empty() {
            return Err(Error::EmptyTypeSet);
        }
        for &i in &types {
            self.check_index(i)?;
        }
        let mass = rational::sum(types.iter().map(|&i| &self.mu()[i]));
        Ok((types, mass))
    }

    /// `W†(i, j) = w[i][j] / deg(j)`, with `0/0 = 0`.
    pub fn markov_renormalize(&self) -> StepAkernel {
        let degrees = self.degrees();
        let w = self
            .w()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&degrees)
                    .map(|(x, d)| if d.is_zero() { Q::zero() } else { x / d })
                    .collect()
            })
            .collect();
        StepAkernel { mu: self.mu().to_vec(), w, labels: self.0.labels.clone() }
    }

    /// Per-component renormalization: on component `L`, multiply by
    /// `mu(L) / integral of W over L x L`.
    pub fn heart(&self) -> Result<Self> {
        let decomposition = self.components();
        let mut factor = vec![Q::zero(); self.n()];
        for (members, mass) in decomposition.components.iter().zip(&decomposition.masses) {
            let mut internal = Q::zero();
            for &i in members {
                for &j in members {
                    internal += &self.mu()[i] * &self.mu()[j] * &self.w()[i][j];
                }
            }
            if internal.is_zero() {
                return Err(Error::Internal(format!(
                    "component {members:?} has zero internal mass"
                )));
            }
            let f = mass / internal;
            for &i in members {
                factor[i] = f.clone();
            }
        }
        let w = self
            .w()
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|x| x * &factor[i]).collect())
            .collect();
        Ok(StepKernel(StepAkernel { mu: self.mu().to_vec(), w, labels: self.0.labels.clone() }))
    }

    /// `c_W = sqrt(sum_i mu[i] deg(i)^2) / ||W||_1`.
    pub fn cw_constant(&self) -> Result<f64> {
        let norm = self.l1_norm();
        if norm.is_zero() {
            return Err(Error::ZeroKernel);
        }
        let second_moment = self
            .degrees()
            .iter()
            .zip(self.mu())
            .fold(Q::zero(), |acc, (d, m)| acc + d * d * m);
        // Ratio first so that huge numerators cannot overflow the conversion.
        let ratio = second_moment / (&norm * &norm);
        Ok(rational::to_f64(&ratio).sqrt())
    }

    /// Block-diagonal kernel built from `(mass, piece)` pairs; the masses
    /// must be positive and sum to one.
    pub fn disjoint_union(parts: &[(Q, StepKernel)]) -> Result<Self> {
        let n: usize = parts.iter().map(|(_, k)| k.n()).sum();
        let mut mu = Vec::with_capacity(n);
        let mut w = vec![vec![Q::zero(); n]; n];
        let mut offset = 0;
        for (mass, piece) in parts {
            for i in 0..piece.n() {
                mu.push(mass * &piece.mu()[i]);
                for j in 0..piece.n() {
                    w[offset + i][offset + j] = piece.w()[i][j].clone();
                }
            }
            offset += piece.n();
        }
        StepKernel::new(mu, w)
    }
}
