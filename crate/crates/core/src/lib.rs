//! Finite-type ("step") kernels and the random trees they generate.
//!
//! The crate decides fractional, projective and piecewise-projective
//! fractional isomorphism of step kernels exactly (all kernel data is
//! arbitrary-precision rational), computes depth-truncated tree laws of the
//! Poisson multitype branching process and of the uniform-spanning-tree
//! local-limit process, and samples both processes as well as finite random
//! graphs and their uniform spanning trees.
//!
//! Module map:
//!
//! - [`kernel`]: step kernels and akernels, degrees, components, restriction,
//!   Markov renormalization, per-component renormalization, `c_W`.
//! - [`refinement`]: exact colour refinement, isomorphism decisions and the
//!   component factorization checks, for kernels and finite graphs.
//! - [`trees`]: canonical rooted trees, enumeration, `e_F` coefficients.
//! - [`probs`]: exact tree probabilities, survival probability, separating
//!   tree search.
//! - [`simulate`]: seeded, thread-count independent Monte Carlo samplers.
//! - [`ust`]: random graphs from kernels, Wilson's algorithm, ball statistics.
//! - [`io`]: JSON file formats for kernels and graphs.

pub mod error;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod probs;
pub mod rational;
pub mod refinement;
pub mod rng;
pub mod simulate;
pub mod trees;
pub mod ust;

pub use error::{Error, Result};
pub use graph::Graph;
pub use kernel::{ComponentDecomposition, StepAkernel, StepKernel};
pub use probs::BallDistribution;
pub use rational::Q;
pub use refinement::{StablePartition, Template};
pub use trees::RootedTree;
