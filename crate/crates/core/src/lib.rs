//! Sparse Erdős–Rényi graphs with many triangles.
//!
//! Exact triangle and vertex-in-triangle statistics, conditional
//! expectations, the seed/core and q-basic decompositions, the variational
//! problem behind the triangle upper tail, exact and Monte Carlo tail
//! probabilities, the `V_T`-tilted exponential random graph, and rooted
//! neighbourhood censuses against the Poisson Galton–Watson tree.

// Parameter checks use negated comparisons so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod cores;
pub mod ergm;
pub mod error;
pub mod graph;
pub mod local_limit;
pub mod qbasic;
pub mod rng;
pub mod small;
pub mod tails;
pub mod variational;

pub use error::{Error, Result};
pub use graph::{ErParams, Graph, SubgraphCounts, TriangleStats};
