//! Expected triangle count of `G(n, p)` conditioned on containing a planted
//! graph `G`.
//!
//! Every vertex triple of `[n]` that already holds `j` edges of `G` becomes a
//! triangle with probability `p^{3-j}`, so
//! `E_G(T) = a3 + a2 p + a1 p² + a0 p³` where `a_j` counts triples holding
//! exactly `j` edges of `G`. The profile follows from the edge, cherry and
//! triangle counts of `G` alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{sample_er_stream, subgraph_counts, triangle_stats, ErParams, Graph};

/// Number of vertex triples of `[n]` containing exactly 0, 1, 2 or 3 edges
/// of the planted graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleProfile {
    pub a0: u128,
    pub a1: u128,
    pub a2: u128,
    pub a3: u128,
}

pub fn choose3(n: u128) -> u128 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

impl TripleProfile {
    /// `a3 + a2 p + a1 p² + a0 p³`.
    pub fn expected_triangles(&self, p: f64) -> f64 {
        let (a0, a1, a2, a3) = (self.a0 as f64, self.a1 as f64, self.a2 as f64, self.a3 as f64);
        a3 + p * (a2 + p * (a1 + p * a0))
    }

    pub fn total(&self) -> u128 {
        self.a0 + self.a1 + self.a2 + self.a3
    }

    /// Profile after deleting the edge `{u, v}` of `g` (which must be
    /// present). Only the `n - 2` triples through `u` and `v` change.
    pub fn without_edge(&self, g: &Graph, n: usize, u: usize, v: usize) -> TripleProfile {
        debug_assert!(g.has_edge(u, v));
        let both = g.common_neighbor_count(u, v) as u128;
        // third vertices adjacent to exactly one of u, v
        let one = (g.degree(u) + g.degree(v) - 2) as u128 - 2 * both;
        let none = (n as u128 - 2) - both - one;
        TripleProfile {
            a3: self.a3 - both,
            a2: self.a2 + both - one,
            a1: self.a1 + one - none,
            a0: self.a0 + none,
        }
    }
}

fn check_ambient(g: &Graph, n: usize) -> Result<()> {
    if let Some(max) = g.max_label() {
        if max >= n {
            return Err(invalid(format!("planted graph uses vertex {max}, ambient graph has {n} vertices")));
        }
    }
    Ok(())
}

pub fn triple_profile(g: &Graph, n: usize) -> Result<TripleProfile> {
    check_ambient(g, n)?;
    let c = subgraph_counts(g);
    let (e, ch, t) = (c.edges as u128, c.cherries as u128, c.triangles as u128);
    let a3 = t;
    let a2 = ch - 3 * t;
    let a1 = e * (n as u128).saturating_sub(2) + 3 * t - 2 * ch;
    let a0 = choose3(n as u128) - a1 - a2 - a3;
    Ok(TripleProfile { a0, a1, a2, a3 })
}

/// Exact `E_G(T)` for `G(n, p)` conditioned on containing `g`.
pub fn expected_triangles_conditional(g: &Graph, params: &ErParams) -> Result<f64> {
    Ok(triple_profile(g, params.n())?.expected_triangles(params.p()))
}

/// `N(K_{1,2},G) p + N(K_2,G) n p² + N(K_3,G) + λ³/6`, an upper bound on
/// `E_G(T)`.
pub fn expectation_upper_bound(g: &Graph, params: &ErParams) -> f64 {
    let c = subgraph_counts(g);
    let (n, p) = (params.n() as f64, params.p());
    let lambda = n * p;
    c.cherries as f64 * p + c.edges as f64 * n * p * p + c.triangles as f64 + lambda.powi(3) / 6.0
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self { mean, stderr: (var / k).sqrt(), samples: values.len() as u64 }
    }
}

/// Monte Carlo estimate of `E_G(T)`: average triangle count of
/// `G(n, p) ∪ g`. Sample `i` uses stream `i` of `seed`.
pub fn mc_conditional_expectation(
    g: &Graph,
    params: &ErParams,
    samples: u64,
    seed: u64,
) -> Result<MeanEstimate> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    check_ambient(g, params.n())?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let h = sample_er_stream(params, seed, i).union(g);
            triangle_stats(&h).total as f64
        })
        .collect();
    Ok(MeanEstimate::from_values(&values))
}
