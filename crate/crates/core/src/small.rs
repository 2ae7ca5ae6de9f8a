//! Bit-mask graphs for exhaustive enumeration over all `2^{C(n,2)}` graphs
//! on a handful of vertices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default enumeration cap (2,097,152 graphs at n = 7).
pub const ENUMERATION_CAP: usize = 7;
/// Hard cap, reachable only with an explicit override.
pub const ENUMERATION_HARD_CAP: usize = 8;

pub fn check_cap(n: usize, allow_large: bool) -> Result<()> {
    let cap = if allow_large { ENUMERATION_HARD_CAP } else { ENUMERATION_CAP };
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    if n > ENUMERATION_CAP {
        eprintln!("warning: enumerating all graphs on {n} vertices; this takes minutes");
    }
    Ok(())
}

/// Pairs `(i, j)`, `i < j`, in lexicographic order; bit `k` of an edge mask
/// stands for `pairs(n)[k]`.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Adjacency masks for edge mask `mask` over `pairs`.
pub fn masks_from_edges(n: usize, pairs: &[(usize, usize)], mask: u64) -> [u64; 8] {
    debug_assert!(n <= 8);
    let mut adj = [0u64; 8];
    let mut rest = mask;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let (i, j) = pairs[k];
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    adj
}

/// `(T, V_T)` from neighbour masks.
pub fn triangles_and_vt(adj: &[u64]) -> (u32, u32) {
    let mut t = 0;
    let mut in_triangle = 0u64;
    for (i, &ai) in adj.iter().enumerate() {
        // neighbours j > i
        let mut higher = ai & !((2u64 << i) - 1);
        while higher != 0 {
            let j = higher.trailing_zeros() as usize;
            higher &= higher - 1;
            let apex = ai & adj[j] & !((2u64 << j) - 1);
            if apex != 0 {
                t += apex.count_ones();
                in_triangle |= (1 << i) | (1 << j) | apex;
            }
        }
    }
    (t, in_triangle.count_ones())
}

pub fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let ps = pairs(n);
    Graph::from_edges(n, (0..ps.len()).filter(|&k| mask >> k & 1 == 1).map(|k| ps[k]))
        .expect("pairs are valid")
}

/// Joint counts of graphs on `n` labelled vertices by edge count and by
/// `T` or `V_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Census {
    pub n: usize,
    /// `by_triangles[e][t]`: number of graphs with `e` edges and `t` triangles.
    pub by_triangles: Vec<Vec<u64>>,
    /// `by_vt[e][q]`: number of graphs with `e` edges and `V_T = q`.
    pub by_vt: Vec<Vec<u64>>,
}

impl Census {
    fn zero(n: usize) -> Self {
        let m = n * n.saturating_sub(1) / 2;
        let t_max = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        Self { n, by_triangles: vec![vec![0; t_max + 1]; m + 1], by_vt: vec![vec![0; n + 1]; m + 1] }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.by_triangles.iter_mut().zip(&other.by_triangles) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.by_vt.iter_mut().zip(&other.by_vt) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }

    pub fn pair_count(&self) -> usize {
        self.by_vt.len() - 1
    }
}

/// Enumerates every graph on `n ≤ 8` vertices. Work is split on the top
/// edge bits; integer counts make the reduction order irrelevant.
pub fn enumerate_census(n: usize) -> Census {
    assert!(n <= ENUMERATION_HARD_CAP, "n = {n} too large to enumerate");
    let ps = pairs(n);
    let m = ps.len();
    let split_bits = m.min(6);
    let low_bits = m - split_bits;
    (0u64..1 << split_bits)
        .into_par_iter()
        .map(|hi| {
            let mut census = Census::zero(n);
            for lo in 0u64..1 << low_bits {
                let mask = hi << low_bits | lo;
                let adj = masks_from_edges(n, &ps, mask);
                let (t, vt) = triangles_and_vt(&adj[..n]);
                let e = mask.count_ones() as usize;
                census.by_triangles[e][t as usize] += 1;
                census.by_vt[e][vt as usize] += 1;
            }
            census
        })
        .reduce(|| Census::zero(n), Census::merge)
}
