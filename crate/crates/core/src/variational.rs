//! The variational problem
//! `Φ_{n,p,k}(a) = min { e_G log(1/p) : G ⊆ K_n, E_G(T) ≥ a k }`,
//! its clique upper bound and edge-count lower bound, an exhaustive solver
//! for tiny `n`, and the closed-form rates and correction terms of the
//! upper-tail estimates. All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::conditional::{expected_triangles_conditional, triple_profile, TripleProfile};
use crate::error::{invalid, Error, Result};
use crate::graph::{ErParams, Graph};
use crate::small::{masks_from_edges, pairs, triangles_and_vt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiQuery {
    pub n: usize,
    pub p: f64,
    pub k: f64,
    pub a: f64,
    /// Perturbation `w ≥ 0`.
    pub w: f64,
}

impl PhiQuery {
    pub fn new(n: usize, p: f64, k: f64, a: f64, w: f64) -> Result<Self> {
        let q = Self { n, p, k, a, w };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.k >= 1.0) {
            return Err(invalid(format!("k must be at least 1, got {}", self.k)));
        }
        if !(self.a > 0.0) {
            return Err(invalid(format!("a must be positive, got {}", self.a)));
        }
        if !(self.w >= 0.0) {
            return Err(invalid(format!("w must be non-negative, got {}", self.w)));
        }
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        Ok(())
    }

    pub fn log_inv_p(&self) -> f64 {
        -self.p.ln()
    }

    pub fn target(&self) -> f64 {
        self.a * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    Exact,
    CliqueUpper,
    EdgeLower,
}

impl PhiMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhiMethod::Exact => "exact",
            PhiMethod::CliqueUpper => "clique_upper",
            PhiMethod::EdgeLower => "edge_lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiResult {
    /// In natural-log units: edges times `log(1/p)`.
    pub value: f64,
    pub witness: Option<Graph>,
    pub method: PhiMethod,
    /// `e_witness · log(1/p)` when a feasible witness is attached.
    pub witness_value: Option<f64>,
    /// Set when the clique witness would need more than `n` vertices.
    pub witness_does_not_fit: bool,
}

fn clique_expectation(r: usize, params: &ErParams) -> f64 {
    let k = Graph::complete(r);
    expected_triangles_conditional(&k, params).expect("clique fits in ambient graph")
}

/// Smallest integer `r` with `r ≥ x`, tolerant to rounding in `x`.
fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (r - x).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// `½ (6a(1+w)k)^{2/3} log(1/p)` together with a clique witness: the smallest
/// `r ≥ ⌈(6a(1+w)k)^{1/3}⌉` whose clique meets `E_{K_r}(T) ≥ a k`.
pub fn clique_upper_bound(q: &PhiQuery) -> Result<PhiResult> {
    q.validate()?;
    let scale = 6.0 * q.a * (1.0 + q.w) * q.k;
    let value = 0.5 * scale.powf(2.0 / 3.0) * q.log_inv_p();
    let params = ErParams::with_p(q.n, q.p)?;
    let mut r = ceil_tolerant(scale.cbrt()).max(1);
    while r <= q.n && clique_expectation(r, &params) < q.target() {
        r += 1;
    }
    if r > q.n {
        return Ok(PhiResult {
            value,
            witness: None,
            method: PhiMethod::CliqueUpper,
            witness_value: None,
            witness_does_not_fit: true,
        });
    }
    let witness = Graph::empty(q.n).with_subgraph(&Graph::complete(r), 0);
    let witness_value = witness.edge_count() as f64 * q.log_inv_p();
    Ok(PhiResult {
        value,
        witness: Some(witness),
        method: PhiMethod::CliqueUpper,
        witness_value: Some(witness_value),
        witness_does_not_fit: false,
    })
}

/// `½ (6a(1-w)k)^{2/3} log(1/p)`, zero for `w ≥ 1`.
pub fn edge_lower_bound(q: &PhiQuery) -> Result<PhiResult> {
    q.validate()?;
    let scale = 6.0 * q.a * (1.0 - q.w).max(0.0) * q.k;
    Ok(PhiResult {
        value: 0.5 * scale.powf(2.0 / 3.0) * q.log_inv_p(),
        witness: None,
        method: PhiMethod::EdgeLower,
        witness_value: None,
        witness_does_not_fit: false,
    })
}

/// Default largest `n` for [`phi_exact`].
pub const PHI_EXACT_CAP: usize = 6;

fn profile_from_masks(adj: &[u64], n: usize) -> TripleProfile {
    let (t, _) = triangles_and_vt(adj);
    let (t, mut e, mut ch) = (t as u128, 0u128, 0u128);
    for &a in adj {
        let d = a.count_ones() as u128;
        e += d;
        ch += d * d.saturating_sub(1) / 2;
    }
    e /= 2;
    let a3 = t;
    let a2 = ch - 3 * t;
    let a1 = e * (n as u128).saturating_sub(2) + 3 * t - 2 * ch;
    let a0 = crate::conditional::choose3(n as u128) - a1 - a2 - a3;
    TripleProfile { a0, a1, a2, a3 }
}

/// Next integer with the same popcount (Gosper's hack).
fn next_same_popcount(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// Exact `Φ` by enumerating edge subsets of `K_n` level by level in edge
/// count; the first feasible level gives the minimum and its numerically
/// smallest edge mask is the witness.
pub fn phi_exact(q: &PhiQuery, max_n: usize) -> Result<PhiResult> {
    q.validate()?;
    if q.n > max_n.min(7) {
        return Err(Error::EnumerationCap { n: q.n, cap: max_n.min(7) });
    }
    let n = q.n;
    let ps = pairs(n);
    let m = ps.len();
    let target = q.target();
    let feasible = |mask: u64| {
        let adj = masks_from_edges(n, &ps, mask);
        profile_from_masks(&adj[..n], n).expected_triangles(q.p) >= target
    };
    for level in 0..=m {
        let mut mask: u64 = if level == 0 { 0 } else { (1u64 << level) - 1 };
        loop {
            if feasible(mask) {
                let witness = crate::small::graph_from_mask(n, mask);
                let value = level as f64 * q.log_inv_p();
                return Ok(PhiResult {
                    value,
                    witness: Some(witness),
                    method: PhiMethod::Exact,
                    witness_value: Some(value),
                    witness_does_not_fit: false,
                });
            }
            if level == 0 || level == m {
                break;
            }
            mask = next_same_popcount(mask);
            if mask >> m != 0 {
                break;
            }
        }
    }
    Err(Error::Infeasible)
}

/// Fewest edges compatible with `t` triangles: `T ≤ (2e)^{3/2}/6` rearranged.
pub fn min_edges_for_triangles(t: f64) -> f64 {
    0.5 * (6.0 * t).powf(2.0 / 3.0)
}

/// `½ (6k)^{2/3} log(1/p)`.
pub fn rate_triangles(k: f64, p: f64) -> f64 {
    0.5 * (6.0 * k).powf(2.0 / 3.0) * (-p.ln())
}

/// `(k/3) log(k/3)`.
pub fn rate_vt(k: f64) -> f64 {
    let x = k / 3.0;
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Inputs of [`correction_terms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInputs {
    pub n: f64,
    pub p: f64,
    pub k: f64,
    pub a: f64,
    pub w: f64,
    /// Seed/core budget constant.
    pub c: f64,
    /// Constant of the core-count and `ψ` bounds.
    pub c_prime: f64,
    /// Core size used for `Ψ`; omitted when not needed.
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTerms {
    /// Edge-drop threshold `w² k^{1/3} / (C a log(1/p))`.
    pub t_n: f64,
    /// `C' log n / (w² k^{1/3}) + log[C' w^{-5} log³(1/p)] / log(1/p)`.
    pub psi_n: f64,
    /// `(1/log(1/p)) ((C'/t) log n + log(C' m / t²))`, when `m` is given.
    pub big_psi_n: Option<f64>,
    /// `log ξ = [½(6a)^{2/3} − C/3] k^{2/3} log(1/p)`.
    pub log_xi_n: f64,
    pub xi_n: f64,
    /// `k^{-2/3}`.
    pub eps_n: f64,
}

pub fn threshold_t(k: f64, a: f64, w: f64, c: f64, p: f64) -> f64 {
    w * w * k.cbrt() / (c * a * (-p.ln()))
}

pub fn big_psi(n: f64, p: f64, t: f64, m: f64, c_prime: f64) -> f64 {
    ((c_prime / t) * n.ln() + (c_prime * m / (t * t)).ln()) / (-p.ln())
}

pub fn correction_terms(inp: &CorrectionInputs) -> Result<CorrectionTerms> {
    let CorrectionInputs { n, p, k, a, w, c, c_prime, m } = *inp;
    if !(w > 0.0) {
        return Err(invalid("w must be positive"));
    }
    if !(c > 0.0 && c_prime > 0.0) {
        return Err(invalid("constants C and C' must be positive"));
    }
    if !(p > 0.0 && p < 1.0) || !(k >= 1.0) || !(a > 0.0) || !(n >= 1.0) {
        return Err(invalid("need 0 < p < 1, k >= 1, a > 0, n >= 1"));
    }
    let log_inv_p = -p.ln();
    let t_n = threshold_t(k, a, w, c, p);
    let psi_n = c_prime * n.ln() / (w * w * k.cbrt())
        + (c_prime * w.powi(-5) * log_inv_p.powi(3)).ln() / log_inv_p;
    let log_xi_n = (0.5 * (6.0 * a).powf(2.0 / 3.0) - c / 3.0) * k.powf(2.0 / 3.0) * log_inv_p;
    Ok(CorrectionTerms {
        t_n,
        psi_n,
        big_psi_n: m.map(|m| big_psi(n, p, t_n, m, c_prime)),
        log_xi_n,
        xi_n: log_xi_n.exp(),
        eps_n: ErParams::eps(k),
    })
}

/// Checks the feasibility of a witness against the target.
pub fn witness_is_feasible(q: &PhiQuery, g: &Graph) -> Result<bool> {
    Ok(triple_profile(g, q.n)?.expected_triangles(q.p) >= q.target())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn clique_bound_arithmetic() {
        let q = PhiQuery::new(100, 0.01, 36.0, 1.0, 0.0).unwrap();
        let r = clique_upper_bound(&q).unwrap();
        assert!(close(r.value, 18.0 * 100f64.ln(), 1e-12));
        assert!(close(r.value, 82.89306334778564, 1e-12));
        let w = r.witness.unwrap();
        assert!(witness_is_feasible(&q, &w).unwrap());

        let q1 = PhiQuery { w: 0.1, ..q };
        let ratio = clique_upper_bound(&q1).unwrap().value / clique_upper_bound(&q).unwrap().value;
        assert!(close(ratio, 1.1f64.powf(2.0 / 3.0), 1e-12));
    }

    #[test]
    fn clique_witness_enlarges_when_k3_falls_short() {
        // (6 · 4.5)^{1/3} = 3, but E_{K_3}(T) < 4.5 at n = 20, p = 0.1
        let q = PhiQuery::new(20, 0.1, 4.5, 1.0, 0.0).unwrap();
        let params = ErParams::with_p(20, 0.1).unwrap();
        assert!(clique_expectation(3, &params) < 4.5);
        assert!(clique_expectation(4, &params) >= 4.5);
        let r = clique_upper_bound(&q).unwrap();
        assert_eq!(r.witness.unwrap().edge_count(), 6);
    }

    #[test]
    fn clique_that_does_not_fit_is_flagged() {
        let q = PhiQuery::new(5, 0.1, 1000.0, 1.0, 0.0).unwrap();
        let r = clique_upper_bound(&q).unwrap();
        assert!(r.witness_does_not_fit);
        assert!(r.witness.is_none());
    }

    #[test]
    fn edge_lower_examples() {
        let q = PhiQuery::new(100, 0.01, 36.0, 1.0, 0.0).unwrap();
        assert!(close(edge_lower_bound(&q).unwrap().value, clique_upper_bound(&q).unwrap().value, 1e-12));
        let q1 = PhiQuery { w: 1.0, ..q };
        assert_eq!(edge_lower_bound(&q1).unwrap().value, 0.0);
        let q2 = PhiQuery::new(1000, 0.02, 100.0, 2.0, 0.1).unwrap();
        let expected = 0.5 * (6.0f64 * 2.0 * 0.9 * 100.0).powf(2.0 / 3.0) * 50f64.ln();
        assert!(close(edge_lower_bound(&q2).unwrap().value, expected, 1e-12));
    }

    #[test]
    fn homogeneity_under_k_scaling() {
        let q = PhiQuery::new(1000, 0.01, 10.0, 1.5, 0.2).unwrap();
        let q8 = PhiQuery { k: 80.0, ..q };
        for f in [clique_upper_bound, edge_lower_bound] {
            assert!(close(f(&q8).unwrap().value, 4.0 * f(&q).unwrap().value, 1e-12));
        }
    }

    #[test]
    fn phi_exact_examples() {
        // empty graph already feasible
        let q = PhiQuery::new(5, 0.5, 1.0, 1.0, 0.0).unwrap();
        let r = phi_exact(&q, PHI_EXACT_CAP).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.witness.unwrap().edge_count(), 0);

        let q = PhiQuery::new(4, 0.5, 4.0, 1.0, 0.0).unwrap();
        let r = phi_exact(&q, PHI_EXACT_CAP).unwrap();
        assert_eq!(r.witness.as_ref().unwrap(), &Graph::complete(4));
        assert!(close(r.value, 6.0 * 2f64.ln(), 1e-12));

        let q = PhiQuery::new(4, 0.5, 5.0, 1.0, 0.0).unwrap();
        assert!(matches!(phi_exact(&q, PHI_EXACT_CAP), Err(Error::Infeasible)));
        let q = PhiQuery::new(8, 0.5, 5.0, 1.0, 0.0).unwrap();
        assert!(phi_exact(&q, PHI_EXACT_CAP).is_err());
    }

    /// Exhaustive oracle independent of the level-by-level search.
    fn phi_brute(q: &PhiQuery) -> Option<usize> {
        let m = q.n * (q.n - 1) / 2;
        (0u64..1 << m)
            .filter(|&mask| {
                let g = crate::small::graph_from_mask(q.n, mask);
                expected_triangles_conditional(&g, &ErParams::with_p(q.n, q.p).unwrap()).unwrap() >= q.target()
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
    }

    #[test]
    fn phi_exact_matches_brute_force_and_sits_below_clique() {
        for (n, p, k) in [(5, 0.2, 2.0), (5, 0.4, 6.0), (6, 0.1, 3.0), (6, 0.3, 9.5), (6, 0.05, 19.0)] {
            let q = PhiQuery::new(n, p, k, 1.0, 0.0).unwrap();
            let exact = phi_exact(&q, PHI_EXACT_CAP).unwrap();
            let edges = exact.witness.as_ref().unwrap().edge_count();
            assert_eq!(Some(edges), phi_brute(&q));
            assert!(witness_is_feasible(&q, exact.witness.as_ref().unwrap()).unwrap());
            let clique = clique_upper_bound(&q).unwrap();
            if let Some(v) = clique.witness_value {
                assert!(exact.value <= v + 1e-12);
            }
            // every exact witness respects T ≤ (2e)^{3/2}/6
            let t = crate::graph::triangle_stats(exact.witness.as_ref().unwrap()).total as f64;
            assert!(edges as f64 >= min_edges_for_triangles(t) - 1e-9);
        }
    }

    #[test]
    fn correction_term_examples() {
        let base = CorrectionInputs { n: 1e4, p: 1e-3, k: 1e6, a: 1.0, w: 0.1, c: 1.0, c_prime: 6.0, m: None };
        let t = correction_terms(&base).unwrap();
        assert!(close(t.t_n, 0.01 * 100.0 / (3.0 * 10f64.ln()), 1e-12));
        assert!(close(t.t_n, 0.14476482730108395, 1e-12));
        assert!(close(ErParams::eps(8.0), 0.25, 1e-15));

        // the first ψ term vanishes as k grows
        let big_k = correction_terms(&CorrectionInputs { k: 1e30, ..base }).unwrap();
        let limit = (6.0 * 0.1f64.powi(-5) * (1e3f64.ln()).powi(3)).ln() / 1e3f64.ln();
        assert!(close(big_k.psi_n, limit, 1e-6));

        assert!(correction_terms(&CorrectionInputs { w: 0.0, ..base }).is_err());
        let with_m = correction_terms(&CorrectionInputs { m: Some(100.0), ..base }).unwrap();
        assert!(with_m.big_psi_n.is_some());
        assert!(close(t.log_xi_n, (0.5 * 6f64.powf(2.0 / 3.0) - 1.0 / 3.0) * 1e4 * 1e3f64.ln(), 1e-12));
    }

    #[test]
    fn rate_examples() {
        assert!(close(rate_triangles(36.0, 0.01), 82.89306334778564, 1e-12));
        assert_eq!(rate_vt(3.0), 0.0);
        assert!(close(rate_vt(3.0 * std::f64::consts::E), std::f64::consts::E, 1e-14));
    }
}
