//! Seeds, cores and near-cliques.
//!
//! A seed is a planted graph with (S1) `E_G(T) ≥ (a−w)k` and (S2)
//! `e_G ≤ C a w^{-1} k^{2/3} log(1/p)`. Greedily deleting edges whose removal
//! costs less than `t = w² k^{1/3} / (C a log(1/p))` expected triangles turns
//! a seed into a core: (C1) `E ≥ (a−2w)k`, (C2) the same edge budget, and
//! (C3) every edge drop is at least `t`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conditional::triple_profile;
use crate::error::{invalid, Result};
use crate::graph::{triangle_stats, ErParams, Graph};
use crate::variational::{big_psi, threshold_t};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreParams {
    pub a: f64,
    pub k: f64,
    pub w: f64,
    pub c: f64,
    pub er: ErParams,
}

impl CoreParams {
    pub fn new(a: f64, k: f64, w: f64, c: f64, er: ErParams) -> Result<Self> {
        if !(a > 0.0 && k > 0.0 && w > 0.0 && c > 0.0) {
            return Err(invalid("a, k, w and C must be positive"));
        }
        if !(er.p() > 0.0 && er.p() < 1.0) {
            return Err(invalid("edge probability must lie in (0, 1)"));
        }
        Ok(Self { a, k, w, c, er })
    }

    /// Minimal expected-triangle drop per core edge.
    pub fn t_n(&self) -> f64 {
        threshold_t(self.k, self.a, self.w, self.c, self.er.p())
    }

    /// Edge budget `C a w^{-1} k^{2/3} log(1/p)` shared by (S2) and (C2).
    pub fn edge_budget(&self) -> f64 {
        self.c * self.a / self.w * self.k.powf(2.0 / 3.0) * self.er.log_inv_p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedCheck {
    pub expected: f64,
    pub edges: usize,
    pub s1_threshold: f64,
    pub budget: f64,
    pub s1: bool,
    pub s2: bool,
}

impl SeedCheck {
    pub fn is_seed(&self) -> bool {
        self.s1 && self.s2
    }
}

pub fn is_seed(g: &Graph, params: &CoreParams) -> Result<SeedCheck> {
    let expected = triple_profile(g, params.er.n())?.expected_triangles(params.er.p());
    let s1_threshold = (params.a - params.w) * params.k;
    let budget = params.edge_budget();
    Ok(SeedCheck {
        expected,
        edges: g.edge_count(),
        s1_threshold,
        budget,
        s1: expected >= s1_threshold,
        s2: g.edge_count() as f64 <= budget,
    })
}

/// One greedy deletion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deletion {
    pub u: usize,
    pub v: usize,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreCertificate {
    #[serde(skip)]
    pub graph: Graph,
    /// Core edges, lexicographic.
    pub edges: Vec<(usize, usize)>,
    pub m: usize,
    pub expected: f64,
    pub input_expected: f64,
    pub t_n: f64,
    pub budget: f64,
    pub c1_threshold: f64,
    /// Smallest edge drop in the core; `None` for an edgeless core.
    pub min_drop: Option<f64>,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub input_seed: SeedCheck,
    pub deletions: Vec<Deletion>,
    /// `E_G(T) − E_{G*}(T)`.
    pub expected_loss: f64,
    /// `E_G(T) − E_{G*}(T) < s·t_n` (trivially true when nothing was deleted).
    pub loss_below_steps_times_t: bool,
    /// `s·t_n ≤ w k`.
    pub steps_times_t_below_wk: bool,
}

impl CoreCertificate {
    pub fn is_core(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Expected-triangle drop of every edge of `g`, lexicographic.
fn edge_drops(g: &Graph, n: usize, p: f64) -> Result<Vec<(usize, usize, f64)>> {
    let prof = triple_profile(g, n)?;
    let e = prof.expected_triangles(p);
    Ok(g.edges()
        .map(|(u, v)| (u, v, e - prof.without_edge(g, n, u, v).expected_triangles(p)))
        .collect())
}

/// Greedy seed-to-core reduction: each round deletes the lexicographically
/// smallest edge whose drop is below `t_n`, until none remains.
pub fn extract_core(g: &Graph, params: &CoreParams) -> Result<CoreCertificate> {
    let n = params.er.n();
    let p = params.er.p();
    let t_n = params.t_n();
    let input_seed = is_seed(g, params)?;
    let mut core = g.clone();
    let mut prof = triple_profile(&core, n)?;
    let mut deletions = Vec::new();
    loop {
        let e = prof.expected_triangles(p);
        let found = core.edges().find_map(|(u, v)| {
            let after = prof.without_edge(&core, n, u, v);
            let drop = e - after.expected_triangles(p);
            (drop < t_n).then_some((u, v, drop, after))
        });
        match found {
            Some((u, v, drop, after)) => {
                core.remove_edge(u, v);
                prof = after;
                deletions.push(Deletion { u, v, drop });
            }
            None => break,
        }
    }
    let expected = prof.expected_triangles(p);
    let drops = edge_drops(&core, n, p)?;
    let min_drop = drops.iter().map(|d| d.2).min_by(f64::total_cmp);
    let c1_threshold = (params.a - 2.0 * params.w) * params.k;
    let budget = params.edge_budget();
    let s = deletions.len() as f64;
    let expected_loss = input_seed.expected - expected;
    Ok(CoreCertificate {
        edges: core.edges().collect(),
        m: core.edge_count(),
        expected,
        input_expected: input_seed.expected,
        t_n,
        budget,
        c1_threshold,
        min_drop,
        c1: expected >= c1_threshold,
        c2: core.edge_count() as f64 <= budget,
        c3: min_drop.is_none_or(|d| d >= t_n),
        input_seed,
        deletions,
        expected_loss,
        loss_below_steps_times_t: if s == 0.0 { expected_loss == 0.0 } else { expected_loss < s * t_n },
        steps_times_t_below_wk: s * t_n <= params.w * params.k,
        graph: core,
    })
}

/// Upper bound on the log-number of `m`-cores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreCountBound {
    /// `m · Ψ · log(1/p)`, with `Ψ` clamped at zero.
    pub log_count: f64,
    /// Unclamped `Ψ`.
    pub psi: f64,
    pub clamped: bool,
    /// `t_n > λ + λ²`, the regime in which every core edge has both
    /// endpoints of degree at least `t_n − λ − λ²`.
    pub valid_regime: bool,
}

pub fn core_count_bound(m: f64, n: f64, t_n: f64, er: &ErParams, c_prime: f64) -> Result<CoreCountBound> {
    if !(m > 0.0 && n >= 1.0 && t_n > 0.0 && c_prime > 0.0) {
        return Err(invalid("need m > 0, n >= 1, t_n > 0 and C' > 0"));
    }
    let lambda = er.lambda();
    let psi = big_psi(n, er.p(), t_n, m, c_prime);
    let clamped = psi < 0.0;
    Ok(CoreCountBound {
        log_count: m * psi.max(0.0) * er.log_inv_p(),
        psi,
        clamped,
        valid_regime: t_n > lambda + lambda * lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedFailureBound {
    /// `(1 − w/a)^ℓ`.
    pub bound: f64,
    pub log_bound: f64,
    /// `log ξ = [½(6a)^{2/3} − C/3] k^{2/3} log(1/p)`.
    pub log_xi: f64,
}

/// Bound on `P(T ≥ ak, no seed)` for admissible `ℓ ≤ (Ca/3) w^{-1} k^{2/3} log(1/p)`.
pub fn seed_failure_bound(a: f64, w: f64, k: f64, p: f64, c: f64, ell: u64) -> Result<SeedFailureBound> {
    if !(w > 0.0 && w < a) {
        return Err(invalid("need 0 < w < a"));
    }
    if !(p > 0.0 && p < 1.0 && k > 0.0 && c > 0.0) {
        return Err(invalid("need 0 < p < 1, k > 0, C > 0"));
    }
    let log_inv_p = -p.ln();
    let ell_max = c * a / 3.0 / w * k.powf(2.0 / 3.0) * log_inv_p;
    if ell as f64 > ell_max {
        return Err(invalid(format!("ell = {ell} exceeds the admissible {ell_max}")));
    }
    let log_bound = ell as f64 * (-w / a).ln_1p();
    Ok(SeedFailureBound {
        bound: log_bound.exp(),
        log_bound,
        log_xi: (0.5 * (6.0 * a).powf(2.0 / 3.0) - c / 3.0) * k.powf(2.0 / 3.0) * log_inv_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearCliqueReport {
    pub delta: f64,
    pub m: usize,
    pub edges: usize,
    /// Minimum degree over non-isolated vertices (0 for an edgeless graph).
    pub min_degree: usize,
    /// `(1 − 4 δ^{1/2}) (2 e_G)^{1/2}`.
    pub threshold: f64,
    pub passes: bool,
}

fn min_degree_threshold(delta: f64, edges: usize) -> f64 {
    (1.0 - 4.0 * delta.sqrt()) * (2.0 * edges as f64).sqrt()
}

/// `(δ, m)`-clique test; `m` defaults to the edge count of `g`.
pub fn near_clique_check(g: &Graph, delta: f64, m: Option<usize>) -> Result<NearCliqueReport> {
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let edges = g.edge_count();
    let m = m.unwrap_or(edges);
    let min_degree = g.support().iter().map(|&v| g.degree(v)).min().unwrap_or(0);
    let threshold = min_degree_threshold(delta, edges);
    Ok(NearCliqueReport {
        delta,
        m,
        edges,
        min_degree,
        threshold,
        passes: edges > 0 && edges == m && min_degree as f64 >= threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelingReport {
    /// Surviving subgraph (same vertex labels), if non-empty.
    pub subgraph: Option<Graph>,
    /// Threshold computed from the original edge count.
    pub threshold: f64,
    /// Vertices removed, in order.
    pub peeled: Vec<usize>,
    /// `δ ≥ e_G^{-1/2}`.
    pub delta_in_regime: bool,
    /// `|Emb(K_3, G)| = 6T ≥ (1 − δ)(2 e_G)^{3/2}`.
    pub embedding_condition: bool,
    /// Both conditions hold but peeling emptied the graph.
    pub guarantee_violated: bool,
}

/// Repeatedly removes a minimum-degree vertex (smallest label on ties) while
/// the minimum degree is below `(1 − 4√δ)(2 e_G)^{1/2}`, `e_G` being the
/// original edge count.
pub fn high_min_degree_subgraph(g: &Graph, delta: f64) -> Result<PeelingReport> {
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let e = g.edge_count();
    let threshold = min_degree_threshold(delta, e);
    let mut degree: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut alive = vec![false; g.n()];
    let mut queue = BTreeSet::new();
    for v in g.support() {
        alive[v] = true;
        queue.insert((degree[v], v));
    }
    let mut peeled = Vec::new();
    while let Some(&(d, v)) = queue.first() {
        if d as f64 >= threshold {
            break;
        }
        queue.pop_first();
        alive[v] = false;
        peeled.push(v);
        for &w in g.neighbors(v) {
            if alive[w] {
                queue.remove(&(degree[w], w));
                degree[w] -= 1;
                queue.insert((degree[w], w));
            }
        }
    }
    let remaining = g.induced(&alive);
    let subgraph = (remaining.edge_count() > 0).then_some(remaining);
    let t = triangle_stats(g).total as f64;
    let delta_in_regime = e > 0 && delta >= (e as f64).powf(-0.5);
    let embedding_condition = e > 0 && 6.0 * t >= (1.0 - delta) * (2.0 * e as f64).powf(1.5);
    Ok(PeelingReport {
        guarantee_violated: delta_in_regime && embedding_condition && subgraph.is_none(),
        subgraph,
        threshold,
        peeled,
        delta_in_regime,
        embedding_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditional::expected_triangles_conditional;

    fn k15_params() -> CoreParams {
        // K_15 carries 455 triangles; (a − w)k = 427.5 and the budget is large
        CoreParams::new(1.0, 450.0, 0.05, 1.0, ErParams::new(1000, 1.0).unwrap()).unwrap()
    }

    fn clique(n: usize, r: usize) -> Graph {
        Graph::empty(n).with_subgraph(&Graph::complete(r), 0)
    }

    #[test]
    fn clique_is_seed_and_empty_is_not() {
        let params = k15_params();
        assert!(is_seed(&clique(1000, 15), &params).unwrap().is_seed());
        let empty = is_seed(&Graph::empty(1000), &params).unwrap();
        assert!(!empty.s1 && empty.s2);
        // K_14 has 364 triangles, short of 427.5
        let k14 = is_seed(&clique(1000, 14), &params).unwrap();
        assert!(!k14.s1 && k14.s2);
    }

    #[test]
    fn core_of_a_core_is_itself() {
        let params = k15_params();
        let cert = extract_core(&clique(1000, 15), &params).unwrap();
        assert!(cert.deletions.is_empty());
        assert_eq!(cert.m, 105);
        assert!(cert.is_core());
        let again = extract_core(&cert.graph, &params).unwrap();
        assert_eq!(again.graph, cert.graph);
    }

    #[test]
    fn seed_with_hanging_edges_reduces_to_clique() {
        let params = k15_params();
        let mut g = clique(1000, 15);
        for (u, v) in [(0, 20), (20, 21), (21, 22), (3, 30), (40, 41)] {
            g.add_edge(u, v);
        }
        let seed = is_seed(&g, &params).unwrap();
        assert!(seed.is_seed());
        let cert = extract_core(&g, &params).unwrap();
        // a pendant at a clique vertex costs about 14p > t_n and stays
        let mut expected = clique(1000, 15);
        expected.add_edge(0, 20);
        expected.add_edge(3, 30);
        assert_eq!(cert.graph, expected);
        let order: Vec<_> = cert.deletions.iter().map(|d| (d.u, d.v)).collect();
        // (20, 21) only qualifies once (21, 22) is gone, so the scan restarts
        assert_eq!(order, vec![(21, 22), (20, 21), (40, 41)]);
        assert!(cert.is_core());
        assert!(cert.loss_below_steps_times_t && cert.steps_times_t_below_wk);
    }

    #[test]
    fn isolated_edges_vanish() {
        let er = ErParams::new(100, 1.0).unwrap();
        let params = CoreParams::new(1.0, 1e6, 1.0, 0.001, er).unwrap();
        let g = Graph::from_edges(100, (0..10).map(|i| (2 * i, 2 * i + 1))).unwrap();
        let cert = extract_core(&g, &params).unwrap();
        assert_eq!(cert.m, 0);
        assert!(cert.c3);
        assert_eq!(cert.min_drop, None);
    }

    #[test]
    fn drops_are_exact_differences() {
        let er = ErParams::new(60, 2.0).unwrap();
        let g = crate::graph::sample_er(&ErParams::new(60, 8.0).unwrap(), 3);
        for (u, v, drop) in edge_drops(&g, 60, er.p()).unwrap() {
            let mut h = g.clone();
            h.remove_edge(u, v);
            let direct = expected_triangles_conditional(&g, &er).unwrap() - expected_triangles_conditional(&h, &er).unwrap();
            assert!((drop - direct).abs() < 1e-10);
            // drop = (1-p)(common + one·p + none·p²) with one, none counted over third vertices
            assert!(drop > 0.0);
        }
    }

    #[test]
    fn core_count_bound_examples() {
        let er = ErParams::new(10_000, 1.0).unwrap();
        let b = core_count_bound(100.0, 1e4, 10.0, &er, 6.0).unwrap();
        let expected = 100.0 * (0.6 * 1e4f64.ln() + 6f64.ln());
        assert!((b.log_count - expected).abs() < 1e-9 * expected);
        assert!(b.valid_regime);
        let b2 = core_count_bound(200.0, 1e4, 10.0, &er, 6.0).unwrap();
        assert!(b2.log_count > 2.0 * b.log_count);
        let huge_t = core_count_bound(100.0, 1e4, 1e9, &er, 6.0).unwrap();
        assert!(huge_t.clamped && huge_t.log_count == 0.0);
        let small_t = core_count_bound(100.0, 1e4, 1.5, &er, 6.0).unwrap();
        assert!(!small_t.valid_regime);
    }

    #[test]
    fn seed_failure_examples() {
        let b = seed_failure_bound(1.0, 0.1, 8.0, 0.01, 6.0, 100).unwrap();
        assert!((b.bound - 0.9f64.powi(100)).abs() < 1e-18);
        assert!((b.bound - 2.6561398887587544e-5).abs() < 1e-15);
        assert_eq!(seed_failure_bound(1.0, 0.1, 8.0, 0.01, 6.0, 0).unwrap().bound, 1.0);
        let near = seed_failure_bound(1.0, 1.0 - 1e-12, 8.0, 0.01, 6.0, 10).unwrap();
        assert!(near.bound < 1e-100);
        assert!(seed_failure_bound(1.0, 0.1, 8.0, 0.01, 6.0, 10_000).is_err());
        assert!(seed_failure_bound(1.0, 1.5, 8.0, 0.01, 6.0, 1).is_err());
    }

    #[test]
    fn near_clique_examples() {
        for r in 3..12usize {
            for delta in [1e-4, 0.01, 0.05, 0.3] {
                let threshold = (1.0 - 4.0 * f64::sqrt(delta)) * ((r * (r - 1)) as f64).sqrt();
                let rep = near_clique_check(&Graph::complete(r), delta, None).unwrap();
                assert_eq!(rep.min_degree, r - 1);
                assert_eq!(rep.passes, (r - 1) as f64 >= threshold, "r={r} delta={delta}");
            }
            assert!(near_clique_check(&Graph::complete(r), 0.01, None).unwrap().passes);
        }
        let path = Graph::from_edges(20, (0..19).map(|i| (i, i + 1))).unwrap();
        assert!(!near_clique_check(&path, 0.001, None).unwrap().passes);

        for r in [4usize, 6, 8, 10] {
            let mut g = Graph::complete(r);
            for i in 0..r / 2 {
                g.remove_edge(2 * i, 2 * i + 1);
            }
            for delta in [1e-4, 1e-3, 4e-3, 0.01] {
                let threshold = (1.0 - 4.0 * f64::sqrt(delta)) * ((r * (r - 2)) as f64).sqrt();
                let rep = near_clique_check(&g, delta, None).unwrap();
                assert_eq!(rep.passes, (r - 2) as f64 >= threshold, "r={r} delta={delta}");
            }
        }
        assert!(!near_clique_check(&Graph::complete(5), 0.01, Some(11)).unwrap().passes);
    }

    #[test]
    fn peeling_examples() {
        let rep = high_min_degree_subgraph(&Graph::complete(12), 0.001).unwrap();
        assert_eq!(rep.subgraph.unwrap(), Graph::complete(12));

        let mut g = Graph::empty(40).with_subgraph(&Graph::complete(20), 0);
        for i in 0..10 {
            g.add_edge(i, 20 + i);
        }
        let rep = high_min_degree_subgraph(&g, 0.001).unwrap();
        assert_eq!(rep.subgraph.as_ref().unwrap(), &Graph::empty(40).with_subgraph(&Graph::complete(20), 0));
        assert_eq!(rep.peeled, (20..30).collect::<Vec<_>>());
        let sub = rep.subgraph.unwrap();
        let min_deg = sub.support().iter().map(|&v| sub.degree(v)).min().unwrap();
        assert!(min_deg as f64 >= rep.threshold);

        let cycle = Graph::from_edges(30, (0..30).map(|i| (i, (i + 1) % 30))).unwrap();
        let rep = high_min_degree_subgraph(&cycle, 0.001).unwrap();
        assert!(rep.subgraph.is_none());
        assert!(!rep.embedding_condition && !rep.guarantee_violated);
    }
}
