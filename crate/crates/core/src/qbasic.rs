//! q-basic graphs: graphs with `V_T = q` in which every edge deletion lowers
//! `V_T`. Extraction, the three-part vertex decomposition with checkable
//! witnesses, counting bounds and the entropy minimization behind them.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::graph::{toggle_delta, toggle_edge, triangle_stats, Graph};

/// Whether deleting `{u, v}` leaves `V_T` unchanged.
fn deletable(g: &Graph, stats: &crate::graph::TriangleStats, u: usize, v: usize) -> bool {
    toggle_delta(g, stats, u, v).vt == 0
}

/// First edge (lexicographically) whose deletion keeps `V_T`, if any.
pub fn qbasic_violation(g: &Graph) -> Option<(usize, usize)> {
    let stats = triangle_stats(g);
    g.edges().find(|&(u, v)| deletable(g, &stats, u, v))
}

pub fn is_qbasic(g: &Graph) -> bool {
    qbasic_violation(g).is_none()
}

/// Deletes edges in lexicographic order whenever `V_T` stays put. One pass
/// suffices: an edge whose deletion lowers `V_T` keeps that property once
/// other `V_T`-preserving deletions have happened.
pub fn extract_qbasic(g: &Graph) -> Graph {
    let mut h = g.clone();
    let mut stats = triangle_stats(&h);
    let edges: Vec<_> = h.edges().collect();
    for (u, v) in edges {
        if deletable(&h, &stats, u, v) {
            toggle_edge(&mut h, &mut stats, u, v);
        }
    }
    h
}

/// Vertex partition of a q-basic graph. `coneighbors[i]` is adjacent to both
/// ends of `matching[i]`; `witnesses[i]` is an edge whose ends are both
/// adjacent to `v3[i]`, lying inside `v1` or between `v1` and `v2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QBasicDecomposition {
    pub v1: Vec<usize>,
    pub triangles: Vec<[usize; 3]>,
    pub v2: Vec<usize>,
    pub matching: Vec<(usize, usize)>,
    pub coneighbors: Vec<usize>,
    pub v3: Vec<usize>,
    pub witnesses: Vec<(usize, usize)>,
}

impl QBasicDecomposition {
    /// `(ℓ1, ℓ2, ℓ3)`.
    pub fn configuration(&self) -> (usize, usize, usize) {
        (self.v1.len(), self.v2.len(), self.v3.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serializes")
    }
}

const UNASSIGNED: u8 = 0;
const IN_V1: u8 = 1;
const IN_V2: u8 = 2;
const IN_V3: u8 = 3;

/// Greedy decomposition: vertex-disjoint triangles in lexicographic order
/// form `v1`, a lexicographic greedy matching of the rest forms `v2`, and
/// the remaining non-isolated vertices form `v3`. Witnesses are the smallest
/// valid choices.
pub fn decompose_qbasic(g: &Graph) -> Result<QBasicDecomposition> {
    if let Some((u, v)) = qbasic_violation(g) {
        return Err(Error::NotQBasic(u, v));
    }
    let n = g.n();
    let mut part = vec![UNASSIGNED; n];

    let mut triangles = Vec::new();
    for a in 0..n {
        for &b in g.neighbors(a).iter().filter(|&&b| b > a) {
            for c in g.common_neighbors(a, b).into_iter().filter(|&c| c > b) {
                if part[a] == UNASSIGNED && part[b] == UNASSIGNED && part[c] == UNASSIGNED {
                    part[a] = IN_V1;
                    part[b] = IN_V1;
                    part[c] = IN_V1;
                    triangles.push([a, b, c]);
                }
            }
        }
    }

    let mut matching = Vec::new();
    let mut coneighbors = Vec::new();
    for (u, v) in g.edges() {
        if part[u] == UNASSIGNED && part[v] == UNASSIGNED {
            let w = g
                .common_neighbors(u, v)
                .into_iter()
                .find(|&w| part[w] == IN_V1)
                .ok_or(Error::NotQBasic(u, v))?;
            part[u] = IN_V2;
            part[v] = IN_V2;
            matching.push((u, v));
            coneighbors.push(w);
        }
    }

    let mut v3 = Vec::new();
    let mut witnesses = Vec::new();
    for v in g.support() {
        if part[v] != UNASSIGNED {
            continue;
        }
        part[v] = IN_V3;
        let nb = g.neighbors(v);
        let witness = nb.iter().enumerate().find_map(|(i, &x)| {
            nb[i + 1..].iter().find_map(|&y| {
                let ok = g.has_edge(x, y)
                    && matches!((part[x], part[y]), (IN_V1, IN_V1) | (IN_V1, IN_V2) | (IN_V2, IN_V1));
                ok.then_some((x, y))
            })
        });
        let witness = witness.ok_or_else(|| Error::NotQBasic(v, nb.first().copied().unwrap_or(v)))?;
        v3.push(v);
        witnesses.push(witness);
    }

    let collect = |tag: u8| (0..n).filter(|&v| part[v] == tag).collect::<Vec<_>>();
    Ok(QBasicDecomposition {
        v1: collect(IN_V1),
        triangles,
        v2: collect(IN_V2),
        matching,
        coneighbors,
        v3,
        witnesses,
    })
}

/// First failed check of [`validate_decomposition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]: {}", self.field, i, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn violation(field: &'static str, index: Option<usize>, message: impl Into<String>) -> Violation {
    Violation { field, index, message: message.into() }
}

/// Checks a decomposition against `g` independently of how it was built.
pub fn validate_decomposition(g: &Graph, d: &QBasicDecomposition) -> std::result::Result<(), Violation> {
    let n = g.n();
    let mut part = vec![UNASSIGNED; n];
    for (field, set, tag) in [("v1", &d.v1, IN_V1), ("v2", &d.v2, IN_V2), ("v3", &d.v3, IN_V3)] {
        for (i, &v) in set.iter().enumerate() {
            if v >= n {
                return Err(violation(field, Some(i), format!("vertex {v} out of range")));
            }
            if part[v] != UNASSIGNED {
                return Err(violation(field, Some(i), format!("vertex {v} assigned twice")));
            }
            part[v] = tag;
        }
    }
    for v in g.support() {
        if part[v] == UNASSIGNED {
            return Err(violation("v1", None, format!("vertex {v} of the graph is in no part")));
        }
    }
    for (v, &pv) in part.iter().enumerate() {
        if pv != UNASSIGNED && g.degree(v) == 0 {
            return Err(violation("v1", None, format!("isolated vertex {v} assigned to a part")));
        }
    }
    if !d.v1.len().is_multiple_of(3) {
        return Err(violation("v1", None, "size not divisible by 3"));
    }
    if !d.v2.len().is_multiple_of(2) {
        return Err(violation("v2", None, "odd size"));
    }

    let mut covered = vec![false; n];
    for (i, t) in d.triangles.iter().enumerate() {
        let [a, b, c] = *t;
        if [a, b, c].iter().any(|&x| x >= n) || !(g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c)) {
            return Err(violation("triangles", Some(i), format!("{t:?} is not a triangle")));
        }
        for x in [a, b, c] {
            if part[x] != IN_V1 || covered[x] {
                return Err(violation("triangles", Some(i), format!("vertex {x} not a fresh v1 vertex")));
            }
            covered[x] = true;
        }
    }
    if 3 * d.triangles.len() != d.v1.len() {
        return Err(violation("triangles", None, "triangles do not cover v1"));
    }

    for (u, v) in g.edges() {
        for w in g.common_neighbors(u, v).into_iter().filter(|&w| w > v) {
            if part[u] != IN_V1 && part[v] != IN_V1 && part[w] != IN_V1 {
                return Err(violation("v1", None, format!("triangle {u} {v} {w} outside v1")));
            }
        }
    }

    if d.coneighbors.len() != d.matching.len() {
        return Err(violation("coneighbors", None, "one co-neighbor per matching edge required"));
    }
    for (i, &(u, v)) in d.matching.iter().enumerate() {
        if u >= n || v >= n || !g.has_edge(u, v) {
            return Err(violation("matching", Some(i), format!("({u}, {v}) is not an edge")));
        }
        for x in [u, v] {
            if part[x] != IN_V2 || covered[x] {
                return Err(violation("matching", Some(i), format!("vertex {x} not a fresh v2 vertex")));
            }
            covered[x] = true;
        }
        let w = d.coneighbors[i];
        if w >= n || part[w] != IN_V1 || !g.has_edge(u, w) || !g.has_edge(v, w) {
            return Err(violation("coneighbors", Some(i), format!("{w} is not a v1 co-neighbor of ({u}, {v})")));
        }
    }
    if 2 * d.matching.len() != d.v2.len() {
        return Err(violation("matching", None, "matching does not cover v2"));
    }

    if d.witnesses.len() != d.v3.len() {
        return Err(violation("witnesses", None, "one witness per v3 vertex required"));
    }
    for (i, &v) in d.v3.iter().enumerate() {
        if let Some(&w) = g.neighbors(v).iter().find(|&&w| part[w] == IN_V3) {
            return Err(violation("v3", Some(i), format!("edge ({v}, {w}) inside v3")));
        }
        let (x, y) = d.witnesses[i];
        let placed = matches!((part.get(x), part.get(y)), (Some(&IN_V1), Some(&IN_V1)) | (Some(&IN_V1), Some(&IN_V2)) | (Some(&IN_V2), Some(&IN_V1)));
        if !placed || !g.has_edge(x, y) || !g.has_edge(v, x) || !g.has_edge(v, y) {
            return Err(violation("witnesses", Some(i), format!("({x}, {y}) is not a valid witness for {v}")));
        }
    }
    Ok(())
}

/// A log-count that may be `−∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCount {
    pub log_value: f64,
    /// The count is zero.
    pub zero: bool,
}

fn ln_factorial(x: f64) -> f64 {
    ln_gamma(x + 1.0)
}

/// Log of `n^q / (3!^{ℓ1/3} (ℓ1/3)! 2!^{ℓ2/2} (ℓ2/2)! ℓ3!) · ℓ1^{ℓ2/2} (3q)^{ℓ3}`,
/// an upper bound on the number of q-basic subgraphs of `K_n` with
/// configuration `(ℓ1, ℓ2, ℓ3)`.
pub fn configuration_count_bound(n: usize, l1: usize, l2: usize, l3: usize) -> Result<LogCount> {
    if !l1.is_multiple_of(3) || !l2.is_multiple_of(2) {
        return Err(invalid("need l1 divisible by 3 and l2 even"));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let q = (l1 + l2 + l3) as f64;
    let (t, h) = ((l1 / 3) as f64, (l2 / 2) as f64);
    if l1 == 0 && l2 > 0 {
        return Ok(LogCount { log_value: f64::NEG_INFINITY, zero: true });
    }
    let coneighbor = if l2 == 0 { 0.0 } else { h * (l1 as f64).ln() };
    let witness = if l3 == 0 { 0.0 } else { l3 as f64 * (3.0 * q).ln() };
    let log_value = q * (n as f64).ln()
        - t * 6f64.ln()
        - ln_factorial(t)
        - h * 2f64.ln()
        - ln_factorial(h)
        - ln_factorial(l3 as f64)
        + coneighbor
        + witness;
    Ok(LogCount { log_value, zero: false })
}

/// `3 log(3q) + m log n − (q/3) log(q/3) + 16q`: log of the bound on the
/// number of q-basic subgraphs of `K_n` with `m` edges, with the free
/// multiplicative constant set to 1.
pub fn qbasic_edge_count_bound(n: usize, q: usize, m: usize) -> Result<f64> {
    if q == 0 || m < q || m > 3 * q {
        return Err(invalid(format!("need 1 <= q <= m <= 3q, got q = {q}, m = {m}")));
    }
    let (q, m, n) = (q as f64, m as f64, n as f64);
    Ok(3.0 * (3.0 * q).ln() + m * n.ln() - q / 3.0 * (q / 3.0).ln() + 16.0 * q)
}

/// Below this `q` the localization of the minimizer is not asserted.
pub const ENTROPY_VALIDITY_FLOOR: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySolution {
    pub q: f64,
    pub mu: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub value: f64,
    /// `|x1 + x2 + x3 − q| / q`.
    pub residual: f64,
    /// `q ≥ ENTROPY_VALIDITY_FLOOR`.
    pub localization_checked: bool,
    /// `q − q^{2/3} log q ≤ x1 ≤ q` and the value bound, when checked.
    pub localization_holds: Option<bool>,
    /// `⅓(q − q^{2/3} log q) log(⅓(q − q^{2/3} log q))`.
    pub value_lower_bound: f64,
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `⅓x1 log(⅓x1) + ½x2 log(½x2) + x3 log x3`.
pub fn entropy_objective(x1: f64, x2: f64, x3: f64) -> f64 {
    xlogx(x1 / 3.0) + xlogx(x2 / 2.0) + xlogx(x3)
}

fn stationary_point(mu: f64) -> (f64, f64, f64) {
    (3.0 * (3.0 * mu - 1.0).exp(), 2.0 * (2.0 * mu - 1.0).exp(), (mu - 1.0).exp())
}

/// Minimizes the objective on `x1 + x2 + x3 = q` through the Lagrange
/// condition `3e^{3μ−1} + 2e^{2μ−1} + e^{μ−1} = q`, solved by bisection.
pub fn minimize_entropy(q: f64) -> Result<EntropySolution> {
    if !(q >= 3.0 && q.is_finite()) {
        return Err(invalid("q must be at least 3"));
    }
    let lhs = |mu: f64| {
        let (a, b, c) = stationary_point(mu);
        a + b + c
    };
    // 3e^{3μ−1} = q already overshoots
    let mut hi = ((q / 3.0).ln() + 1.0) / 3.0;
    let mut lo = hi - 1.0;
    while lhs(lo) >= q {
        lo -= 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = if (lhs(lo) - q).abs() <= (lhs(hi) - q).abs() { lo } else { hi };
    let (x1, x2, x3) = stationary_point(mu);
    let value = entropy_objective(x1, x2, x3);
    let shifted = q - q.powf(2.0 / 3.0) * q.ln();
    let value_lower_bound = if shifted > 0.0 { xlogx(shifted / 3.0) } else { f64::NAN };
    let localization_checked = q >= ENTROPY_VALIDITY_FLOOR;
    let localization_holds =
        localization_checked.then_some(shifted <= x1 && x1 <= q && value >= value_lower_bound);
    Ok(EntropySolution {
        q,
        mu,
        x1,
        x2,
        x3,
        value,
        residual: (x1 + x2 + x3 - q).abs() / q,
        localization_checked,
        localization_holds,
        value_lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_er, ErParams};

    fn g(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn extraction_examples() {
        let path = g(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(extract_qbasic(&path).edge_count(), 0);
        let pendant = g(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert_eq!(extract_qbasic(&pendant), Graph::empty(4).with_subgraph(&Graph::complete(3), 0));
        // K_4 is not q-basic; 4 vertices need only a spanning set of triangles
        let k4 = extract_qbasic(&Graph::complete(4));
        assert_eq!(triangle_stats(&k4).vt, 4);
        assert!(is_qbasic(&k4));
        assert_eq!(k4.edge_count(), 5);
        assert_eq!(qbasic_violation(&Graph::complete(4)), Some((0, 1)));
    }

    #[test]
    fn extraction_postconditions_on_samples() {
        for seed in 0..50 {
            let h = sample_er(&ErParams::new(60, 4.0).unwrap(), seed);
            let q = triangle_stats(&h).vt;
            let b = extract_qbasic(&h);
            let s = triangle_stats(&b);
            assert_eq!(s.vt, q);
            assert!(is_qbasic(&b));
            assert!(q <= b.edge_count() && b.edge_count() <= 3 * q);
            assert!(b.edges().all(|(u, v)| b.common_neighbor_count(u, v) > 0));
            assert_eq!(extract_qbasic(&b), b);
        }
    }

    #[test]
    fn decomposition_examples() {
        let two = g(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let d = decompose_qbasic(&two).unwrap();
        assert_eq!(d.configuration(), (6, 0, 0));
        assert_eq!(d.triangles, vec![[0, 1, 2], [3, 4, 5]]);

        // bowtie: triangles 012 and 234 share vertex 2
        let bowtie = g(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]);
        let d = decompose_qbasic(&bowtie).unwrap();
        assert_eq!(d.triangles, vec![[0, 1, 2]]);
        assert_eq!(d.matching, vec![(3, 4)]);
        assert_eq!(d.coneighbors, vec![2]);
        assert!(d.v3.is_empty());
        validate_decomposition(&bowtie, &d).unwrap();

        // K_4 minus an edge keeps all four vertices in triangles
        let diamond = extract_qbasic(&Graph::complete(4));
        let d = decompose_qbasic(&diamond).unwrap();
        assert_eq!(d.configuration(), (3, 0, 1));
        validate_decomposition(&diamond, &d).unwrap();
        let (x, y) = d.witnesses[0];
        assert!(d.v1.contains(&x) && d.v1.contains(&y));

        assert!(matches!(decompose_qbasic(&Graph::complete(4)), Err(Error::NotQBasic(0, 1))));
    }

    #[test]
    fn corrupted_decompositions_are_rejected() {
        let bowtie = g(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]);
        let good = decompose_qbasic(&bowtie).unwrap();
        let mut bad = good.clone();
        bad.coneighbors[0] = 0;
        assert_eq!(validate_decomposition(&bowtie, &bad).unwrap_err().field, "coneighbors");

        let mut bad = good.clone();
        let moved = bad.v2.pop().unwrap();
        bad.v3.push(moved);
        bad.witnesses.push((0, 2));
        assert!(validate_decomposition(&bowtie, &bad).is_err());

        let mut bad = good.clone();
        bad.v3.push(5);
        bad.witnesses.push((0, 1));
        assert!(validate_decomposition(&bowtie, &bad).is_err());

        let diamond = extract_qbasic(&Graph::complete(4));
        let mut bad = decompose_qbasic(&diamond).unwrap();
        let v = bad.v3[0];
        let other = (0..4).find(|&x| x != v && !diamond.has_edge(v, x)).unwrap();
        bad.witnesses[0] = (other, bad.witnesses[0].1);
        let err = validate_decomposition(&diamond, &bad).unwrap_err();
        assert_eq!((err.field, err.index), ("witnesses", Some(0)));
    }

    #[test]
    fn configuration_bound_examples() {
        let b = configuration_count_bound(100, 3, 0, 0).unwrap();
        assert!((b.log_value - (1e6f64 / 6.0).ln()).abs() < 1e-12);
        assert!(configuration_count_bound(100, 0, 2, 0).unwrap().zero);
        // direct product for (6, 2, 1), q = 9
        let direct = 100f64.powi(9) / (36.0 * 2.0 * 2.0 * 1.0 * 1.0) * 6.0 * 27.0;
        let b = configuration_count_bound(100, 6, 2, 1).unwrap();
        assert!((b.log_value - direct.ln()).abs() < 1e-12);
        assert!(configuration_count_bound(100, 4, 0, 0).is_err());
    }

    #[test]
    fn edge_count_bound_examples() {
        let a = qbasic_edge_count_bound(50, 6, 10).unwrap();
        let b = qbasic_edge_count_bound(50, 6, 11).unwrap();
        assert!((b - a - 50f64.ln()).abs() < 1e-12);
        let single = qbasic_edge_count_bound(50, 3, 3).unwrap();
        assert!((single - (3.0 * 9f64.ln() + 3.0 * 50f64.ln() + 48.0)).abs() < 1e-12);
        assert!(qbasic_edge_count_bound(50, 3, 10).is_err());
    }

    #[test]
    fn entropy_examples() {
        for q in [3.0, 10.0, 1e3, 1e5, 1e6, 1e9] {
            let s = minimize_entropy(q).unwrap();
            assert!(s.residual <= 1e-9, "q={q}");
            assert!(s.value <= xlogx(q / 3.0) + 1e-9 * q);
            let grads = [
                (s.x1 / 3.0).ln() / 3.0 + 1.0 / 3.0 - s.mu,
                (s.x2 / 2.0).ln() / 2.0 + 0.5 - s.mu,
                s.x3.ln() + 1.0 - s.mu,
            ];
            assert!(grads.iter().all(|g| g.abs() < 1e-6));
        }
        let s = minimize_entropy(1e6).unwrap();
        assert!(s.x1 >= 862_000.0);
        assert!(s.x1 >= 1e6 - 1e4 * 1e6f64.ln());
        assert_eq!(s.localization_holds, Some(true));
        assert!(!minimize_entropy(100.0).unwrap().localization_checked);
        assert!(minimize_entropy(2.0).is_err());
    }
}
