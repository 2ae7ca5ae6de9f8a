//! Simple undirected graphs on `{0..n-1}`, Erdős–Rényi sampling and exact
//! triangle statistics.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;

/// Parameters of `G(n, p)` with `p = λ / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErParams {
    n: usize,
    lambda: f64,
    p: f64,
}

impl ErParams {
    /// Sparse parametrisation `p = λ / n`; requires `0 ≤ λ < n`.
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !lambda.is_finite() || lambda < 0.0 || lambda >= n as f64 {
            return Err(invalid(format!("lambda must lie in [0, n), got {lambda} for n = {n}")));
        }
        Ok(Self { n, lambda, p: lambda / n as f64 })
    }

    /// Direct edge probability, `p ∈ [0, 1]`. Used for dense test cases
    /// (e.g. `p = 1`) that the sparse parametrisation cannot express.
    pub fn with_p(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { n, lambda: p * n as f64, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `log(1/p)`.
    pub fn log_inv_p(&self) -> f64 {
        -self.p.ln()
    }

    /// `ε = k^{-2/3}`.
    pub fn eps(k: f64) -> f64 {
        k.powf(-2.0 / 3.0)
    }
}

/// Simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], edges: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|v| (0..n).filter(|&w| w != v).collect()).collect();
        Self { adj, edges: n * n.saturating_sub(1) / 2 }
    }

    /// Builds a graph from an edge iterator; duplicate edges are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            g.check_pair(u, v)?;
            if !g.add_edge(u, v) {
                return Err(invalid(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u].binary_search(&v).is_ok()
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        for x in [u, v] {
            if x >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(())
    }

    /// Inserts `{u, v}`; returns `false` if it was already present.
    ///
    /// Panics on self-loops or out-of-range vertices.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        assert!(u != v, "self-loop at {u}");
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.adj[u].insert(i, v);
                let j = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(j, u);
                self.edges += 1;
                true
            }
        }
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        match self.adj[u].binary_search(&v) {
            Err(_) => false,
            Ok(i) => {
                self.adj[u].remove(i);
                let j = self.adj[v].binary_search(&u).expect("adjacency is symmetric");
                self.adj[v].remove(j);
                self.edges -= 1;
                true
            }
        }
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// `|N(u) ∩ N(v)|` by sorted merge.
    pub fn common_neighbor_count(&self, u: usize, v: usize) -> usize {
        let mut count = 0;
        merge_common(&self.adj[u], &self.adj[v], |_| count += 1);
        count
    }

    /// `N(u) ∩ N(v)` in increasing order.
    pub fn common_neighbors(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        merge_common(&self.adj[u], &self.adj[v], |w| out.push(w));
        out
    }

    /// Vertices with at least one incident edge.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| !self.adj[v].is_empty()).collect()
    }

    /// Subgraph on the same vertex set keeping only edges inside `keep`.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        let mut g = Graph::empty(self.n());
        for (u, v) in self.edges() {
            if keep[u] && keep[v] {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Disjoint union placing `other` on vertices `offset..offset + other.n()`.
    pub fn with_subgraph(mut self, other: &Graph, offset: usize) -> Graph {
        for (u, v) in other.edges() {
            self.add_edge(u + offset, v + offset);
        }
        self
    }

    /// Graph whose vertex `perm[v]` plays the role of `v`.
    pub fn relabeled(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::empty(self.n());
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]);
        }
        g
    }

    /// Union with the edges of `other` (vertex sets are aligned; the result
    /// has `max(n, other.n)` vertices).
    pub fn union(&self, other: &Graph) -> Graph {
        let mut g = self.clone();
        if other.n() > g.n() {
            g.adj.resize(other.n(), Vec::new());
        }
        for (u, v) in other.edges() {
            g.add_edge(u, v);
        }
        g
    }

    /// Largest vertex label touched by an edge, if any.
    pub fn max_label(&self) -> Option<usize> {
        (0..self.n()).rev().find(|&v| !self.adj[v].is_empty())
    }

    /// Adjacency as bit masks; only valid for `n ≤ 64`.
    pub fn to_masks(&self) -> Vec<u64> {
        assert!(self.n() <= 64, "bit masks need n <= 64");
        self.adj
            .iter()
            .map(|nb| nb.iter().fold(0u64, |m, &w| m | (1 << w)))
            .collect()
    }

    /// Edge-list text: header `n m`, then one `u v` per line with `u < v`,
    /// sorted.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.n(), self.edge_count()).unwrap();
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    /// Parses the edge-list format. Blank lines and `#` comments are skipped.
    ///
    /// If a label is `>= n` but the number of distinct labels fits in `n`,
    /// labels are compacted to `0..` in increasing order.
    pub fn read_edge_list(reader: impl BufRead) -> Result<Graph> {
        let mut header: Option<(usize, usize)> = None;
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = text.split_whitespace().collect();
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            if fields.len() != 2 {
                return Err(parse_err(format!("expected two integers, found {:?}", text)));
            }
            let a: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("not a non-negative integer: {:?}", fields[0])))?;
            let b: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("not a non-negative integer: {:?}", fields[1])))?;
            match header {
                None => header = Some((a, b)),
                Some(_) => {
                    if a == b {
                        return Err(parse_err(format!("self-loop at {a}")));
                    }
                    pairs.push((line_no, a.min(b), a.max(b)));
                }
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        if pairs.len() != m {
            return Err(Error::Parse {
                line: pairs.last().map_or(1, |p| p.0),
                message: format!("header announces {m} edges, found {}", pairs.len()),
            });
        }
        let mut labels: Vec<usize> = Vec::new();
        if pairs.iter().any(|&(_, _, b)| b >= n) {
            labels = pairs.iter().flat_map(|&(_, a, b)| [a, b]).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() > n {
                let line = pairs.iter().find(|p| p.2 >= n).map_or(1, |p| p.0);
                return Err(Error::Parse {
                    line,
                    message: format!("{} distinct labels do not fit in n = {n}", labels.len()),
                });
            }
        }
        let relabel = |x: usize| if labels.is_empty() { x } else { labels.binary_search(&x).unwrap() };
        let mut g = Graph::empty(n);
        for (line, a, b) in pairs {
            if !g.add_edge(relabel(a), relabel(b)) {
                return Err(Error::Parse { line, message: format!("duplicate edge ({a}, {b})") });
            }
        }
        Ok(g)
    }
}

fn merge_common(a: &[usize], b: &[usize], mut f: impl FnMut(usize)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Samples `G(n, p)` using geometric skips over the pairs `(w, v)`, `w < v`,
/// visited in order of `v` then `w`. Uses stream 0 of `seed`.
pub fn sample_er(params: &ErParams, seed: u64) -> Graph {
    sample_er_stream(params, seed, 0)
}

pub fn sample_er_stream(params: &ErParams, seed: u64, stream: u64) -> Graph {
    let n = params.n();
    let p = params.p();
    if p <= 0.0 || n < 2 {
        return Graph::empty(n);
    }
    if p >= 1.0 {
        return Graph::complete(n);
    }
    let mut rng = stream_rng(seed, stream);
    let mut g = Graph::empty(n);
    let log_q = (1.0 - p).ln();
    let (mut v, mut w): (usize, i64) = (1, -1);
    while v < n {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        w += 1 + if skip.is_finite() { skip.min(1e15) as i64 } else { 0 };
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            let u = w as usize;
            // pairs arrive in an order that keeps adjacency lists sorted
            g.adj[u].push(v);
            g.adj[v].push(u);
            g.edges += 1;
        }
    }
    g
}

/// Triangle count `T`, per-vertex triangle memberships and `V_T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleStats {
    pub total: u64,
    pub per_vertex: Vec<u64>,
    pub vt: usize,
}

impl TriangleStats {
    pub fn empty(n: usize) -> Self {
        Self { total: 0, per_vertex: vec![0; n], vt: 0 }
    }
}

/// Exact triangle statistics: every edge `{u, v}` with `u < v` closes
/// `|N(u) ∩ N(v)|` triangles; the ones with apex `w > v` are counted once.
pub fn triangle_stats(g: &Graph) -> TriangleStats {
    let mut stats = TriangleStats::empty(g.n());
    for (u, v) in g.edges() {
        merge_common(g.neighbors(u), g.neighbors(v), |w| {
            if w > v {
                stats.total += 1;
                stats.per_vertex[u] += 1;
                stats.per_vertex[v] += 1;
                stats.per_vertex[w] += 1;
            }
        });
    }
    stats.vt = stats.per_vertex.iter().filter(|&&c| c > 0).count();
    stats
}

/// Counts of `K_2`, `K_{1,2}` and `K_3` copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphCounts {
    pub edges: u64,
    pub cherries: u64,
    pub triangles: u64,
}

pub fn subgraph_counts(g: &Graph) -> SubgraphCounts {
    let cherries = (0..g.n())
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    SubgraphCounts { edges: g.edge_count() as u64, cherries, triangles: triangle_stats(g).total }
}

/// Outcome of a single edge toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToggleDelta {
    pub added: bool,
    pub triangles: i64,
    pub vt: i64,
}

/// Change in `(T, V_T)` if `{u, v}` were toggled, without applying it.
pub fn toggle_delta(g: &Graph, stats: &TriangleStats, u: usize, v: usize) -> ToggleDelta {
    let added = !g.has_edge(u, v);
    let mut common = 0i64;
    let mut vt = 0i64;
    merge_common(g.neighbors(u), g.neighbors(v), |w| {
        common += 1;
        let c = stats.per_vertex[w];
        if added && c == 0 {
            vt += 1;
        } else if !added && c == 1 {
            vt -= 1;
        }
    });
    if common > 0 {
        for x in [u, v] {
            let c = stats.per_vertex[x] as i64;
            if added && c == 0 {
                vt += 1;
            } else if !added && c == common {
                vt -= 1;
            }
        }
    }
    ToggleDelta { added, triangles: if added { common } else { -common }, vt }
}

/// Flips `{u, v}` and updates `stats` by scanning `N(u) ∩ N(v)` only.
pub fn toggle_edge(g: &mut Graph, stats: &mut TriangleStats, u: usize, v: usize) -> ToggleDelta {
    assert!(u != v && u < g.n() && v < g.n(), "invalid pair ({u}, {v})");
    let added = !g.has_edge(u, v);
    if !added {
        g.remove_edge(u, v);
    }
    let mut delta = ToggleDelta { added, triangles: 0, vt: 0 };
    let bump = |x: usize, stats: &mut TriangleStats, delta: &mut ToggleDelta| {
        let c = &mut stats.per_vertex[x];
        if added {
            if *c == 0 {
                delta.vt += 1;
            }
            *c += 1;
        } else {
            *c -= 1;
            if *c == 0 {
                delta.vt -= 1;
            }
        }
    };
    for &w in g.common_neighbors(u, v).iter() {
        delta.triangles += if added { 1 } else { -1 };
        bump(u, stats, &mut delta);
        bump(v, stats, &mut delta);
        bump(w, stats, &mut delta);
    }
    if added {
        g.add_edge(u, v);
    }
    stats.total = (stats.total as i64 + delta.triangles) as u64;
    stats.vt = (stats.vt as i64 + delta.vt) as usize;
    delta
}

/// Summary emitted by the JSON stats writer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub edges: usize,
    pub triangles: u64,
    pub vt: usize,
}

impl StatsSummary {
    pub fn of(g: &Graph) -> Self {
        let stats = triangle_stats(g);
        Self { n: g.n(), edges: g.edge_count(), triangles: stats.total, vt: stats.vt }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}
