//! Rooted neighbourhood censuses and the Poisson Galton–Watson comparison.
//!
//! The depth-`r` ball around a vertex is the subgraph induced on vertices at
//! distance at most `r`. Balls with at most [`CODE_CAP`] vertices receive an
//! exact canonical code; larger ones are counted in an overflow bucket.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{sample_er, ErParams, Graph};
use crate::rng::{derive_seed, stream_rng};
use crate::tails::{conditioned_sample, Statistic};

/// Largest neighbourhood that is canonically coded.
pub const CODE_CAP: usize = 12;
/// Default node cap for sampled Galton–Watson trees.
pub const GW_SIZE_CAP: usize = 10_000;

/// Isomorphism class of a rooted graph on at most [`CODE_CAP`] vertices:
/// the vertex count and the upper-triangle adjacency bits (row-major over
/// pairs `(i, j)`, `i < j`) of a canonical ordering with the root first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootedCode {
    pub n: u8,
    pub bits: u128,
}

impl fmt::Display for RootedCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:x}", self.n, self.bits)
    }
}

impl RootedCode {
    pub fn parse(s: &str) -> Option<Self> {
        let (n, bits) = s.split_once(':')?;
        Some(Self { n: n.parse().ok()?, bits: u128::from_str_radix(bits, 16).ok()? })
    }

    /// The coded graph; vertex 0 is the root.
    pub fn decode(&self) -> Graph {
        let n = self.n as usize;
        let mut g = Graph::empty(n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if self.bits >> k & 1 == 1 {
                    g.add_edge(i, j);
                }
                k += 1;
            }
        }
        g
    }
}

fn code_of_order(adj: &[u16], order: &[usize]) -> RootedCode {
    let n = order.len();
    let mut bits = 0u128;
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if adj[order[i]] >> order[j] & 1 == 1 {
                bits |= 1 << k;
            }
            k += 1;
        }
    }
    RootedCode { n: n as u8, bits }
}

/// Splits cells by neighbour counts into every cell until stable. Both the
/// split keys and the order of new cells depend only on the partition, so
/// the refinement commutes with relabelling.
fn refine(adj: &[u16], mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    loop {
        let masks: Vec<u16> = cells.iter().map(|c| c.iter().fold(0u16, |m, &v| m | 1 << v)).collect();
        let mut next = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| (masks.iter().map(|m| (adj[v] & m).count_ones()).collect(), v))
                .collect();
            keyed.sort();
            let mut start = 0;
            for i in 1..=keyed.len() {
                if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                    next.push(keyed[start..i].iter().map(|x| x.1).collect());
                    start = i;
                }
            }
        }
        if next.len() == cells.len() {
            return next;
        }
        cells = next;
    }
}

fn search(adj: &[u16], cells: Vec<Vec<usize>>, best: &mut Option<RootedCode>) {
    let cells = refine(adj, cells);
    let Some(target) = cells.iter().position(|c| c.len() > 1) else {
        let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
        let code = code_of_order(adj, &order);
        if best.is_none_or(|b| code < b) {
            *best = Some(code);
        }
        return;
    };
    let cell = &cells[target];
    let mut tried: Vec<usize> = Vec::new();
    for &v in cell {
        // swapping twins is an automorphism, so one representative suffices
        let twin = tried.iter().any(|&w| {
            let (a, b) = (adj[v] & !(1 << w), adj[w] & !(1 << v));
            a == b
        });
        if twin {
            continue;
        }
        tried.push(v);
        let mut split = cells.clone();
        let rest: Vec<usize> = cell.iter().copied().filter(|&x| x != v).collect();
        split.splice(target..=target, [vec![v], rest]);
        search(adj, split, best);
    }
}

/// Canonical code of a connected rooted graph given by adjacency masks, root
/// at index 0, with `dist[v]` the distance from the root.
fn canonical_code(adj: &[u16], dist: &[usize]) -> RootedCode {
    let depth = dist.iter().copied().max().unwrap_or(0);
    let cells: Vec<Vec<usize>> = (0..=depth)
        .map(|d| (0..adj.len()).filter(|&v| dist[v] == d).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    let mut best = None;
    search(adj, cells, &mut best);
    best.expect("search reaches a discrete partition")
}

/// Canonical code of the depth-`r` ball around `root`, or `None` when it
/// has more than [`CODE_CAP`] vertices.
pub fn rooted_code(g: &Graph, root: usize, r: usize) -> Option<RootedCode> {
    let mut local: Vec<usize> = vec![root];
    let mut dist = vec![0usize];
    let mut index = std::collections::HashMap::from([(root, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if dist[i] == r {
            continue;
        }
        for &w in g.neighbors(local[i]) {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(w) {
                if local.len() == CODE_CAP {
                    return None;
                }
                e.insert(local.len());
                local.push(w);
                dist.push(dist[i] + 1);
                queue.push_back(local.len() - 1);
            }
        }
    }
    let adj: Vec<u16> = local
        .iter()
        .map(|&v| g.neighbors(v).iter().filter_map(|w| index.get(w)).fold(0u16, |m, &j| m | 1 << j))
        .collect();
    Some(canonical_code(&adj, &dist))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodCensus {
    pub depth: usize,
    /// Number of roots per code.
    pub counts: BTreeMap<RootedCode, u64>,
    pub sample_size: u64,
    pub overflow: u64,
}

#[derive(Serialize, Deserialize)]
struct CensusEntry {
    code: String,
    freq: f64,
}

#[derive(Serialize, Deserialize)]
struct CensusJson {
    depth: usize,
    sample_size: u64,
    entries: Vec<CensusEntry>,
    overflow: f64,
}

impl NeighborhoodCensus {
    pub fn empty(depth: usize) -> Self {
        Self { depth, counts: BTreeMap::new(), sample_size: 0, overflow: 0 }
    }

    pub fn record(&mut self, code: Option<RootedCode>) {
        self.sample_size += 1;
        match code {
            Some(c) => *self.counts.entry(c).or_default() += 1,
            None => self.overflow += 1,
        }
    }

    pub fn merge(&mut self, other: &NeighborhoodCensus) {
        assert_eq!(self.depth, other.depth, "census depths differ");
        for (&c, &k) in &other.counts {
            *self.counts.entry(c).or_default() += k;
        }
        self.sample_size += other.sample_size;
        self.overflow += other.overflow;
    }

    pub fn freq(&self, code: &RootedCode) -> f64 {
        self.counts.get(code).copied().unwrap_or(0) as f64 / self.sample_size as f64
    }

    pub fn overflow_freq(&self) -> f64 {
        self.overflow as f64 / self.sample_size as f64
    }

    pub fn to_json(&self) -> String {
        let json = CensusJson {
            depth: self.depth,
            sample_size: self.sample_size,
            entries: self.counts.keys().map(|c| CensusEntry { code: c.to_string(), freq: self.freq(c) }).collect(),
            overflow: self.overflow_freq(),
        };
        serde_json::to_string_pretty(&json).expect("census serializes")
    }
}

fn census_of_roots(g: &Graph, r: usize, roots: &[usize]) -> NeighborhoodCensus {
    let codes: Vec<Option<RootedCode>> = roots.par_iter().map(|&v| rooted_code(g, v, r)).collect();
    let mut census = NeighborhoodCensus::empty(r);
    for c in codes {
        census.record(c);
    }
    census
}

/// Census over every vertex, or over `sample.0` vertices drawn without
/// replacement using seed `sample.1`.
pub fn neighborhood_census(g: &Graph, r: usize, sample: Option<(usize, u64)>) -> Result<NeighborhoodCensus> {
    let roots: Vec<usize> = match sample {
        None => (0..g.n()).collect(),
        Some((size, seed)) => {
            if size == 0 || size > g.n() {
                return Err(invalid("vertex sample size must lie in 1..=n"));
            }
            let mut rng = stream_rng(seed, 0);
            let mut roots = sample_indices(&mut rng, g.n(), size).into_vec();
            roots.sort_unstable();
            roots
        }
    };
    Ok(census_of_roots(g, r, &roots))
}

/// A Galton–Watson tree with `Poisson(λ)` offspring, cut at depth `r`;
/// `None` once it exceeds `cap` nodes.
pub fn sample_gw_tree(lambda: f64, r: usize, cap: usize, seed: u64, stream: u64) -> Option<Graph> {
    let mut rng = stream_rng(seed, stream);
    let poisson = (lambda > 0.0).then(|| Poisson::new(lambda).expect("positive rate"));
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut size = 1usize;
    for _ in 0..r {
        let mut next = Vec::new();
        for &parent in &frontier {
            let children = poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
            if size + children > cap {
                return None;
            }
            for c in size..size + children {
                edges.push((parent, c));
                next.push(c);
            }
            size += children;
        }
        frontier = next;
    }
    Some(Graph::from_edges(size, edges).expect("tree edges are distinct"))
}

/// Census of `samples` truncated Poisson Galton–Watson trees; tree `i` uses
/// stream `i` of `seed`.
pub fn sample_ugw_census(lambda: f64, r: usize, samples: u64, seed: u64, size_cap: usize) -> Result<NeighborhoodCensus> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be non-negative"));
    }
    let codes: Vec<Option<RootedCode>> = (0..samples)
        .into_par_iter()
        .map(|i| sample_gw_tree(lambda, r, size_cap, seed, i).and_then(|t| rooted_code(&t, 0, r)))
        .collect();
    let mut census = NeighborhoodCensus::empty(r);
    for c in codes {
        census.record(c);
    }
    Ok(census)
}

/// Exact depth-1 law of the Poisson tree: a star with `Poisson(λ)` leaves,
/// stars above the code cap going to overflow. Returned as
/// `(code, probability)` pairs plus the overflow probability.
pub fn poisson_star_law(lambda: f64) -> (Vec<(RootedCode, f64)>, f64) {
    let mut out = Vec::new();
    let mut pmf = (-lambda).exp();
    let mut total = 0.0;
    for d in 0..CODE_CAP {
        let star = Graph::from_edges(d + 1, (1..=d).map(|i| (0, i))).expect("star");
        out.push((rooted_code(&star, 0, 1).expect("fits"), pmf));
        total += pmf;
        pmf *= lambda / (d + 1) as f64;
    }
    (out, (1.0 - total).max(0.0))
}

/// `½ Σ |f1 − f2|` over codes, the overflow bucket counting as one code.
pub fn census_tv(a: &NeighborhoodCensus, b: &NeighborhoodCensus) -> Result<f64> {
    if a.depth != b.depth {
        return Err(invalid("censuses have different depths"));
    }
    let mut sum = (a.overflow_freq() - b.overflow_freq()).abs();
    for c in a.counts.keys().chain(b.counts.keys().filter(|c| !a.counts.contains_key(c))) {
        sum += (a.freq(c) - b.freq(c)).abs();
    }
    Ok(0.5 * sum)
}

/// Total variation between a census and an exact law.
pub fn census_tv_to_law(a: &NeighborhoodCensus, law: &[(RootedCode, f64)], overflow: f64) -> f64 {
    let mut sum = (a.overflow_freq() - overflow).abs();
    let mut seen = 0.0;
    for (c, p) in law {
        let f = a.freq(c);
        sum += (f - p).abs();
        seen += f;
    }
    sum += (1.0 - a.overflow_freq() - seen).max(0.0);
    0.5 * sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLocalResult {
    pub conditioned: NeighborhoodCensus,
    pub unconditioned: NeighborhoodCensus,
    pub ugw: NeighborhoodCensus,
    pub tv: f64,
    pub ugw_tv_conditioned: f64,
    pub ugw_tv_unconditioned: f64,
    /// Rejection draws spent on the conditioned graphs.
    pub tries: u64,
}

/// Pooled depth-`r` censuses of `graph_samples` graphs conditioned on
/// `T ≥ k` and as many unconditioned graphs, with total variation between
/// them and to a Poisson tree census of the same size.
pub fn conditional_local_experiment(
    params: &ErParams,
    k: u64,
    r: usize,
    graph_samples: usize,
    seed: u64,
    max_tries: u64,
) -> Result<ConditionalLocalResult> {
    if graph_samples == 0 {
        return Err(invalid("need at least one graph"));
    }
    let conditioned_graphs = (0..graph_samples)
        .into_par_iter()
        .map(|i| conditioned_sample(params, Statistic::T, k, derive_seed(seed, 2 * i as u64), max_tries))
        .collect::<Result<Vec<_>>>()?;
    let tries = conditioned_graphs.iter().map(|s| s.tries).sum();
    let roots: Vec<usize> = (0..params.n()).collect();
    let mut conditioned = NeighborhoodCensus::empty(r);
    for s in &conditioned_graphs {
        conditioned.merge(&census_of_roots(&s.graph, r, &roots));
    }
    let mut unconditioned = NeighborhoodCensus::empty(r);
    for i in 0..graph_samples {
        let g = sample_er(params, derive_seed(seed, 2 * i as u64 + 1));
        unconditioned.merge(&census_of_roots(&g, r, &roots));
    }
    let ugw = sample_ugw_census(params.lambda(), r, conditioned.sample_size, derive_seed(seed, u64::MAX), GW_SIZE_CAP)?;
    Ok(ConditionalLocalResult {
        tv: census_tv(&conditioned, &unconditioned)?,
        ugw_tv_conditioned: census_tv(&conditioned, &ugw)?,
        ugw_tv_unconditioned: census_tv(&unconditioned, &ugw)?,
        conditioned,
        unconditioned,
        ugw,
        tries,
    })
}
