//! Upper-tail probabilities of `T` and `V_T` under `G(n, p)`: exact by
//! enumeration, naive Monte Carlo, a planted-clique importance sampler and
//! closed-form lower bounds. Probabilities are carried as logarithms.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::graph::{sample_er_stream, triangle_stats, ErParams, Graph};
use crate::rng::stream_rng;
use crate::small::{check_cap, enumerate_census, Census};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    T,
    VT,
}

impl Statistic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Statistic::T => "T",
            Statistic::VT => "VT",
        }
    }

    pub fn of(&self, g: &Graph) -> u64 {
        let s = triangle_stats(g);
        match self {
            Statistic::T => s.total,
            Statistic::VT => s.vt as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Exact,
    Mc,
    IsClique,
    AnalyticLb,
}

impl TailMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMethod::Exact => "exact",
            TailMethod::Mc => "mc",
            TailMethod::IsClique => "is_clique",
            TailMethod::AnalyticLb => "analytic_lb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub statistic: Statistic,
    pub k: u64,
    /// `log P(statistic ≥ k)` or the logarithm of a bound on it.
    pub log_value: f64,
    pub method: TailMethod,
    /// Standard error of the estimate divided by the estimate.
    pub stderr_log: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub is_lower_bound: bool,
    /// Zero-hit Monte Carlo: `log_value` is a 95% upper confidence bound.
    pub is_upper_bound: bool,
    /// The bound only holds for large `n`.
    pub asymptotic: bool,
}

impl TailEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Standard error on the probability scale.
    pub fn stderr(&self) -> Option<f64> {
        self.stderr_log.map(|s| s * self.value())
    }

    fn new(statistic: Statistic, k: u64, log_value: f64, method: TailMethod) -> Self {
        Self {
            statistic,
            k,
            log_value,
            method,
            stderr_log: None,
            samples: None,
            seed: None,
            is_lower_bound: matches!(method, TailMethod::IsClique | TailMethod::AnalyticLb),
            is_upper_bound: false,
            asymptotic: false,
        }
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `e log p + (M − e) log(1 − p)` with `0 · log 0 = 0`.
fn log_graph_prob(e: usize, m: usize, p: f64) -> f64 {
    let part = |count: usize, x: f64| if count == 0 { 0.0 } else { count as f64 * x.ln() };
    part(e, p) + part(m - e, 1.0 - p)
}

/// Exact tail from a precomputed census.
pub fn exact_tail_from_census(census: &Census, p: f64, statistic: Statistic, k: u64) -> Result<TailEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p must lie in [0, 1]"));
    }
    let m = census.pair_count();
    let table = match statistic {
        Statistic::T => &census.by_triangles,
        Statistic::VT => &census.by_vt,
    };
    if k == 0 {
        return Ok(TailEstimate::new(statistic, 0, 0.0, TailMethod::Exact));
    }
    let mut terms = Vec::new();
    for (e, row) in table.iter().enumerate() {
        let count: u64 = row.iter().skip(k as usize).sum();
        if count > 0 {
            terms.push((count as f64).ln() + log_graph_prob(e, m, p));
        }
    }
    let log_value = log_sum_exp(&terms).min(0.0);
    Ok(TailEstimate::new(statistic, k, log_value, TailMethod::Exact))
}

/// `P(statistic ≥ k)` by summing over all graphs on `n` vertices.
pub fn exact_tail(n: usize, p: f64, statistic: Statistic, k: u64, allow_large: bool) -> Result<TailEstimate> {
    check_cap(n, allow_large)?;
    exact_tail_from_census(&enumerate_census(n), p, statistic, k)
}

/// Naive Monte Carlo; sample `i` is drawn from stream `i` of `seed`.
pub fn mc_tail(params: &ErParams, statistic: Statistic, k: u64, samples: u64, seed: u64) -> Result<TailEstimate> {
    if samples < 100 {
        return Err(invalid("Monte Carlo needs at least 100 samples"));
    }
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| (statistic.of(&sample_er_stream(params, seed, i)) >= k) as u64)
        .sum();
    let nf = samples as f64;
    let mut est = if hits == 0 {
        let upper = -(0.05f64.ln() / nf).exp_m1();
        let mut est = TailEstimate::new(statistic, k, upper.ln(), TailMethod::Mc);
        est.is_upper_bound = true;
        est
    } else {
        let phat = hits as f64 / nf;
        let mut est = TailEstimate::new(statistic, k, phat.ln(), TailMethod::Mc);
        est.stderr_log = Some((phat * (1.0 - phat) / nf).sqrt() / phat);
        est
    };
    est.samples = Some(samples);
    est.seed = Some(seed);
    Ok(est)
}

/// Largest clique order supported by the importance sampler.
pub const MAX_CLIQUE_ORDER: usize = 6;

/// Number of `r`-cliques of `g`.
pub fn count_cliques(g: &Graph, r: usize) -> u64 {
    fn extend(g: &Graph, candidates: &[usize], depth: usize) -> u64 {
        if depth == 0 {
            return 1;
        }
        if depth == 1 {
            return candidates.len() as u64;
        }
        candidates
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let next: Vec<usize> = candidates[i + 1..].iter().copied().filter(|&w| g.has_edge(v, w)).collect();
                extend(g, &next, depth - 1)
            })
            .sum()
    }
    match r {
        0 => 1,
        1 => g.n() as u64,
        _ => (0..g.n())
            .map(|v| {
                let higher: Vec<usize> = g.neighbors(v).iter().copied().filter(|&w| w > v).collect();
                extend(g, &higher, r - 1)
            })
            .sum(),
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Smallest `r` with `C(r, 3) ≥ k`.
pub fn clique_order_for(k: u64) -> usize {
    let mut r = 3usize;
    while ((r * (r - 1) * (r - 2)) / 6) < k as usize {
        r += 1;
    }
    r
}

/// One importance-sampling draw: a uniform `r`-set is completed to a clique
/// on top of `G(n, p)`.
pub fn planted_clique_sample(params: &ErParams, r: usize, seed: u64, stream: u64) -> Graph {
    let mut rng = stream_rng(seed, u64::MAX - stream);
    let set = sample_indices(&mut rng, params.n(), r).into_vec();
    let mut g = sample_er_stream(params, seed, stream);
    for (i, &a) in set.iter().enumerate() {
        for &b in &set[i + 1..] {
            g.add_edge(a, b);
        }
    }
    g
}

/// Unbiased estimate of `P(T ≥ k and an r-clique is present)`, a lower bound
/// on `P(T ≥ k)`. Each draw has weight `C(n, r) p^{C(r,2)} / X_r(g)`.
pub fn is_clique_tail(params: &ErParams, k: u64, r: usize, samples: u64, seed: u64) -> Result<TailEstimate> {
    let n = params.n();
    if r < 3 || r > n {
        return Err(invalid(format!("clique order must satisfy 3 <= r <= n, got {r}")));
    }
    if r > MAX_CLIQUE_ORDER {
        return Err(invalid(format!("clique order {r} exceeds {MAX_CLIQUE_ORDER}")));
    }
    if samples < 2 {
        return Err(invalid("importance sampling needs at least 2 samples"));
    }
    let p = params.p();
    let log_base = ln_choose(n as u64, r as u64) + log_graph_prob((r * (r - 1)) / 2, (r * (r - 1)) / 2, p);
    let weights: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = planted_clique_sample(params, r, seed, i);
            if triangle_stats(&g).total >= k {
                (log_base - (count_cliques(&g, r) as f64).ln()).exp()
            } else {
                0.0
            }
        })
        .collect();
    let nf = samples as f64;
    let mean = weights.iter().sum::<f64>() / nf;
    let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let mut est = TailEstimate::new(Statistic::T, k, mean.ln().min(0.0), TailMethod::IsClique);
    est.stderr_log = (mean > 0.0).then(|| (var / nf).sqrt() / mean);
    est.samples = Some(samples);
    est.seed = Some(seed);
    Ok(est)
}

/// `C(r, 2) log p` for the smallest `r` with `C(r, 3) ≥ k`: a fixed
/// `r`-clique already forces `T ≥ k`.
pub fn clique_lower_bound(params: &ErParams, k: u64) -> Result<TailEstimate> {
    if k == 0 {
        return Ok(TailEstimate::new(Statistic::T, 0, 0.0, TailMethod::AnalyticLb));
    }
    let r = clique_order_for(k);
    if r > params.n() {
        return Err(invalid(format!("a {r}-clique does not fit in {} vertices", params.n())));
    }
    let log_value = log_graph_prob(r * (r - 1) / 2, r * (r - 1) / 2, params.p());
    Ok(TailEstimate::new(Statistic::T, k, log_value, TailMethod::AnalyticLb))
}

/// Lower bound on `P(V_T ≥ k)` from graphs whose restriction to some
/// `k`-set is a union of `k/3` vertex-disjoint triangles with no other edge
/// touching the set. The factor `0.9 e^{−λ³/6}` is asymptotic.
pub fn disjoint_triangles_lower_bound(params: &ErParams, k: u64) -> Result<TailEstimate> {
    let n = params.n() as u64;
    if !k.is_multiple_of(3) || k == 0 || k > n {
        return Err(invalid("k must be a positive multiple of 3 not exceeding n"));
    }
    let p = params.p();
    let lambda = params.lambda();
    let kf = k as f64;
    let count = ln_choose(n, k) + ln_gamma(kf + 1.0) - kf / 3.0 * 6f64.ln() - ln_gamma(kf / 3.0 + 1.0);
    let absent = k * (k - 1) / 2 - k + (n - k) * k;
    let log_value = count + log_graph_prob(k as usize, k as usize, p) + log_graph_prob(0, absent as usize, p)
        + 0.9f64.ln()
        - lambda.powi(3) / 6.0;
    let mut est = TailEstimate::new(Statistic::VT, k, log_value.min(0.0), TailMethod::AnalyticLb);
    est.asymptotic = true;
    Ok(est)
}

/// `|−log P − (k/3) log(k/3)| / k`, the constant implied by an observed tail
/// of `V_T` relative to its leading-order rate.
pub fn implied_vt_constant(log_p: f64, k: u64) -> f64 {
    let k = k as f64;
    (-log_p - k / 3.0 * (k / 3.0).ln()).abs() / k
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedSample {
    pub graph: Graph,
    /// Draws made, including the accepted one.
    pub tries: u64,
}

/// Rejection sampling of `G(n, p)` given `statistic ≥ k`; try `i` uses
/// stream `i` of `seed`.
pub fn conditioned_sample(
    params: &ErParams,
    statistic: Statistic,
    k: u64,
    seed: u64,
    max_tries: u64,
) -> Result<ConditionedSample> {
    for i in 0..max_tries {
        let g = sample_er_stream(params, seed, i);
        if statistic.of(&g) >= k {
            return Ok(ConditionedSample { graph: g, tries: i + 1 });
        }
    }
    Err(Error::RejectionExhausted { tries: max_tries })
}
