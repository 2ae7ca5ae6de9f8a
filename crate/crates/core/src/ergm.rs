//! Exponential random graph tilted by `V_T`: the law of `G(n, p)` reweighted
//! by `n^{β V_T}`. Exact partition function by enumeration for tiny `n`,
//! single-edge-flip Metropolis sampling otherwise.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{toggle_delta, toggle_edge, triangle_stats, ErParams, Graph, TriangleStats};
use crate::rng::{derive_seed, stream_rng, Rng};
use crate::small::{check_cap, enumerate_census, Census};

/// `(β − 1/3)₊`, the limiting coefficient of `n log n` in `log Z_n(β log n)`.
pub fn partition_scaling(beta: f64) -> f64 {
    (beta - 1.0 / 3.0).max(0.0)
}

/// Exact tilted quantities for one `n`, reusing a single enumeration.
#[derive(Debug, Clone)]
pub struct ErgmExact {
    census: Census,
}

impl ErgmExact {
    pub fn new(n: usize, allow_large: bool) -> Result<Self> {
        check_cap(n, allow_large)?;
        Ok(Self { census: enumerate_census(n) })
    }

    /// `log(count · P(g) · n^{βq})` for every `(e, q)` cell with graphs in it.
    fn log_weights(&self, lambda: f64, beta: f64) -> Result<Vec<(usize, f64)>> {
        let n = self.census.n;
        let p = ErParams::new(n, lambda)?.p();
        let m = self.census.pair_count();
        let tilt = beta * (n as f64).ln();
        let mut out = Vec::new();
        for (e, row) in self.census.by_vt.iter().enumerate() {
            for (q, &count) in row.iter().enumerate() {
                if count > 0 {
                    let lp = e as f64 * p.ln() + (m - e) as f64 * (1.0 - p).ln();
                    out.push((q, (count as f64).ln() + lp + tilt * q as f64));
                }
            }
        }
        Ok(out)
    }

    /// `log Z = log Σ_g P(g) n^{β V_T(g)}`.
    pub fn log_partition(&self, lambda: f64, beta: f64) -> Result<f64> {
        if beta == 0.0 {
            return Ok(0.0);
        }
        let w = self.log_weights(lambda, beta)?;
        let max = w.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(max + w.iter().map(|x| (x.1 - max).exp()).sum::<f64>().ln())
    }

    /// Mean of `V_T` under the tilted law.
    pub fn mean_vt(&self, lambda: f64, beta: f64) -> Result<f64> {
        let w = self.log_weights(lambda, beta)?;
        let max = w.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = w.iter().fold((0.0, 0.0), |(a, b), &(q, lw)| {
            let x = (lw - max).exp();
            (a + q as f64 * x, b + x)
        });
        Ok(num / den)
    }
}

/// `log Z_n(β log n)` by full enumeration.
pub fn ergm_exact_log_partition(n: usize, lambda: f64, beta: f64) -> Result<f64> {
    ErgmExact::new(n, false)?.log_partition(lambda, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgmInit {
    Empty,
    Complete,
}

impl ErgmInit {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErgmInit::Empty => "empty",
            ErgmInit::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgmConfig {
    pub n: usize,
    pub lambda: f64,
    pub beta: f64,
    pub steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub init: ErgmInit,
}

/// Steps between recounts of the incrementally maintained statistics.
pub const RECOUNT_INTERVAL: u64 = 100_000;

impl ErgmConfig {
    pub fn new(n: usize, lambda: f64, beta: f64, steps: u64, seed: u64) -> Self {
        Self { n, lambda, beta, steps, burn_in: steps / 10, thin: 100, seed, init: ErgmInit::Empty }
    }

    pub fn validate(&self) -> Result<ErParams> {
        if !(self.lambda > 0.0) {
            return Err(invalid("lambda must be positive"));
        }
        if self.n < 2 {
            return Err(invalid("need at least 2 vertices"));
        }
        if self.steps <= self.burn_in {
            return Err(invalid("steps must exceed burn-in"));
        }
        if self.thin == 0 {
            return Err(invalid("thin must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be non-negative"));
        }
        ErParams::new(self.n, self.lambda)
    }
}

/// Metropolis chain on edge toggles targeting `P(g) n^{β V_T(g)}`.
#[derive(Debug, Clone)]
pub struct ErgmChain {
    graph: Graph,
    stats: TriangleStats,
    rng: Rng,
    /// `log(p / (1 − p))`.
    log_odds: f64,
    tilt: f64,
    pub steps: u64,
    pub accepted: u64,
}

impl ErgmChain {
    pub fn new(params: &ErParams, beta: f64, init: ErgmInit, seed: u64, stream: u64) -> Self {
        let n = params.n();
        let graph = match init {
            ErgmInit::Empty => Graph::empty(n),
            ErgmInit::Complete => Graph::complete(n),
        };
        let p = params.p();
        Self {
            stats: triangle_stats(&graph),
            graph,
            rng: stream_rng(seed, stream),
            log_odds: (p / (1.0 - p)).ln(),
            tilt: beta * (n as f64).ln(),
            steps: 0,
            accepted: 0,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn stats(&self) -> &TriangleStats {
        &self.stats
    }

    /// Log acceptance ratio of toggling `{u, v}`.
    pub fn log_ratio(&self, u: usize, v: usize) -> f64 {
        let d = toggle_delta(&self.graph, &self.stats, u, v);
        let edge = if d.added { self.log_odds } else { -self.log_odds };
        edge + self.tilt * d.vt as f64
    }

    /// One proposal; returns whether it was accepted.
    pub fn step(&mut self) -> bool {
        let n = self.graph.n();
        let u = self.rng.random_range(0..n);
        let mut v = self.rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        let log_ratio = self.log_ratio(u, v);
        let uniform: f64 = self.rng.random();
        self.steps += 1;
        if log_ratio >= 0.0 || uniform < log_ratio.exp() {
            toggle_edge(&mut self.graph, &mut self.stats, u, v);
            self.accepted += 1;
            true
        } else {
            false
        }
    }

    /// Compares the running statistics with a full recount.
    pub fn verify(&self) -> bool {
        let fresh = triangle_stats(&self.graph);
        fresh == self.stats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgmTrace {
    /// `V_T` after every `thin`-th post-burn-in step.
    pub vt: Vec<u32>,
    /// Edge counts at the same steps.
    pub edges: Vec<u32>,
    pub acceptance: f64,
    pub final_graph: Graph,
    pub mean_vt: f64,
    /// Batch-means standard error of `mean_vt`.
    pub stderr: f64,
    pub recounts: u64,
}

/// Standard error of the mean from `batches` contiguous batch means.
pub fn batch_means_stderr(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches.max(1);
    if size == 0 || batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let b = means.len() as f64;
    let grand = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Number of batches used for trace standard errors.
pub const BATCHES: usize = 32;

pub fn ergm_mcmc(config: &ErgmConfig) -> Result<ErgmTrace> {
    ergm_mcmc_stream(config, 0)
}

/// Runs one chain on stream `stream` of `config.seed`.
pub fn ergm_mcmc_stream(config: &ErgmConfig, stream: u64) -> Result<ErgmTrace> {
    let params = config.validate()?;
    let mut chain = ErgmChain::new(&params, config.beta, config.init, config.seed, stream);
    let mut vt = Vec::new();
    let mut edges = Vec::new();
    let mut recounts = 0;
    for step in 1..=config.steps {
        chain.step();
        if step % RECOUNT_INTERVAL == 0 {
            if !chain.verify() {
                return Err(Error::InvalidParameter(format!("statistics drifted at step {step}")));
            }
            recounts += 1;
        }
        if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.thin) {
            vt.push(chain.stats.vt as u32);
            edges.push(chain.graph.edge_count() as u32);
        }
    }
    let values: Vec<f64> = vt.iter().map(|&x| x as f64).collect();
    let mean_vt = values.iter().sum::<f64>() / values.len().max(1) as f64;
    Ok(ErgmTrace {
        stderr: batch_means_stderr(&values, BATCHES),
        vt,
        edges,
        acceptance: chain.accepted as f64 / chain.steps as f64,
        final_graph: chain.graph,
        mean_vt,
        recounts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    /// Average of the two chains' `mean V_T / n`.
    pub mean_vt_frac: f64,
    pub stderr: f64,
    pub acceptance: f64,
    pub from_empty: f64,
    pub from_complete: f64,
    pub disagreement: f64,
    pub mixing_warning: bool,
}

/// Chains that end further apart than this (in `V_T / n`) raise a warning.
pub const MIXING_TOLERANCE: f64 = 0.15;

/// Paired chains from the empty and complete graphs for every `β`, seeded
/// by `derive_seed(config.seed, index)`; `config.beta` and `config.init`
/// are ignored.
pub fn ergm_sweep(config: &ErgmConfig, betas: &[f64]) -> Result<Vec<SweepRow>> {
    if betas.is_empty() {
        return Err(invalid("need at least one beta"));
    }
    config.validate()?;
    let n = config.n as f64;
    let jobs: Vec<(usize, ErgmInit)> =
        (0..betas.len()).flat_map(|i| [(i, ErgmInit::Empty), (i, ErgmInit::Complete)]).collect();
    let traces = jobs
        .par_iter()
        .map(|&(i, init)| {
            let cfg = ErgmConfig { beta: betas[i], init, seed: derive_seed(config.seed, i as u64), ..*config };
            ergm_mcmc_stream(&cfg, init as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let (a, b) = (&traces[2 * i], &traces[2 * i + 1]);
            let (from_empty, from_complete) = (a.mean_vt / n, b.mean_vt / n);
            let disagreement = (from_empty - from_complete).abs();
            SweepRow {
                beta,
                mean_vt_frac: 0.5 * (from_empty + from_complete),
                stderr: 0.5 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() / n,
                acceptance: 0.5 * (a.acceptance + b.acceptance),
                from_empty,
                from_complete,
                disagreement,
                mixing_warning: disagreement > MIXING_TOLERANCE,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_partition_examples() {
        let z = ergm_exact_log_partition(3, 1.0, 1.0).unwrap();
        assert!((z - (53.0f64 / 27.0).ln()).abs() < 1e-14);
        assert_eq!(ergm_exact_log_partition(5, 1.0, 0.0).unwrap(), 0.0);
        assert!(ergm_exact_log_partition(8, 1.0, 0.5).is_err());
    }

    #[test]
    fn exact_partition_shape() {
        let exact = ErgmExact::new(5, false).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let z: Vec<f64> = grid.iter().map(|&b| exact.log_partition(1.0, b).unwrap()).collect();
        for w in z.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in z.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
        let mean0 = exact.mean_vt(1.0, 0.0).unwrap();
        for (&b, &lz) in grid.iter().zip(&z) {
            assert!(lz >= b * 5f64.ln() * mean0 - 1e-12);
        }
    }

    #[test]
    fn partition_scaling_examples() {
        assert_eq!(partition_scaling(1.0 / 3.0), 0.0);
        assert_eq!(partition_scaling(0.0), 0.0);
        assert!((partition_scaling(1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn untilted_chain_has_binomial_density() {
        let cfg = ErgmConfig { burn_in: 20_000, thin: 50, ..ErgmConfig::new(30, 3.0, 0.0, 400_000, 11) };
        let trace = ergm_mcmc(&cfg).unwrap();
        let m = 435.0;
        let p = 0.1;
        let values: Vec<f64> = trace.edges.iter().map(|&e| e as f64).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let se = batch_means_stderr(&values, BATCHES);
        assert!((mean - m * p).abs() < 4.0 * se.max(0.5), "mean {mean}, se {se}");
        assert!(trace.recounts == 4);
    }

    #[test]
    fn zero_tilt_ratio_is_plain_odds() {
        let params = ErParams::new(10, 2.0).unwrap();
        let chain = ErgmChain::new(&params, 0.0, ErgmInit::Empty, 1, 0);
        assert!((chain.log_ratio(0, 1) - (0.2f64 / 0.8).ln()).abs() < 1e-15);
        let chain = ErgmChain::new(&params, 0.7, ErgmInit::Complete, 1, 0);
        // removing an edge of K_10 leaves every vertex in a triangle
        assert!((chain.log_ratio(0, 1) - (0.8f64 / 0.2).ln()).abs() < 1e-15);
    }

    #[test]
    fn chains_are_deterministic_and_checked() {
        let cfg = ErgmConfig::new(20, 1.0, 0.5, 200_000, 5);
        let a = ergm_mcmc(&cfg).unwrap();
        let b = ergm_mcmc(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.vt.iter().all(|&v| v <= 20));
        assert_eq!(a.vt.len(), 1800);
        assert!(ergm_mcmc(&ErgmConfig { thin: 0, ..cfg }).is_err());
        assert!(ergm_mcmc(&ErgmConfig { burn_in: 200_000, ..cfg }).is_err());
    }

    #[test]
    fn sweep_rows() {
        let cfg = ErgmConfig { burn_in: 10_000, thin: 10, ..ErgmConfig::new(12, 1.0, 0.0, 60_000, 3) };
        let rows = ergm_sweep(&cfg, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows, ergm_sweep(&cfg, &[0.0, 0.5, 1.0]).unwrap());
        assert!(ergm_sweep(&cfg, &[]).is_err());
    }
}
