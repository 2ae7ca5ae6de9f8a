//! Browser demo. Each export takes plain numbers and returns a JSON string
//! for the page to plot; errors come back as strings. The functions are
//! ordinary Rust on native targets.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use tritail::ergm::{ergm_sweep, partition_scaling, ErgmConfig, ErgmExact};
use tritail::graph::{sample_er, triangle_stats, ErParams, Graph};
use tritail::local_limit::{census_tv_to_law, neighborhood_census, poisson_star_law, NeighborhoodCensus, CODE_CAP};
use tritail::rng::derive_seed;
use tritail::small::{enumerate_census, ENUMERATION_CAP};
use tritail::tails::{
    clique_lower_bound, conditioned_sample, disjoint_triangles_lower_bound, exact_tail_from_census, mc_tail,
    Statistic,
};
use tritail::variational::{rate_triangles, rate_vt};

/// Largest graph the page may ask for.
pub const MAX_N: usize = 2000;
/// Cap on Metropolis steps per chain, to keep the page responsive.
pub const MAX_STEPS: u64 = 5_000_000;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn check_n(n: usize) -> Result<(), String> {
    if n > MAX_N {
        return Err(format!("n is capped at {MAX_N} in the demo"));
    }
    Ok(())
}

/// Paired chains from the empty and complete graphs on an even grid of
/// `points` values of β in `[beta_min, beta_max]`. Rows carry `V_T / n`
/// from both starts, and the exact tilted mean when `n` is small enough to
/// enumerate.
#[wasm_bindgen]
pub fn ergm_sweep_json(
    n: usize,
    lambda: f64,
    beta_min: f64,
    beta_max: f64,
    points: usize,
    steps: u32,
    seed: u32,
) -> Result<String, String> {
    let (steps, seed) = (steps as u64, seed as u64);
    check_n(n)?;
    if !(2..=41).contains(&points) {
        return Err("points must lie in 2..=41".into());
    }
    if !(beta_min >= 0.0 && beta_max > beta_min) {
        return Err("need 0 <= beta_min < beta_max".into());
    }
    if steps > MAX_STEPS {
        return Err(format!("steps are capped at {MAX_STEPS} in the demo"));
    }
    let betas: Vec<f64> =
        (0..points).map(|i| beta_min + (beta_max - beta_min) * i as f64 / (points - 1) as f64).collect();
    let rows = ergm_sweep(&ErgmConfig::new(n, lambda, 0.0, steps, seed), &betas).map_err(err)?;
    let exact = if n <= ENUMERATION_CAP { Some(ErgmExact::new(n, false).map_err(err)?) } else { None };
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let exact_frac = exact.as_ref().map(|e| e.mean_vt(lambda, r.beta).map(|m| m / n as f64)).transpose();
            Ok(json!({
                "beta": r.beta,
                "from_empty": r.from_empty,
                "from_complete": r.from_complete,
                "stderr": finite(r.stderr),
                "acceptance": r.acceptance,
                "mixing_warning": r.mixing_warning,
                "exact": exact_frac.map_err(err)?,
                "scaling": partition_scaling(r.beta),
            }))
        })
        .collect::<Result<_, String>>()?;
    Ok(json!({ "n": n, "lambda": lambda, "steps": steps, "seed": seed, "rows": rows }).to_string())
}

/// `log P(stat ≥ k)` for `k = 1..=k_max`: Monte Carlo, exact enumeration
/// for `n ≤ 7`, the analytic lower bound and the leading-order rate.
/// `stat` is `"T"` or `"VT"`.
#[wasm_bindgen]
pub fn tail_curve_json(n: usize, lambda: f64, stat: &str, k_max: u32, samples: u32, seed: u32) -> Result<String, String> {
    let (k_max, samples, seed) = (k_max as u64, samples as u64, seed as u64);
    check_n(n)?;
    let statistic = match stat {
        "T" => Statistic::T,
        "VT" => Statistic::VT,
        _ => return Err(format!("unknown statistic {stat:?}")),
    };
    if k_max == 0 || k_max > 200 {
        return Err("k_max must lie in 1..=200".into());
    }
    if samples > 2_000_000 {
        return Err("samples are capped at 2000000 in the demo".into());
    }
    let params = ErParams::new(n, lambda).map_err(err)?;
    let census = (n <= ENUMERATION_CAP).then(|| enumerate_census(n));
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let mc = mc_tail(&params, statistic, k, samples, seed).map_err(err)?;
        let exact = match &census {
            Some(c) => Some(exact_tail_from_census(c, params.p(), statistic, k).map_err(err)?.log_value),
            None => None,
        };
        let bound = match statistic {
            Statistic::T => clique_lower_bound(&params, k).ok(),
            Statistic::VT => disjoint_triangles_lower_bound(&params, k).ok(),
        };
        let rate = match statistic {
            Statistic::T => rate_triangles(k as f64, params.p()),
            Statistic::VT => rate_vt(k as f64),
        };
        rows.push(json!({
            "k": k,
            "mc": if mc.is_upper_bound { Value::Null } else { finite(mc.log_value) },
            "mc_upper": if mc.is_upper_bound { finite(mc.log_value) } else { Value::Null },
            "mc_stderr_log": mc.stderr_log.map(finite),
            "exact": exact.map(finite),
            "lower_bound": bound.map(|b| finite(b.log_value)),
            "rate": -rate,
        }));
    }
    Ok(json!({ "n": n, "lambda": lambda, "stat": stat, "samples": samples, "seed": seed, "rows": rows }).to_string())
}

/// Depth-1 census pooled over `graphs` samples of `G(n, λ/n)`, optionally
/// conditioned on `T ≥ condition_t` (0 for none): the root-degree histogram
/// next to the Poisson(λ) law, and the total variation between the census
/// and the depth-1 Poisson tree law (balls with an edge between neighbours
/// count against it).
#[wasm_bindgen]
pub fn degree_census_json(n: usize, lambda: f64, graphs: u32, condition_t: u32, seed: u32) -> Result<String, String> {
    let (graphs, condition_t, seed) = (graphs as u64, condition_t as u64, seed as u64);
    check_n(n)?;
    if graphs == 0 || graphs > 200 {
        return Err("graphs must lie in 1..=200".into());
    }
    let params = ErParams::new(n, lambda).map_err(err)?;
    let mut census = NeighborhoodCensus::empty(1);
    let mut triangles = 0u64;
    let mut tries = 0u64;
    for i in 0..graphs {
        let s = derive_seed(seed, i);
        let g: Graph = if condition_t == 0 {
            tries += 1;
            sample_er(&params, s)
        } else {
            let c = conditioned_sample(&params, Statistic::T, condition_t, s, 200_000).map_err(err)?;
            tries += c.tries;
            c.graph
        };
        triangles += triangle_stats(&g).total;
        census.merge(&neighborhood_census(&g, 1, None).map_err(err)?);
    }
    let (law, overflow) = poisson_star_law(lambda);
    let tv = census_tv_to_law(&census, &law, overflow);
    let mut empirical = vec![0.0; law.len()];
    for code in census.counts.keys() {
        empirical[code.decode().degree(0)] += census.freq(code);
    }
    let degrees: Vec<Value> = law
        .iter()
        .zip(&empirical)
        .enumerate()
        .map(|(d, ((_, prob), freq))| json!({ "degree": d, "empirical": freq, "poisson": prob }))
        .collect();
    Ok(json!({
        "n": n,
        "lambda": lambda,
        "graphs": graphs,
        "condition_t": condition_t,
        "seed": seed,
        "tries": tries,
        "mean_triangles": triangles as f64 / graphs as f64,
        "degrees": degrees,
        "overflow_from": CODE_CAP,
        "overflow_empirical": census.overflow_freq(),
        "overflow_poisson": overflow,
        "tv": tv,
    })
    .to_string())
}
