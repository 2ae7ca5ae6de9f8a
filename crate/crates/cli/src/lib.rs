//! The `tritail` command line.
//!
//! Subcommands `tail`, `phi`, `core`, `qbasic`, `ergm` and `census` print
//! CSV or JSON to standard output, or to `--output`, which is written to a
//! temporary file and renamed into place. Stochastic runs record their
//! master seed and substream layout in the output header (`#` lines for
//! CSV, `master_seed` and `substreams` keys for JSON). Floats in CSV carry
//! 17 significant digits.
//!
//! Exit codes: 0 on success, 2 on invalid flags or input, 1 on runtime
//! failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use tritail::cores::{extract_core, CoreParams};
use tritail::ergm::{ergm_mcmc_stream, ErgmConfig, ErgmInit, ErgmTrace, MIXING_TOLERANCE};
use tritail::graph::{sample_er, ErParams, Graph};
use tritail::local_limit::{neighborhood_census, sample_ugw_census, NeighborhoodCensus, GW_SIZE_CAP};
use tritail::qbasic::{decompose_qbasic, extract_qbasic, validate_decomposition};
use tritail::rng::derive_seed;
use tritail::small::{check_cap, enumerate_census};
use tritail::tails::{
    clique_lower_bound, clique_order_for, conditioned_sample, disjoint_triangles_lower_bound,
    exact_tail_from_census, is_clique_tail, mc_tail, Statistic, TailEstimate, MAX_CLIQUE_ORDER,
};
use tritail::variational::{clique_upper_bound, edge_lower_bound, phi_exact, PhiQuery, PhiResult, PHI_EXACT_CAP};
use tritail::Error;

#[derive(Parser, Debug)]
#[command(name = "tritail", version, about = "Triangle upper tails and related experiments on G(n, p)")]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the main output to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Upper-tail probability of T or V_T under G(n, λ/n).
    Tail(TailArgs),
    /// The variational problem: exact value and closed-form bounds.
    Phi(PhiArgs),
    /// Greedy seed-to-core reduction of an edge list.
    Core(CoreArgs),
    /// Decomposition of a q-basic edge list.
    Qbasic(QbasicArgs),
    /// Metropolis chains for the V_T-tilted random graph.
    Ergm(ErgmArgs),
    /// Census of rooted depth-r neighbourhoods.
    Census(CensusArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StatArg {
    #[value(name = "T")]
    T,
    #[value(name = "VT")]
    Vt,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::T => Statistic::T,
            StatArg::Vt => Statistic::VT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
    Is,
    Analytic,
}

#[derive(Args, Debug)]
struct TailArgs {
    #[arg(long, value_enum)]
    stat: StatArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    /// Threshold; a comma-separated list gives one row per value.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u64>,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planted clique order for `is`; defaults to the smallest order
    /// forcing k triangles, capped at 6.
    #[arg(long)]
    clique_order: Option<usize>,
    /// Allow exact enumeration on 8 vertices.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args, Debug)]
struct PhiArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 0.0)]
    w: f64,
    /// Exhaustive minimum over subgraphs of K_n.
    #[arg(long)]
    exact: bool,
    /// Clique upper bound and edge-count lower bound.
    #[arg(long)]
    bounds: bool,
    /// Directory for witness edge lists.
    #[arg(long)]
    witness_dir: Option<PathBuf>,
    /// Allow exact enumeration on 7 vertices.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args, Debug)]
struct CoreArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    w: f64,
    #[arg(long = "C", default_value_t = 6.0)]
    c: f64,
    #[arg(long)]
    lambda: f64,
    /// Number of vertices of the ambient G(n, p); defaults to the edge
    /// list's vertex count.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct QbasicArgs {
    #[arg(long)]
    input: PathBuf,
    /// Reduce the input to its q-basic subgraph first.
    #[arg(long)]
    extract: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Empty,
    Complete,
    Both,
}

#[derive(Args, Debug)]
struct ErgmArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<f64>,
    /// Comma-separated β values.
    #[arg(long, value_delimiter = ',')]
    beta_grid: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Defaults to a tenth of the steps.
    #[arg(long)]
    burnin: Option<u64>,
    #[arg(long, default_value_t = 100)]
    thin: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    init: InitArg,
    /// Write the thinned V_T and edge-count trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "er", "ugw"])))]
struct CensusArgs {
    /// Edge list to census.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample G(n, λ/n), given as `n,lambda`.
    #[arg(long)]
    er: Option<String>,
    /// Sample Poisson(λ) Galton–Watson trees.
    #[arg(long)]
    ugw: Option<f64>,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Graphs (default 1) or trees (default 10000) to sample.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition sampled graphs on T ≥ k by rejection.
    #[arg(long = "condition-T")]
    condition_t: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_tries: u64,
    /// Census a uniform sample of this many roots of the input graph.
    #[arg(long)]
    roots: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RejectionExhausted { .. } | Error::Io(_) | Error::Json(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// The main output plus side files.
struct Output {
    main: String,
    side: Vec<(PathBuf, String)>,
}

impl Output {
    fn main(main: String) -> Self {
        Self { main, side: Vec::new() }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `text` to a temporary file beside `path` and renames it over `path`.
fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let file = File::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Graph::read_edge_list(BufReader::new(file)).map_err(|e| match e {
        Error::Io(e) => Failure::Runtime(format!("{}: {e}", path.display())),
        e => Failure::Validation(format!("{}: {e}", path.display())),
    })
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

fn tail(args: &TailArgs) -> Result<Output, Failure> {
    let params = ErParams::new(args.n, args.lambda)?;
    let stat = Statistic::from(args.stat);
    let census = if args.method == MethodArg::Exact {
        check_cap(args.n, args.allow_large)?;
        Some(enumerate_census(args.n))
    } else {
        None
    };
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for &k in &args.k {
        let est: TailEstimate = match args.method {
            MethodArg::Exact => exact_tail_from_census(census.as_ref().expect("census built"), params.p(), stat, k)?,
            MethodArg::Mc => mc_tail(&params, stat, k, args.samples, args.seed)?,
            MethodArg::Is => {
                if stat != Statistic::T {
                    return Err(invalid("the importance sampler only supports --stat T"));
                }
                let r = args.clique_order.unwrap_or_else(|| clique_order_for(k).min(MAX_CLIQUE_ORDER).min(args.n));
                is_clique_tail(&params, k, r, args.samples, args.seed)?
            }
            MethodArg::Analytic => match stat {
                Statistic::T => clique_lower_bound(&params, k)?,
                Statistic::VT => disjoint_triangles_lower_bound(&params, k)?,
            },
        };
        if est.is_upper_bound {
            notes.push(format!("# k={k}: no hits, log_p is a 95% upper confidence bound"));
        }
        if est.asymptotic {
            notes.push(format!("# k={k}: the bound holds for large n only"));
        }
        rows.push(est);
    }
    let mut out = String::new();
    if matches!(args.method, MethodArg::Mc | MethodArg::Is) {
        writeln!(out, "# master_seed={}", args.seed).unwrap();
        writeln!(out, "# substreams: sample i draws G(n,p) from stream i for every k").unwrap();
        if args.method == MethodArg::Is {
            writeln!(out, "# substreams: the planted set of sample i uses stream 2^64-1-i").unwrap();
        }
    }
    for note in notes {
        writeln!(out, "{note}").unwrap();
    }
    writeln!(out, "stat,k,method,log_p,stderr,lower_bound_flag,samples,seed").unwrap();
    for est in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            est.statistic.as_str(),
            est.k,
            est.method.as_str(),
            num(est.log_value),
            opt_num(est.stderr_log),
            est.is_lower_bound,
            est.samples.map(|s| s.to_string()).unwrap_or_default(),
            est.seed.map(|s| s.to_string()).unwrap_or_default(),
        )
        .unwrap();
    }
    Ok(Output::main(out))
}

fn phi(args: &PhiArgs) -> Result<Output, Failure> {
    let q = PhiQuery::new(args.n, args.p, args.k, args.a, args.w)?;
    let cap = if args.allow_large { PHI_EXACT_CAP + 1 } else { PHI_EXACT_CAP };
    let (exact, bounds) = match (args.exact, args.bounds) {
        (false, false) => (args.n <= cap, true),
        flags => flags,
    };
    let mut results: Vec<PhiResult> = Vec::new();
    if exact {
        results.push(phi_exact(&q, cap)?);
    }
    if bounds {
        results.push(clique_upper_bound(&q)?);
        results.push(edge_lower_bound(&q)?);
    }
    let mut out = Output::main(String::from("method,value,edges,witness_file\n"));
    for r in results {
        let mut file = String::new();
        if let (Some(w), Some(dir)) = (&r.witness, &args.witness_dir) {
            let path = dir.join(format!("phi_{}_n{}.edges", r.method.as_str(), args.n));
            file = path.display().to_string();
            out.side.push((path, w.to_edge_list()));
        }
        let edges = r.witness.as_ref().map(|w| w.edge_count().to_string()).unwrap_or_default();
        writeln!(out.main, "{},{},{},{}", r.method.as_str(), num(r.value), edges, file).unwrap();
    }
    Ok(out)
}

fn core(args: &CoreArgs) -> Result<Output, Failure> {
    let g = read_graph(&args.input)?;
    let n = args.n.unwrap_or(g.n());
    let params = CoreParams::new(args.a, args.k, args.w, args.c, ErParams::new(n, args.lambda)?)?;
    let mut text = extract_core(&g, &params)?.to_json();
    text.push('\n');
    Ok(Output::main(text))
}

fn qbasic(args: &QbasicArgs) -> Result<Output, Failure> {
    let mut g = read_graph(&args.input)?;
    if args.extract {
        g = extract_qbasic(&g);
    }
    let d = decompose_qbasic(&g)?;
    validate_decomposition(&g, &d).map_err(|v| Failure::Runtime(format!("decomposition failed validation: {v}")))?;
    let mut text = d.to_json();
    text.push('\n');
    Ok(Output::main(text))
}

fn ergm(args: &ErgmArgs) -> Result<Output, Failure> {
    let betas: Vec<f64> = match args.beta {
        Some(b) => vec![b],
        None if !args.beta_grid.is_empty() => args.beta_grid.clone(),
        None => return Err(invalid("give --beta or --beta-grid")),
    };
    let inits: Vec<ErgmInit> = match args.init {
        InitArg::Empty => vec![ErgmInit::Empty],
        InitArg::Complete => vec![ErgmInit::Complete],
        InitArg::Both => vec![ErgmInit::Empty, ErgmInit::Complete],
    };
    let burn_in = args.burnin.unwrap_or(args.steps / 10);
    let base = ErgmConfig { burn_in, thin: args.thin, ..ErgmConfig::new(args.n, args.lambda, 0.0, args.steps, args.seed) };
    let jobs: Vec<(usize, ErgmInit)> =
        (0..betas.len()).flat_map(|i| inits.iter().map(move |&init| (i, init))).collect();
    let configs: Vec<ErgmConfig> = jobs
        .iter()
        .map(|&(i, init)| ErgmConfig { beta: betas[i], init, seed: derive_seed(args.seed, i as u64), ..base })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let traces: Vec<ErgmTrace> = configs
        .par_iter()
        .map(|c| ergm_mcmc_stream(c, c.init as u64))
        .collect::<tritail::Result<_>>()
        .map_err(|e| Failure::Runtime(e.to_string()))?;

    let header = format!(
        "# master_seed={}\n# substreams: beta index i uses seed derive_seed(master_seed, i); chains from empty use stream 0, from complete stream 1\n",
        args.seed
    );
    let n = args.n as f64;
    let mut summary = header.clone();
    summary.push_str("beta,init,mean_vt,mean_vt_frac,stderr,acceptance,disagreement,mixing_warning\n");
    for (j, (&(i, init), t)) in jobs.iter().zip(&traces).enumerate() {
        let (disagreement, warning) = if inits.len() == 2 {
            let other = &traces[j ^ 1];
            let d = (t.mean_vt - other.mean_vt).abs() / n;
            (num(d), (d > MIXING_TOLERANCE).to_string())
        } else {
            (String::new(), String::new())
        };
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            num(betas[i]),
            init.as_str(),
            num(t.mean_vt),
            num(t.mean_vt / n),
            num(t.stderr),
            num(t.acceptance),
            disagreement,
            warning
        )
        .unwrap();
    }
    let mut out = Output::main(summary);
    if let Some(path) = &args.trace {
        let mut trace = header;
        trace.push_str("beta,init,step,vt,edges\n");
        for (&(i, init), t) in jobs.iter().zip(&traces) {
            for (s, (&vt, &e)) in t.vt.iter().zip(&t.edges).enumerate() {
                let step = burn_in + (s as u64 + 1) * args.thin;
                writeln!(trace, "{},{},{},{},{}", num(betas[i]), init.as_str(), step, vt, e).unwrap();
            }
        }
        out.side.push((path.clone(), trace));
    }
    Ok(out)
}

fn parse_er(spec: &str) -> Result<ErParams, Failure> {
    let bad = || invalid(format!("--er expects n,lambda, got {spec:?}"));
    let (n, lambda) = spec.split_once(',').ok_or_else(bad)?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    let lambda: f64 = lambda.trim().parse().map_err(|_| bad())?;
    Ok(ErParams::new(n, lambda)?)
}

fn census(args: &CensusArgs) -> Result<Output, Failure> {
    if args.condition_t.is_some() && args.er.is_none() {
        return Err(invalid("--condition-T applies to --er only"));
    }
    if args.roots.is_some() && args.input.is_none() {
        return Err(invalid("--roots applies to --input only"));
    }
    let (census, meta): (NeighborhoodCensus, Value) = if let Some(path) = &args.input {
        let g = read_graph(path)?;
        let sample = args.roots.map(|r| (r, args.seed));
        let census = neighborhood_census(&g, args.depth, sample)?;
        let meta = match sample {
            Some(_) => json!({
                "source": "input",
                "master_seed": args.seed,
                "substreams": "roots drawn from stream 0 of the master seed",
            }),
            None => json!({ "source": "input" }),
        };
        (census, meta)
    } else if let Some(spec) = &args.er {
        let params = parse_er(spec)?;
        let samples = args.samples.unwrap_or(1);
        if samples == 0 {
            return Err(invalid("--samples must be positive"));
        }
        let graphs = (0..samples)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(args.seed, i);
                match args.condition_t {
                    Some(k) => conditioned_sample(&params, Statistic::T, k, seed, args.max_tries).map(|s| (s.graph, s.tries)),
                    None => Ok((sample_er(&params, seed), 1)),
                }
            })
            .collect::<tritail::Result<Vec<_>>>()?;
        let mut census = NeighborhoodCensus::empty(args.depth);
        for (g, _) in &graphs {
            census.merge(&neighborhood_census(g, args.depth, None)?);
        }
        let tries: u64 = graphs.iter().map(|(_, t)| t).sum();
        let meta = json!({
            "source": "er",
            "n": params.n(),
            "lambda": params.lambda(),
            "graphs": samples,
            "condition_T": args.condition_t,
            "tries": tries,
            "master_seed": args.seed,
            "substreams": "graph i uses seed derive_seed(master_seed, i); rejection try j uses stream j of it",
        });
        (census, meta)
    } else {
        let lambda = args.ugw.expect("source group is required");
        let samples = args.samples.unwrap_or(10_000);
        let census = sample_ugw_census(lambda, args.depth, samples, args.seed, GW_SIZE_CAP)?;
        let meta = json!({
            "source": "ugw",
            "lambda": lambda,
            "master_seed": args.seed,
            "substreams": "tree i uses stream i of the master seed",
        });
        (census, meta)
    };
    let mut value: Value = serde_json::from_str(&census.to_json()).expect("census json parses");
    let obj = value.as_object_mut().expect("census json is an object");
    for (k, v) in meta.as_object().expect("meta is an object") {
        obj.insert(k.clone(), v.clone());
    }
    Ok(Output::main(pretty(&value)))
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Tail(a) => tail(a),
        Command::Phi(a) => phi(a),
        Command::Core(a) => core(a),
        Command::Qbasic(a) => qbasic(a),
        Command::Ergm(a) => ergm(a),
        Command::Census(a) => census(a),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let output = match cli.threads {
        Some(0) => return Err(invalid("--threads must be positive")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?
            .install(|| dispatch(cli))?,
        None => dispatch(cli)?,
    };
    for (path, text) in &output.side {
        write_atomic(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    match &cli.output {
        Some(path) => write_atomic(path, &output.main).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        None => stdout.write_all(output.main.as_bytes())?,
    }
    Ok(())
}

/// Runs the command line `args` (program name first) against the given
/// streams and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(Failure::Validation(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

/// Runs against the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}
