use std::fs;
use std::path::Path;

use serde_json::Value;
use tritail_cli::run_with;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("tritail").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Rows of a CSV body, skipping `#` lines and the header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

/// `P(T ≥ k)` on 7 vertices by summing over all 2^21 graphs.
fn brute_tail_n7(p: f64, k: u32) -> f64 {
    let pairs: Vec<(usize, usize)> = (0..7).flat_map(|u| (u + 1..7).map(move |v| (u, v))).collect();
    let mut by_edges = [0u64; 22];
    for mask in 0u32..1 << 21 {
        let mut adj = [0u8; 7];
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        let mut t = 0;
        for (u, v) in &pairs {
            if adj[*u] >> v & 1 == 1 {
                t += (adj[*u] & adj[*v] & !((2u8 << v) - 1)).count_ones();
            }
        }
        if t >= k {
            by_edges[mask.count_ones() as usize] += 1;
        }
    }
    by_edges.iter().enumerate().map(|(e, &c)| c as f64 * p.powi(e as i32) * (1.0 - p).powi(21 - e as i32)).sum()
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("Usage"));
    assert_eq!(run(&["tail", "--help"]).code, 0);
}

#[test]
fn unknown_flag_prints_usage_and_exits_two() {
    let o = run(&["tail", "--stat", "T", "--n", "7", "--lambda", "1.5", "--k", "2", "--frobnicate"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("Usage"));
    assert_eq!(run(&["nonsense"]).code, 2);
}

#[test]
fn exact_tail_matches_enumeration() {
    let o = run(&["tail", "--stat", "T", "--n", "7", "--lambda", "1.5", "--k", "1,2,3", "--method", "exact"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("stat,k,method,log_p,stderr,lower_bound_flag,samples,seed\n"));
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 3);
    for (row, k) in rows.iter().zip(1..) {
        assert_eq!(&row[..3], &["T".to_owned(), k.to_string(), "exact".to_owned()]);
        let log_p: f64 = row[3].parse().unwrap();
        let oracle = brute_tail_n7(1.5 / 7.0, k).ln();
        assert!((log_p - oracle).abs() <= 1e-12 * oracle.abs(), "k={k}: {log_p} vs {oracle}");
    }
}

#[test]
fn floats_round_trip() {
    let o = run(&["tail", "--stat", "VT", "--n", "6", "--lambda", "2", "--k", "3", "--method", "exact"]);
    let field = &csv_rows(&o.stdout)[0][3];
    let x: f64 = field.parse().unwrap();
    assert_eq!(format!("{x:.16e}"), *field);
    assert_eq!(field.split('e').next().unwrap().trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn validation_errors_exit_two() {
    let big = run(&["tail", "--stat", "T", "--n", "9", "--lambda", "1", "--k", "1", "--method", "exact"]);
    assert_eq!(big.code, 2);
    assert!(big.stderr.contains("cap"));
    let is_vt = run(&["tail", "--stat", "VT", "--n", "9", "--lambda", "1", "--k", "3", "--method", "is"]);
    assert_eq!(is_vt.code, 2);
    assert_eq!(run(&["census", "--ugw", "2", "--condition-T", "3"]).code, 2);
    assert_eq!(run(&["census", "--er", "10"]).code, 2);
    assert_eq!(run(&["ergm", "--n", "6", "--lambda", "1"]).code, 2);
    assert_eq!(run(&["--threads", "0", "phi", "--n", "4", "--p", "0.5", "--k", "1"]).code, 2);
}

#[test]
fn malformed_edge_list_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.txt", "4 2\n0 1\n1 x\n");
    let o = run(&["qbasic", "--input", &path]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("line 3"), "{}", o.stderr);
    let short = write(dir.path(), "short.txt", "4 3\n0 1\n1 2\n");
    let o = run(&["core", "--input", &short, "--k", "10", "--w", "0.1", "--lambda", "1"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("line 3"), "{}", o.stderr);
}

#[test]
fn missing_input_is_a_runtime_failure() {
    assert_eq!(run(&["qbasic", "--input", "/nonexistent/graph.txt"]).code, 1);
}

#[test]
fn exhausted_rejection_is_a_runtime_failure() {
    let o = run(&["census", "--er", "10,0.1", "--condition-T", "50", "--max-tries", "10"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("10 tries"));
}

#[test]
fn qbasic_emits_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    // two triangles sharing vertex 2, plus a pendant edge
    let path = write(dir.path(), "g.txt", "6 7\n0 1\n1 2\n0 2\n2 3\n3 4\n2 4\n4 5\n");
    assert_eq!(run(&["qbasic", "--input", &path]).code, 2);
    let o = run(&["qbasic", "--input", &path, "--extract"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    for key in ["v1", "triangles", "v2", "matching", "coneighbors", "v3", "witnesses"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["v1"], serde_json::json!([0, 1, 2]));
    assert_eq!(v["matching"], serde_json::json!([[3, 4]]));
}

#[test]
fn core_certificate_for_planted_clique() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("1000 105\n");
    for u in 0..15 {
        for v in u + 1..15 {
            text.push_str(&format!("{u} {v}\n"));
        }
    }
    let path = write(dir.path(), "k15.txt", &text);
    let o = run(&["core", "--input", &path, "--a", "1", "--k", "450", "--w", "0.05", "--C", "1", "--lambda", "1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["m"], 105);
    for key in ["c1", "c2", "c3"] {
        assert_eq!(v[key], true, "{key}");
    }
    assert_eq!(v["input_seed"]["s1"], true);
    assert_eq!(v["deletions"], serde_json::json!([]));
}

#[test]
fn phi_writes_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let wdir = dir.path().to_str().unwrap();
    let o = run(&["phi", "--n", "5", "--p", "0.3", "--k", "2", "--exact", "--bounds", "--witness-dir", wdir]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows = csv_rows(&o.stdout);
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["exact", "clique_upper", "edge_lower"]);
    let exact = &rows[0];
    let edges: usize = exact[2].parse().unwrap();
    let value: f64 = exact[1].parse().unwrap();
    assert!((value - edges as f64 * (1.0f64 / 0.3).ln()).abs() < 1e-12);
    let witness = fs::read_to_string(&exact[3]).unwrap();
    assert!(witness.starts_with(&format!("5 {edges}\n")));
    assert!(rows[2][2].is_empty() && rows[2][3].is_empty());
}

#[test]
fn ergm_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("summary.csv");
    let trace = dir.path().join("trace.csv");
    let args = [
        "ergm", "--n", "12", "--lambda", "1", "--beta-grid", "0,0.5", "--steps", "20000", "--burnin", "2000",
        "--thin", "10", "--seed", "5",
    ];
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--trace", trace.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(run(&full).code, 0);
    let summary = fs::read_to_string(&out).unwrap();
    assert!(summary.starts_with("# master_seed=5\n"));
    let rows = csv_rows(&summary);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][1], "empty");
    assert_eq!(rows[1][1], "complete");
    assert_eq!(rows[0][6], rows[1][6]);
    let trace_text = fs::read_to_string(&trace).unwrap();
    let trace_rows = csv_rows(&trace_text);
    assert_eq!(trace_rows.len(), 4 * 1800);
    assert_eq!(trace_rows[0][2], "2010");
    assert_eq!(trace_rows.last().unwrap()[2], "20000");
}

#[test]
fn census_sources() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "path.txt", "3 2\n0 1\n1 2\n");
    let o = run(&["census", "--input", &path, "--depth", "1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["depth"], 1);
    assert_eq!(v["overflow"], 0.0);
    let freqs: Vec<f64> = v["entries"].as_array().unwrap().iter().map(|e| e["freq"].as_f64().unwrap()).collect();
    assert_eq!(freqs.len(), 2);
    assert!((freqs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(v.get("master_seed").is_none());

    let o = run(&["census", "--ugw", "1.5", "--samples", "500", "--seed", "9"]);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["master_seed"], 9);
    assert_eq!(v["sample_size"], 500);

    let o = run(&["census", "--er", "200,2", "--samples", "2", "--condition-T", "2", "--depth", "2"]);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["sample_size"], 400);
    assert_eq!(v["condition_T"], 2);
    assert!(v["tries"].as_u64().unwrap() >= 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 4] = [
        &["tail", "--stat", "VT", "--n", "30", "--lambda", "2", "--k", "3,6", "--method", "mc", "--samples", "3000", "--seed", "11"],
        &["tail", "--stat", "T", "--n", "30", "--lambda", "2", "--k", "4", "--method", "is", "--samples", "3000", "--seed", "11"],
        &["ergm", "--n", "15", "--lambda", "1", "--beta", "0.4", "--steps", "30000", "--seed", "2"],
        &["census", "--er", "300,2", "--samples", "3", "--depth", "2", "--seed", "4", "--condition-T", "3"],
    ];
    for (i, cmd) in commands.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = ["1", "3"]
            .iter()
            .map(|threads| {
                let path = dir.path().join(format!("out{i}_{threads}"));
                let mut argv = vec!["--threads", threads, "-o", path.to_str().unwrap()];
                argv.extend_from_slice(cmd);
                assert_eq!(run(&argv).code, 0);
                fs::read(&path).unwrap()
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "command {i}");
        assert!(!outputs[0].is_empty());
    }
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2 * commands.len(), "temporary files left behind");
}
