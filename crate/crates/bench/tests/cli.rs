use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use minvol_bench::commands::DEFAULT_SQRT_LAMBDA;
use minvol_core::io::read_matrix;

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minvol-bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const NOISELESS: &str = "[instance]\ngenerator = \"paper-4x4\"\nn = 60\nsigma = 0.0\nseed = 9\n";

#[test]
fn generate_writes_four_matrices_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "g.toml", NOISELESS);
    let out = bench(&["generate", "g.toml", "--out", "inst"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("inst");
    for f in ["X.txt", "W_star.txt", "H_star.txt", "X_star.txt", "manifest.toml"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read(dir.join("X.txt")).unwrap(), fs::read(dir.join("X_star.txt")).unwrap());
    let manifest = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("generator = \"paper-4x4\""));
    assert!(manifest.contains("seed = 9"));
    assert_eq!(read_matrix(dir.join("H_star.txt")).unwrap().shape(), (4, 60));
}

#[test]
fn generate_is_deterministic_and_seed_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "g.toml", &NOISELESS.replace("0.0", "0.05"));
    for out in ["a", "b"] {
        assert!(bench(&["generate", "g.toml", "--out", out], tmp.path()).status.success());
    }
    assert!(bench(&["generate", "g.toml", "--out", "c", "--seed", "10"], tmp.path()).status.success());
    let read = |d: &str, f: &str| fs::read(tmp.path().join(d).join(f)).unwrap();
    for f in ["X.txt", "W_star.txt", "H_star.txt", "X_star.txt", "manifest.toml"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "X.txt"), read("c", "X.txt"));
}

#[test]
fn malformed_config_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.toml", "[instance]\ngenerator = \"paper-4x4\"\nn = [\n");
    let out = bench(&["generate", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.toml:"), "{}", stderr(&out));

    write(tmp.path(), "neg.toml", "[instance]\ngenerator = \"paper-4x4\"\nn = 10\nsigma = -0.5\n");
    let out = bench(&["generate", "neg.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("neg.toml:4:"), "{}", stderr(&out));

    let out = bench(&["sweep", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(&["solve", "X.txt", "--rank", "2", "--solver", "nmf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bench(&["solve", "missing.txt", "--rank", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

fn generated(tmp: &Path, sigma: f64) {
    write(tmp, "g.toml", &NOISELESS.replace("0.0", &sigma.to_string()));
    assert!(bench(&["generate", "g.toml", "--out", "inst"], tmp).status.success());
}

fn trace_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn solve_without_penalty_keeps_lambda_k_at_zero() {
    let tmp = tempfile::tempdir().unwrap();
    generated(tmp.path(), 0.01);
    let out = bench(
        &["solve", "inst/X.txt", "--rank", "4", "--lambda", "0", "--max-outer", "10", "--out", "s"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = fs::read_to_string(tmp.path().join("s/trace.csv")).unwrap();
    assert!(trace.starts_with("k,f_eps,r_k,lambda_k,sigma_hat,rel_rmse_X,rel_rmse_W,wall_ms\n"));
    assert!(trace_column(&trace, "lambda_k").iter().all(|&l| l == 0.0));
    // f_eps is then the plain square-root residual
    let f = trace_column(&trace, "f_eps");
    let r = trace_column(&trace, "r_k");
    for (a, b) in f.iter().zip(&r) {
        assert!((a - b.sqrt()).abs() <= 1e-12 * a);
    }
    assert_eq!(read_matrix(tmp.path().join("s/W.txt")).unwrap().shape(), (4, 4));
    assert_eq!(read_matrix(tmp.path().join("s/H.txt")).unwrap().shape(), (4, 60));
}

#[test]
fn solve_reports_ground_truth_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    generated(tmp.path(), 0.01);
    let out = bench(
        &[
            "solve", "inst/X.txt", "--rank", "4", "--max-outer", "5", "--w-star", "inst/W_star.txt",
            "--x-star", "inst/X_star.txt", "--out", "s",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains(&format!("lambda: {DEFAULT_SQRT_LAMBDA:e}")), "{text}");
    assert!(text.contains("rel_rmse_X: ") && text.contains("rel_rmse_W: "), "{text}");
    let trace = fs::read_to_string(tmp.path().join("s/trace.csv")).unwrap();
    assert!(trace_column(&trace, "rel_rmse_W").iter().all(|v| v.is_finite()));
}

#[test]
fn baseline_echoes_lambda_from_lambda_tilde() {
    let tmp = tempfile::tempdir().unwrap();
    generated(tmp.path(), 0.01);
    let out = bench(
        &[
            "solve", "inst/X.txt", "--rank", "4", "--solver", "minvol-baseline", "--lambda-tilde", "1e-2",
            "--max-outer", "20", "--out", "b",
        ],
        tmp.path(),
    );
    let text = stdout(&out);
    if out.status.success() {
        assert!(text.contains("lambda_tilde: 1e-2"), "{text}");
        let lambda: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("lambda: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!(lambda > 0.0);
        let trace = fs::read_to_string(tmp.path().join("b/trace.csv")).unwrap();
        assert!(trace.starts_with("k,objective\n"));
    } else {
        // the conversion is rejected only when the log-volume at the start is negative
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains("log det"), "{}", stderr(&out));
    }

    let out = bench(&["solve", "inst/X.txt", "--rank", "4", "--solver", "minvol-baseline"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bench(&["solve", "inst/X.txt", "--rank", "4", "--lambda-tilde", "0.1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

fn parse_csv(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

#[test]
fn summary_matches_recomputation_from_sweep_csv() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "s.toml",
        "[sweep]\nsolver = \"sqrt-minvol\"\nreplicates = 2\nbase_seed = 4\n\n\
         [instance]\ngenerator = \"random-uniform\"\nm = 5\nr = 3\nn = 40\n\n\
         [grid]\nsigma = [0.1, 0.01, 0.0]\nlambda = [1.0, 0.1, 0.01]\n\n[solver]\nmax_outer = 8\n",
    );
    let out = bench(&["sweep", "s.toml", "--out", "o", "--jobs", "2"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let cells = parse_csv(&fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap());
    let summary = parse_csv(&fs::read_to_string(tmp.path().join("o/summary.csv")).unwrap());
    assert_eq!(cells.len(), 18);
    assert_eq!(summary.len(), 3);

    for row in &summary {
        let sigma = &row["sigma"];
        // mean over replicates per λ, in first-appearance order
        let mut per_lambda: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
        for c in cells.iter().filter(|c| &c["sigma"] == sigma && c["status"] == "ok") {
            let x: f64 = c["rel_rmse_X"].parse().unwrap();
            let w: f64 = c["rel_rmse_W"].parse().unwrap();
            match per_lambda.iter_mut().find(|(l, _, _)| *l == c["lambda"]) {
                Some(entry) => {
                    entry.1.push(x);
                    entry.2.push(w);
                }
                None => per_lambda.push((c["lambda"].clone(), vec![x], vec![w])),
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let best = |pick: fn(&(String, Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
            per_lambda
                .iter()
                .map(|e| (mean(pick(e)), e.0.clone()))
                .fold(None::<(f64, String)>, |acc, c| match acc {
                    Some(a) if a.0 <= c.0 => Some(a),
                    _ => Some(c),
                })
                .unwrap()
        };
        let (bx, lx) = best(|e| &e.1);
        let (bw, lw) = best(|e| &e.2);
        let got_x: f64 = row["min_rel_rmse_X"].parse().unwrap();
        let got_w: f64 = row["min_rel_rmse_W"].parse().unwrap();
        assert!((got_x - bx).abs() <= 1e-15 * bx.max(1e-300), "{got_x} vs {bx}");
        assert!((got_w - bw).abs() <= 1e-15 * bw.max(1e-300), "{got_w} vs {bw}");
        assert_eq!(row["argmin_lambda_X"], lx);
        assert_eq!(row["argmin_lambda_W"], lw);
    }
}

#[test]
fn sweep_uses_out_from_spec_and_records_failed_cells() {
    let tmp = tempfile::tempdir().unwrap();
    // a baseline over tiny random data: some instances give a negative log-volume
    write(
        tmp.path(),
        "s.toml",
        "[sweep]\nsolver = \"minvol-baseline\"\nreplicates = 3\nout = \"from-spec\"\n\n\
         [instance]\ngenerator = \"random-uniform\"\nm = 5\nr = 3\nn = 30\n\n\
         [grid]\nsigma = [0.05]\nlambda_tilde = [0.1]\n\n[solver]\nmax_outer = 5\n",
    );
    let out = bench(&["sweep", "s.toml"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let cells = parse_csv(&fs::read_to_string(tmp.path().join("from-spec/sweep.csv")).unwrap());
    assert_eq!(cells.len(), 3);
    for c in &cells {
        match c["status"].as_str() {
            "ok" => assert!(!c["rel_rmse_X"].is_empty()),
            "error" => assert!(c["rel_rmse_X"].is_empty() && c["outer_iters"].is_empty()),
            other => panic!("unexpected status {other}"),
        }
    }
}

#[test]
fn pca_overlays_and_shape_errors() {
    let tmp = tempfile::tempdir().unwrap();
    generated(tmp.path(), 0.0);
    let out = bench(
        &["pca", "--x", "inst/X.txt", "--w-star", "inst/W_star.txt", "--w-hat", "inst/W_star.txt", "--out", "p.csv"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = parse_csv(&fs::read_to_string(tmp.path().join("p.csv")).unwrap());
    let coords = |set: &str| -> Vec<(String, String)> {
        rows.iter().filter(|r| r["set"] == set).map(|r| (r["pc1"].clone(), r["pc2"].clone())).collect()
    };
    assert_eq!(coords("X").len(), 60);
    assert_eq!(coords("W_star").len(), 4);
    assert_eq!(coords("W_star"), coords("W_hat"));

    let out = bench(&["pca", "--x", "inst/X.txt", "--out", "only.csv"], tmp.path());
    assert!(out.status.success());
    let rows = parse_csv(&fs::read_to_string(tmp.path().join("only.csv")).unwrap());
    assert!(rows.iter().all(|r| r["set"] == "X"));

    write(tmp.path(), "wrong.txt", "3 2\n1 0\n0 1\n1 1\n");
    let out = bench(&["pca", "--x", "inst/X.txt", "--w-hat", "wrong.txt"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pca_after_solve_stays_near_true_vertices() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "g.toml", "[instance]\ngenerator = \"paper-4x4\"\nn = 500\nsigma = 0.01\nseed = 3\n");
    assert!(bench(&["generate", "g.toml", "--out", "inst"], tmp.path()).status.success());
    let out = bench(
        &["solve", "inst/X.txt", "--rank", "4", "--lambda", "0.01", "--max-outer", "50", "--out", "s"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = bench(
        &["pca", "--x", "inst/X.txt", "--w-star", "inst/W_star.txt", "--w-hat", "s/W.txt", "--out", "p.csv"],
        tmp.path(),
    );
    assert!(out.status.success());
    let rows = parse_csv(&fs::read_to_string(tmp.path().join("p.csv")).unwrap());
    let points = |set: &str| -> Vec<[f64; 2]> {
        rows.iter()
            .filter(|r| r["set"] == set)
            .map(|r| [r["pc1"].parse().unwrap(), r["pc2"].parse().unwrap()])
            .collect()
    };
    let truth = points("W_star");
    let est = points("W_hat");
    // distance from each true vertex to its nearest estimate
    let worst = truth
        .iter()
        .map(|t| {
            est.iter()
                .map(|e| ((t[0] - e[0]).powi(2) + (t[1] - e[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!(worst <= 10.0 * 0.01, "worst vertex distance {worst}");
}
