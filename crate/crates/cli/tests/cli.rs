use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rowstoch_cli::commands::{cmd_plot, cmd_sweep, execute, SweepSpec};
use rowstoch_cli::problem::Problem;
use rowstoch_cli::trace_io::read_trace;
use rowstoch_cli::verify::{cmd_verify, Status, VerifyOptions};
use rowstoch_cli::{Algorithm, CliError, ExperimentConfig};
use rowstoch_core::analysis::eta;
use rowstoch_core::objectives::LocalObjective;
use rowstoch_core::{DMatrix, DVector, DirectedGraph, LogisticData};
use serde_json::Value;

fn rowstoch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rowstoch")).args(args).output().expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn preset(name: &str, out: &Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::preset(name).unwrap();
    config.out = out.to_path_buf();
    config
}

#[test]
fn run_paper_preset_writes_trending_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = rowstoch(&["run", "--preset", "paper-logistic", "--alpha", "0.008", "--max-iters", "2000", "--out", path_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = read_trace(dir.path().join("trace.csv")).unwrap();
    assert_eq!(records.len(), 2001);
    assert_eq!(records.last().unwrap().k, 2000);
    // Block maxima of the residual decrease until the floating-point floor.
    let floor = 1e-12 * records[0].residual2;
    let maxima: Vec<f64> = records.chunks(200).map(|c| c.iter().map(|r| r.residual2).fold(0.0, f64::max)).collect();
    for w in maxima.windows(2).filter(|w| w[0] > floor) {
        assert!(w[1] < w[0], "{maxima:?}");
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["rate"]["mu_hat"].as_f64().unwrap() < 1.0);
    assert_eq!(summary["iterations"], 2000);
}

#[test]
fn centralized_gd_matches_closed_form_decay() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = preset("quadratic", dir.path());
    config.algorithm = Algorithm::CentralizedGd;
    config.max_iters = 300;
    let problem = Problem::build(&config).unwrap();
    let trace = execute(&config).unwrap().trace;

    let p = problem.suite.p();
    let mut h = DMatrix::zeros(p, p);
    for f in problem.suite.locals() {
        if let LocalObjective::Quadratic { q, .. } = f {
            h += q;
        }
    }
    let m = DMatrix::identity(p, p) - h * config.alpha;
    let root_n = (problem.n() as f64).sqrt();
    let mut e = -problem.x_star.clone();
    let eta = eta(config.alpha, problem.n(), problem.global.l, problem.global.s);
    let r0 = trace.records[0].residual2;
    for r in &trace.records {
        let expected = root_n * e.norm();
        assert!((r.residual2 - expected).abs() <= 1e-9 * r0, "k={} {} vs {expected}", r.k, r.residual2);
        assert!(r.residual2 <= eta.powi(r.k as i32) * r0 * (1.0 + 1e-9) + 1e-14);
        e = &m * e;
    }
}

#[test]
fn zero_iterations_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rowstoch(&["run", "--preset", "quadratic", "--max-iters", "0", "--out", path_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn sweep_orders_proposed_below_subgradient_push() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = preset("paper-logistic", dir.path());
    base.max_iters = 1000;
    let spec = SweepSpec {
        base,
        algorithms: vec![Algorithm::Proposed, Algorithm::SubgradientPush],
        alphas: vec![0.008],
        push_steps: vec![],
        plot: true,
    };
    let report = cmd_sweep(&spec).unwrap();
    let at = |label: &str| report.get(label).unwrap().records.iter().find(|r| r.k == 1000).unwrap().residual2;
    assert!(at("proposed_0.008") < at("subgradient_push_1"));
    let csv = fs::read_to_string(&report.comparison).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,proposed_0.008,subgradient_push_1");
    assert_eq!(csv.lines().count(), 1002);
    assert!(fs::read_to_string(report.plot.unwrap()).unwrap().matches("<polyline").count() == 2);
}

#[test]
fn sweep_without_alphas_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        base: preset("quadratic", dir.path()),
        algorithms: vec![Algorithm::Proposed],
        alphas: vec![],
        push_steps: vec![],
        plot: false,
    };
    assert!(matches!(cmd_sweep(&spec), Err(CliError::Usage(_))));
    let o = rowstoch(&["sweep", "--preset", "quadratic", "--out", path_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_below_step_bound_converges_linearly() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = preset("quadratic", dir.path());
    base.max_iters = 5000;
    base.record_every = 5;
    let bound = Problem::build(&base).unwrap().step_bound().unwrap().alpha_bar;
    let spec = SweepSpec {
        base,
        algorithms: vec![Algorithm::Proposed],
        alphas: vec![bound / 2.0, bound / 4.0],
        push_steps: vec![],
        plot: false,
    };
    let report = cmd_sweep(&spec).unwrap();
    assert_eq!(report.series.len(), 2);
    for s in &report.series {
        assert!(s.ok, "{:?}", s.error);
        assert!(s.rate.as_ref().unwrap().mu_hat < 1.0, "{}", s.label);
    }
}

#[test]
fn sweep_records_failed_series_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = preset("quadratic", dir.path());
    base.max_iters = 200;
    let spec = SweepSpec {
        base,
        algorithms: vec![Algorithm::Proposed, Algorithm::CentralizedGd],
        alphas: vec![0.01, 10.0],
        push_steps: vec![],
        plot: false,
    };
    let report = cmd_sweep(&spec).unwrap();
    assert_eq!(report.series.len(), 4);
    let failed = report.get("centralized_gd_10").unwrap();
    assert!(!failed.ok && failed.error.is_some());
    assert!(report.get("proposed_0.01").unwrap().ok);
    assert!(report.get("centralized_gd_0.01").unwrap().ok);
    let sweep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["series"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_rowstoch"))
            .env("ROWSTOCH_THREADS", threads)
            .args(["sweep", "--preset", "quadratic", "--max-iters", "300", "--alphas", "0.01,0.005", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<_> = fs::read_dir(dir.path().join("series")).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        let mut bytes: Vec<(String, Vec<u8>)> =
            files.iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(p).unwrap())).collect();
        bytes.push(("comparison.csv".into(), fs::read(dir.path().join("comparison.csv")).unwrap()));
        outputs.push(bytes);
    }
    assert_eq!(outputs[0].len(), 4);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_exit_codes_follow_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_arg(dir.path());
    let ok = rowstoch(&["verify", "--preset", "quadratic", "--max-iters", "500", "--out", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);

    let bad = rowstoch(&["verify", "--preset", "quadratic", "--max-iters", "500", "--corrupt-weights", "--out", out]);
    assert_eq!(bad.status.code(), Some(1));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failed.iter().any(|f| f.starts_with("digraph.")), "{failed:?}");
}

#[test]
fn verify_marks_certification_inapplicable_above_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = preset("quadratic", dir.path());
    config.max_iters = 300;
    let problem = Problem::build(&config).unwrap();
    let bound = problem.step_bound().unwrap();
    let nl = problem.global.nl;

    config.alpha = bound.alpha_bar / 2.0;
    let below = cmd_verify(&config, &VerifyOptions::default()).unwrap();
    let rho = below.checks.iter().find(|c| c.name == "analysis.rho_at_alpha").unwrap();
    assert_eq!(rho.status, Status::Pass);

    config.alpha = (bound.alpha_bar * 4.0).min(1.0 / nl);
    assert!(config.alpha > bound.alpha_bar);
    let above = cmd_verify(&config, &VerifyOptions::default()).unwrap();
    let rho = above.checks.iter().find(|c| c.name == "analysis.rho_at_alpha").unwrap();
    assert_eq!(rho.status, Status::Inapplicable);
    assert!(!above.failed.contains(&"analysis.rho_at_alpha"));
}

#[test]
fn plot_draws_one_polyline_per_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_arg(dir.path());
    let o = rowstoch(&["sweep", "--preset", "quadratic", "--max-iters", "100", "--alphas", "0.01", "--out", out]);
    assert!(o.status.success());
    let a = dir.path().join("series/proposed_0.01.csv");
    let b = dir.path().join("series/subgradient_push_1.csv");
    let o = rowstoch(&["plot", path_arg(&a), path_arg(&b), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("class=\"legend\"").count(), 2);
    assert!(svg.contains("proposed_0.01") && svg.contains("subgradient_push_1"));
}

#[test]
fn plot_rejects_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert!(matches!(cmd_plot(std::slice::from_ref(&empty), dir.path()), Err(CliError::MalformedTrace { .. })));
    let o = rowstoch(&["plot", path_arg(&empty), "--out", path_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectral_prints_constants_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = rowstoch(&["spectral", "--preset", "paper-logistic", "--out", path_arg(dir.path())]);
    assert!(o.status.success());
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    let written: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectral.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
    let c = &printed["constants"];
    for field in ["sigma", "tau", "epsilon", "y", "y_tilde", "gamma1", "T", "T_tilde"] {
        assert!(c[field].as_f64().is_some(), "missing {field}");
    }
    let pi: Vec<f64> = c["pi"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(pi.len(), 10);
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(printed["step_bound"]["alpha_bar"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_paths_resolve_against_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("inputs");
    fs::create_dir(&data_dir).unwrap();
    DirectedGraph::random_strongly_connected(4, 0.3, 7).unwrap().save(data_dir.join("graph.json")).unwrap();
    let manifest = LogisticData::generate(4, 5, 2, 1.0, 3).save(data_dir.join("data")).unwrap();
    let manifest = manifest.strip_prefix(&data_dir).unwrap().to_str().unwrap().to_string();
    let config = serde_json::json!({
        "graph": { "file": "graph.json" },
        "objective": { "file": manifest },
        "algorithm": "proposed",
        "alpha": 0.01,
        "max_iters": 50,
        "out": "results"
    });
    fs::write(data_dir.join("experiment.json"), config.to_string()).unwrap();

    let elsewhere = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rowstoch"))
        .current_dir(elsewhere.path())
        .args(["run", "--config"])
        .arg(data_dir.join("experiment.json"))
        .args(["--max-iters", "60"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = read_trace(data_dir.join("results/trace.csv")).unwrap();
    assert_eq!(records.len(), 61);
}

#[test]
fn seed_flag_changes_data_and_is_reproducible() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = rowstoch(&["run", "--preset", "quadratic", "--max-iters", "50", "--seed", seed, "--out", path_arg(dir.path())]);
        assert!(o.status.success());
        fs::read(dir.path().join("trace.csv")).unwrap()
    };
    let (a, b, c) = (run("1"), run("1"), run("2"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn max_agent_error_is_rowwise() {
    let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
    let x_star = DVector::from_vec(vec![0.0, 0.0]);
    assert_eq!(rowstoch_cli::commands::max_agent_error(&x, &x_star), 3.0);
}
