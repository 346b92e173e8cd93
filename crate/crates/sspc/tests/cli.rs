use std::path::Path;
use std::process::Command;

use sspc::config::{ExperimentConfig, ProblemKind};
use sspc::derivatives::{check_nlp, FD_ATOL};
use sspc::run::{run_simulate, run_sweep_ell};
use sspc::Error;
use sspc_core::nlp::PrimalDualPoint;
use sspc_core::numerics::DenseMatrix;
use sspc_core::problems::TrackingQp;
use sspc_core::{NlpDims, ParametricNlp};

fn sspc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sspc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn di(dir: &Path, steps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ProblemKind::DoubleIntegrator);
    cfg.sim.steps = steps;
    cfg.out_dir = dir.to_path_buf();
    cfg
}

#[test]
fn zero_steps_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "{\n  \"problem\": \"double_integrator\",\n  \"sim\": {\"steps\": 0}\n}\n",
    );
    let out = sspc(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("sim.steps"), "{err}");
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn spacecraft_simulation_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"problem": "spacecraft", "seed": 0}"#);
    let out_dir = dir.path().join("run");
    let out = sspc(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--ell",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = read(&out_dir.join("trace.csv"));
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 202);
    assert_eq!(
        lines[0],
        "k,t,x_0,x_1,x_2,x_3,x_4,x_5,u_0,u_1,u_2,residual,cost,max_violation,subopt_err,ell,step_wall_s"
    );
    assert!(lines[201].starts_with("200,600,"));
    // subopt_err and step_wall_s are empty; ell is 2.
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",,2,")), "{}", lines[1]);

    let summary = read(&out_dir.join("summary.txt"));
    for key in [
        "final_state_norm_inf",
        "max_violation",
        "max_abs_x_0",
        "residual_first_below_1e-10",
        "wall_time_max_s",
    ] {
        assert!(summary.contains(key), "{key} missing from {summary}");
    }
    let echo = ExperimentConfig::load(&out_dir.join("config-echo.json")).unwrap();
    assert_eq!(echo.sspc.ell, 2);
    assert_eq!(echo.out_dir, out_dir);
}

#[test]
fn trace_values_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_simulate(&di(dir.path(), 25)).unwrap();
    let mut rdr = csv::Reader::from_path(out.trace_path()).unwrap();
    for (row, rec) in rdr.records().zip(&out.trace.records) {
        let row = row.unwrap();
        let f = |i: usize| row[i].parse::<f64>().unwrap();
        assert_eq!(f(1).to_bits(), rec.t.to_bits());
        assert_eq!(f(2).to_bits(), rec.x[0].to_bits());
        assert_eq!(f(4).to_bits(), rec.u[0].to_bits());
        assert_eq!(f(5).to_bits(), rec.residual.to_bits());
        assert_eq!(f(6).to_bits(), rec.cost.to_bits());
        assert_eq!(&row[8], "");
    }
}

#[test]
fn suboptimality_column_when_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = di(dir.path(), 10);
    cfg.sim.record_suboptimality = true;
    let out = run_simulate(&cfg).unwrap();
    let mut rdr = csv::Reader::from_path(out.trace_path()).unwrap();
    for row in rdr.records() {
        assert!(row.unwrap()[8].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"problem": "double_integrator", "sim": {"steps": 60}}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert!(sspc(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success());
    }
    assert_eq!(
        std::fs::read(a.join("trace.csv")).unwrap(),
        std::fs::read(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn sweep_writes_traces_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"problem": "double_integrator", "sim": {"steps": 40}}"#);
    let out = sspc(&[
        "sweep-ell",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--ell",
        "1,2,4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for ell in [1, 2, 4] {
        assert!(dir.path().join(format!("ell_{ell}/trace.csv")).is_file());
    }
    let metrics = read(&dir.path().join("metrics.csv"));
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "ell,steps_to_residual_1e-10,max_violation,cost_sum");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,") && lines[3].starts_with("4,"));
}

#[test]
fn singleton_sweep_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = di(&dir.path().join("single"), 30);
    cfg.sspc.ell = 3;
    let single = run_simulate(&cfg).unwrap();
    cfg.out_dir = dir.path().join("sweep");
    let sweep = run_sweep_ell(&cfg, &[3]).unwrap();
    let swept = sweep.runs[0].as_ref().unwrap();
    assert_eq!(
        std::fs::read(single.trace_path()).unwrap(),
        std::fs::read(swept.trace_path()).unwrap()
    );
    assert_eq!(sweep.metrics.len(), 1);
}

#[test]
fn aborted_runs_keep_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = di(dir.path(), 20);
    cfg.sim.record_suboptimality = true;
    cfg.sspc.oracle_max_iter = 0;
    let sweep = run_sweep_ell(&cfg, &[1, 2]).unwrap();
    assert!(!sweep.all_completed());
    for run in &sweep.runs {
        let run = run.as_ref().unwrap();
        assert!(run.trace.failure.is_some());
        assert!(run.trace_path().is_file());
        assert!(read(&run.dir.join("summary.txt")).contains("status = aborted"));
    }
    assert!(dir.path().join("metrics.csv").is_file());

    let path = write_config(
        dir.path(),
        r#"{"problem": "double_integrator", "sim": {"steps": 5, "record_suboptimality": true}, "sspc": {"oracle_max_iter": 0}}"#,
    );
    let out = sspc(&[
        "simulate",
        "--config",
        &path,
        "--out",
        dir.path().join("cli").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_derivatives_passes_on_builtin_problems() {
    let dir = tempfile::tempdir().unwrap();
    for problem in ["spacecraft", "double_integrator", "tracking_qp"] {
        let cfg = write_config(dir.path(), &format!(r#"{{"problem": "{problem}"}}"#));
        let out = sspc(&["check-derivatives", "--config", &cfg, "--seed", "7"]);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{problem}: {text}");
        assert!(text.contains(": pass"));
    }
}

#[test]
fn tracking_qp_derivatives_are_near_exact() {
    let report = sspc::derivatives::run_check_derivatives(&ExperimentConfig::new(ProblemKind::TrackingQp)).unwrap();
    assert!(report.max_abs_error() <= 1e-9, "{report}");
}

/// `TrackingQp` with the inequality Jacobian scaled by 1.5.
struct CorruptTracking;

impl ParametricNlp for CorruptTracking {
    fn dims(&self) -> NlpDims {
        TrackingQp.dims()
    }
    fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
        TrackingQp.objective(w, p)
    }
    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        TrackingQp.objective_gradient(w, p)
    }
    fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        TrackingQp.equality(w, p)
    }
    fn equality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        TrackingQp.equality_jacobian(w, p)
    }
    fn equality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        TrackingQp.equality_param_jacobian(w, p)
    }
    fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        TrackingQp.inequality(w, p)
    }
    fn inequality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        TrackingQp.inequality_jacobian(w, p).scale(1.5)
    }
    fn inequality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        TrackingQp.inequality_param_jacobian(w, p)
    }
    fn lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        TrackingQp.lagrangian_hessian(z, p)
    }
    fn lagrangian_param_jacobian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        TrackingQp.lagrangian_param_jacobian(z, p)
    }
}

#[test]
fn corrupted_jacobian_is_named() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let report = check_nlp(&CorruptTracking, &mut rng, 10, |_| {
        let z = PrimalDualPoint {
            w: vec![0.5],
            lambda: vec![],
            v: vec![0.3],
        };
        (z, vec![1.0])
    })
    .unwrap();
    assert!(!report.passes());
    assert_eq!(report.failing_blocks(), ["inequality Jacobian"]);
    assert_eq!(report.worst_offenders(1)[0].block, "inequality Jacobian");
    assert!(report.worst_offenders(1)[0].worst.max_abs_error > FD_ATOL);
}

#[test]
fn unknown_problem_reports_field() {
    match ExperimentConfig::from_json("{\n  \"problem\": \"pendulum\"\n}") {
        Err(Error::Config { line, field, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(field, "problem");
        }
        other => panic!("{other:?}"),
    }
}
