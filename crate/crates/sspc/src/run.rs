//! Experiment drivers behind the CLI commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use sspc_core::mpc::init_compensator;
use sspc_core::ocp::OptimalControlProblem;
use sspc_core::problems::TrackingQp;
use sspc_core::sim::{self, Clock, NoClock};
use sspc_core::{sspc as solver, ParametricNlp, PrimalDualPoint, SimTrace};

use crate::config::ExperimentConfig;
use crate::output::{self, MetricsRow};
use crate::problem::{ControlProblem, Problem};
use crate::{Error, Result};

/// Seconds since construction, from [`Instant`].
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

#[derive(Debug)]
pub struct SimOutcome {
    pub ell: usize,
    pub trace: SimTrace,
    pub dir: PathBuf,
}

impl SimOutcome {
    pub fn trace_path(&self) -> PathBuf {
        self.dir.join("trace.csv")
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn closed_loop<O: OptimalControlProblem>(
    cp: &ControlProblem<O>,
    cfg: &ExperimentConfig,
    ell: usize,
    x0: &[f64],
) -> Result<SimTrace> {
    let solver_cfg = sspc_core::SspcConfig { ell, ..cfg.solver() };
    let mut comp = init_compensator(&cp.nlp, &cp.layout, &solver_cfg, None, x0)?;
    let sim_cfg = cfg.sim();
    let trace = if cfg.sim.record_wall_time {
        sim::simulate(&cp.plant, &cp.nlp, &mut comp, x0, &sim_cfg, &MonotonicClock::new())
    } else {
        sim::simulate(&cp.plant, &cp.nlp, &mut comp, x0, &sim_cfg, &NoClock)
    };
    Ok(trace)
}

/// Runs one closed loop and writes `trace.csv` and `summary.txt` to `dir`.
fn simulate_into(problem: &Problem, cfg: &ExperimentConfig, ell: usize, dir: &Path) -> Result<SimOutcome> {
    let x0 = problem.initial_state(cfg)?;
    let (trace, n_x, n_u) = match problem {
        Problem::Spacecraft(cp) => (
            closed_loop(cp, cfg, ell, &x0)?,
            cp.plant.state_dim(),
            cp.plant.input_dim(),
        ),
        Problem::DoubleIntegrator(cp) => (
            closed_loop(cp, cfg, ell, &x0)?,
            cp.plant.state_dim(),
            cp.plant.input_dim(),
        ),
        Problem::TrackingQp => {
            return Err(Error::Unsupported {
                command: "simulate",
                problem: problem.kind().name(),
            })
        }
    };
    create_dir(dir)?;
    output::write_trace(&dir.join("trace.csv"), &trace, n_x, n_u)?;
    output::write_text(
        &dir.join("summary.txt"),
        &output::summary(problem.kind().name(), ell, &trace),
    )?;
    Ok(SimOutcome {
        ell,
        trace,
        dir: dir.to_path_buf(),
    })
}

fn echo_config(cfg: &ExperimentConfig) -> Result<()> {
    create_dir(&cfg.out_dir)?;
    output::write_text(&cfg.out_dir.join("config-echo.json"), &cfg.to_json())
}

/// Closed loop with `cfg.sspc.ell`; files go to `cfg.out_dir`. A solver abort
/// is reported through `trace.failure` with the partial trace written.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    let problem = Problem::build(cfg)?;
    echo_config(cfg)?;
    simulate_into(&problem, cfg, cfg.sspc.ell, &cfg.out_dir)
}

#[derive(Debug)]
pub struct SweepOutcome {
    /// In the order of `ell_values`; an entry is `Err` if that run could not
    /// start or its files could not be written.
    pub runs: Vec<Result<SimOutcome>>,
    pub metrics: Vec<MetricsRow>,
}

impl SweepOutcome {
    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| matches!(r, Ok(o) if o.trace.is_complete()))
    }
}

/// One closed loop per `ℓ`, run concurrently, each in `out_dir/ell_<ℓ>`,
/// plus `out_dir/metrics.csv` over the runs that produced a trace.
pub fn run_sweep_ell(cfg: &ExperimentConfig, ell_values: &[usize]) -> Result<SweepOutcome> {
    cfg.validate()?;
    if ell_values.is_empty() {
        return Err(Error::Config {
            line: 0,
            field: "sweep_ell".into(),
            message: "must not be empty".into(),
        });
    }
    let problem = Problem::build(cfg)?;
    echo_config(cfg)?;
    let runs: Vec<Result<SimOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = ell_values
            .iter()
            .map(|&ell| {
                let dir = cfg.out_dir.join(format!("ell_{ell}"));
                let problem = &problem;
                s.spawn(move || simulate_into(problem, cfg, ell, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let metrics: Vec<MetricsRow> = runs
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|o| MetricsRow::from_trace(o.ell, &o.trace))
        .collect();
    output::write_metrics(&cfg.out_dir.join("metrics.csv"), &metrics)?;
    Ok(SweepOutcome { runs, metrics })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub z: PrimalDualPoint,
    pub iterations: usize,
    pub residual: f64,
    /// First input of the plan, for OCPs.
    pub control: Option<Vec<f64>>,
}

/// Fully converged solve from `z = 0` at the initial state.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let problem = Problem::build(cfg)?;
    let p = problem.initial_state(cfg)?;
    let solver_cfg = cfg.solver();
    fn solve<N: ParametricNlp>(
        nlp: &N,
        cfg: &sspc_core::SspcConfig,
        p: &[f64],
    ) -> Result<(PrimalDualPoint, usize, f64)> {
        let (z, it) = solver::solve_to_convergence(nlp, cfg, &PrimalDualPoint::zeros(nlp.dims()), p)?;
        let r = sspc_core::nlp::residual(nlp, &z, p)?.norm2;
        Ok((z, it, r))
    }
    let ((z, iterations, residual), control) = match &problem {
        Problem::Spacecraft(cp) => {
            let out = solve(&cp.nlp, &solver_cfg, &p)?;
            let u = cp.layout.extract_control(&out.0);
            (out, Some(u))
        }
        Problem::DoubleIntegrator(cp) => {
            let out = solve(&cp.nlp, &solver_cfg, &p)?;
            let u = cp.layout.extract_control(&out.0);
            (out, Some(u))
        }
        Problem::TrackingQp => (solve(&TrackingQp, &solver_cfg, &p)?, None),
    };
    Ok(SolveOutcome {
        z,
        iterations,
        residual,
        control,
    })
}
