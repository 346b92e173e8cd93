//! Closed-loop simulation of plant and compensator.
//!
//! ```text
//! u_k     = update(compensator, x_k)
//! x_{k+1} = f_d(x_k, u_k + d_k)
//! ```

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::mpc::{self, CompensatorState};
use crate::nlp::PrimalDualPoint;
use crate::ocp::{self, OptimalControlProblem, TranscribedNlp};
use crate::spacecraft::{self, SpacecraftParams};
use crate::{Error, Result};

/// `f_d(0, 0)` must vanish to within this.
pub const EQUILIBRIUM_TOL: f64 = 1e-12;

type StepMap = Box<dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Discrete plant `x⁺ = f_d(x, u)`.
pub struct PlantModel {
    n_x: usize,
    n_u: usize,
    step: StepMap,
    tau: Option<f64>,
}

impl fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantModel")
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

impl PlantModel {
    /// Checks `f_d(0, 0) = 0`.
    pub fn new<F>(n_x: usize, n_u: usize, f_d: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        let plant = PlantModel {
            n_x,
            n_u,
            step: Box::new(f_d),
            tau: None,
        };
        let origin = (plant.step)(&vec![0.0; n_x], &vec![0.0; n_u])?;
        if origin.len() != n_x {
            return Err(Error::dims("plant successor", n_x, origin.len()));
        }
        if origin.iter().any(|v| !(v.abs() <= EQUILIBRIUM_TOL)) {
            return Err(Error::InvalidConfig("plant does not have an equilibrium at the origin"));
        }
        Ok(plant)
    }

    pub fn state_dim(&self) -> usize {
        self.n_x
    }

    pub fn input_dim(&self) -> usize {
        self.n_u
    }

    /// Attaches a sampling period, used for the trace time axis.
    pub fn with_sampling_time(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidConfig("tau must be positive"));
        }
        self.tau = Some(tau);
        Ok(self)
    }

    /// Sampling period, if known.
    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_x {
            return Err(Error::dims("plant state", self.n_x, x.len()));
        }
        if u.len() != self.n_u {
            return Err(Error::dims("plant input", self.n_u, u.len()));
        }
        let next = (self.step)(x, u)?;
        if next.len() != self.n_x {
            return Err(Error::dims("plant successor", self.n_x, next.len()));
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation { what: "plant successor" });
        }
        Ok(next)
    }
}

/// `f_d(x, u) = x + τ f_c(x, u)`.
pub fn euler_discretize<F>(n_x: usize, n_u: usize, f_c: F, tau: f64) -> Result<PlantModel>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
{
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig("tau must be positive"));
    }
    PlantModel::new(n_x, n_u, move |x, u| {
        let f = f_c(x, u)?;
        if f.len() != x.len() {
            return Err(Error::dims("continuous field", x.len(), f.len()));
        }
        Ok(x.iter().zip(f).map(|(xi, fi)| xi + tau * fi).collect())
    })?
    .with_sampling_time(tau)
}

/// The spacecraft plant, sharing its model with the OCP.
pub fn spacecraft_plant(params: &SpacecraftParams) -> Result<PlantModel> {
    params.validate()?;
    let p = params.clone();
    euler_discretize(
        spacecraft::STATE_DIM,
        spacecraft::INPUT_DIM,
        move |x, u| Ok(spacecraft::attitude_field(&p, x, u)?.to_vec()),
        params.tau,
    )
}

/// Source of wall-clock seconds for timing the compensator update.
pub trait Clock {
    /// Monotonic seconds, or `None` if timing is unavailable.
    fn now(&self) -> Option<f64>;
}

/// No timing; `wall` stays empty.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub steps: usize,
    /// Runs the convergence oracle at every sample.
    pub record_suboptimality: bool,
    /// Additive input disturbance per step; missing entries are zero.
    pub input_disturbance: Vec<Vec<f64>>,
    /// Store `z_k` in each record.
    pub keep_iterates: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            steps: 200,
            record_suboptimality: false,
            input_disturbance: Vec::new(),
            keep_iterates: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub k: usize,
    /// `k τ` in seconds (`k` when the plant has no sampling period).
    pub t: f64,
    pub x: Vec<f64>,
    /// Compensator output `u_k`; the plant receives `u_k + d_k`.
    pub u: Vec<f64>,
    pub disturbance: Vec<f64>,
    /// `‖F(z_k, x_k)‖₂`.
    pub residual: f64,
    /// Plan cost `J(z_k; x_k)`.
    pub cost: f64,
    /// `l(x_k, u_k)`.
    pub stage_cost: f64,
    /// Path-constraint values `c(x_k, u_k)`; nonpositive is satisfied.
    pub margins: Vec<f64>,
    /// `max(0, max margins)`.
    pub max_violation: f64,
    pub subopt: Option<f64>,
    pub ell: usize,
    /// Compensator update time in seconds.
    pub wall: Option<f64>,
    pub z: Option<PrimalDualPoint>,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub records: Vec<SimRecord>,
    /// Cause of an early abort; `records` then holds the steps completed.
    pub failure: Option<Error>,
}

impl SimTrace {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// `Σ_k l(x_k, u_k)` over the recorded steps.
    pub fn cumulative_cost(&self) -> f64 {
        self.records.iter().map(|r| r.stage_cost).sum()
    }

    pub fn max_violation(&self) -> f64 {
        self.records.iter().map(|r| r.max_violation).fold(0.0, f64::max)
    }

    /// First time the residual is at or below `level`.
    pub fn first_time_below(&self, level: f64) -> Option<f64> {
        self.records.iter().find(|r| r.residual <= level).map(|r| r.t)
    }
}

/// `c(x, u)` componentwise.
pub fn constraint_margins<O: OptimalControlProblem + ?Sized>(ocp: &O, x: &[f64], u: &[f64]) -> Vec<f64> {
    ocp.path_constraints(x, u)
}

/// Runs `cfg.steps + 1` samples (the last one records the final state and
/// the compensator's response to it). Solver and plant errors stop the run;
/// the trace then holds the samples completed so far.
pub fn simulate<O: OptimalControlProblem, C: Clock + ?Sized>(
    plant: &PlantModel,
    nlp: &TranscribedNlp<O>,
    compensator: &mut CompensatorState,
    x0: &[f64],
    cfg: &SimConfig,
    clock: &C,
) -> SimTrace {
    let mut records = Vec::with_capacity(cfg.steps + 1);
    let failure = run(plant, nlp, compensator, x0, cfg, clock, &mut records).err();
    if let Some(e) = &failure {
        log::warn!("simulation stopped after {} samples: {e}", records.len());
    }
    SimTrace { records, failure }
}

fn run<O: OptimalControlProblem, C: Clock + ?Sized>(
    plant: &PlantModel,
    nlp: &TranscribedNlp<O>,
    compensator: &mut CompensatorState,
    x0: &[f64],
    cfg: &SimConfig,
    clock: &C,
    records: &mut Vec<SimRecord>,
) -> Result<()> {
    cfg.validate()?;
    let ocp = nlp.ocp();
    if x0.len() != plant.state_dim() || x0.len() != ocp.state_dim() {
        return Err(Error::dims("initial state", ocp.state_dim(), x0.len()));
    }
    if plant.input_dim() != ocp.input_dim() {
        return Err(Error::dims("plant input", ocp.input_dim(), plant.input_dim()));
    }
    let tau = plant.tau().unwrap_or(1.0);
    let mut x = x0.to_vec();
    for k in 0..=cfg.steps {
        let start = clock.now();
        let u = compensator.update(nlp, &x)?;
        let wall = match (start, clock.now()) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        let residual = compensator.last_diagnostics.final_residual();
        let cost = ocp::plan_cost(nlp, &compensator.z, &x)?;
        let subopt = if cfg.record_suboptimality {
            Some(mpc::suboptimality_error(compensator, nlp, &x)?)
        } else {
            None
        };
        let margins = constraint_margins(ocp, &x, &u);
        let max_violation = margins.iter().copied().fold(0.0, f64::max);
        let disturbance = match cfg.input_disturbance.get(k) {
            Some(d) if d.len() == u.len() => d.clone(),
            Some(d) => return Err(Error::dims("input disturbance", u.len(), d.len())),
            None => vec![0.0; u.len()],
        };
        let next = if k < cfg.steps {
            let applied: Vec<f64> = u.iter().zip(&disturbance).map(|(a, b)| a + b).collect();
            Some(plant.step(&x, &applied)?)
        } else {
            None
        };
        records.push(SimRecord {
            k,
            t: k as f64 * tau,
            stage_cost: ocp.stage_cost(&x, &u),
            x: x.clone(),
            u,
            disturbance,
            residual,
            cost,
            margins,
            max_violation,
            subopt,
            ell: compensator.cfg.ell,
            wall,
            z: cfg.keep_iterates.then(|| compensator.z.clone()),
        });
        if let Some(next) = next {
            x = next;
        }
    }
    Ok(())
}
