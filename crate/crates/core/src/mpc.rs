//! Suboptimal MPC as a dynamic compensator.
//!
//! The compensator keeps a primal-dual estimate `z` between samples and, at
//! each sample, moves it with one SSPC step towards the solution for the new
//! measurement:
//!
//! ```text
//! z_k = T_ℓ(z_{k-1}, x_k),   u_k = H z_k
//! ```

use alloc::vec::Vec;

use crate::nlp::{self, ParametricNlp, PrimalDualPoint};
use crate::numerics;
use crate::ocp::VariableLayout;
use crate::sspc::{self, SspcConfig, StepDiagnostics};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorState {
    pub z: PrimalDualPoint,
    /// Last measurement the estimate was moved to.
    pub p_prev: Vec<f64>,
    pub cfg: SspcConfig,
    pub layout: VariableLayout,
    pub last_diagnostics: StepDiagnostics,
}

/// Stores `z0` (zeros when `None`) and `x0`; no solver step is taken.
pub fn init_compensator<N: ParametricNlp + ?Sized>(
    nlp: &N,
    layout: &VariableLayout,
    cfg: &SspcConfig,
    z0: Option<PrimalDualPoint>,
    x0: &[f64],
) -> Result<CompensatorState> {
    cfg.validate()?;
    let dims = nlp.dims();
    if layout.dims() != dims {
        return Err(Error::dims("layout size", dims.z_len(), layout.dims().z_len()));
    }
    let z = z0.unwrap_or_else(|| PrimalDualPoint::zeros(dims));
    if !z.matches(dims) {
        return Err(Error::dims("initial estimate", dims.z_len(), z.len()));
    }
    if x0.len() != dims.n_p {
        return Err(Error::dims("initial state", dims.n_p, x0.len()));
    }
    Ok(CompensatorState {
        z,
        p_prev: x0.to_vec(),
        cfg: cfg.clone(),
        layout: layout.clone(),
        last_diagnostics: StepDiagnostics::default(),
    })
}

impl CompensatorState {
    /// One predictor and `ℓ` correctors towards the solution at `x_now`;
    /// returns `u = H z`. On error the state is left untouched.
    pub fn update<N: ParametricNlp + ?Sized>(&mut self, nlp: &N, x_now: &[f64]) -> Result<Vec<f64>> {
        if x_now.len() != self.p_prev.len() {
            return Err(Error::dims("measurement", self.p_prev.len(), x_now.len()));
        }
        let (z, diag) = sspc::step(nlp, &self.cfg, &self.z, &self.p_prev, x_now)?;
        if !z.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                what: "compensator iterate",
            });
        }
        self.z = z;
        self.p_prev.clear();
        self.p_prev.extend_from_slice(x_now);
        self.last_diagnostics = diag;
        Ok(self.control())
    }

    /// `H z` for the stored estimate.
    pub fn control(&self) -> Vec<f64> {
        self.layout.extract_control(&self.z)
    }

    /// `‖F(z, p_prev)‖₂` at the stored estimate.
    pub fn residual<N: ParametricNlp + ?Sized>(&self, nlp: &N) -> Result<f64> {
        Ok(nlp::residual(nlp, &self.z, &self.p_prev)?.norm2)
    }
}

/// The ideal MPC law: `u₀` of the fully converged solve at `x_now`.
pub fn ideal_control<N: ParametricNlp + ?Sized>(
    nlp: &N,
    layout: &VariableLayout,
    cfg: &SspcConfig,
    x_now: &[f64],
    z_warm: &PrimalDualPoint,
) -> Result<(Vec<f64>, PrimalDualPoint)> {
    let (z, _) = sspc::solve_to_convergence(nlp, cfg, z_warm, x_now)?;
    Ok((layout.extract_control(&z), z))
}

/// `‖H z - H z*(x_now)‖₂`, with the oracle warm-started from the stored
/// estimate.
pub fn suboptimality_error<N: ParametricNlp + ?Sized>(
    state: &CompensatorState,
    nlp: &N,
    x_now: &[f64],
) -> Result<f64> {
    let (u_star, _) = ideal_control(nlp, &state.layout, &state.cfg, x_now, &state.z)?;
    let u = state.control();
    let diff: Vec<f64> = u.iter().zip(&u_star).map(|(a, b)| a - b).collect();
    Ok(numerics::norm2(&diff))
}
