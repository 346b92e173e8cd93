//! The semismooth predictor-corrector iteration.
//!
//! Given a tracked point `z_prev` for parameter `p_prev` and a new parameter
//! `p_new`, one step solves
//!
//! ```text
//! predictor:  ∂p F(z_prev, p_prev) (p_new - p_prev) + ∂z F(z_prev, p_prev) (z̄ - z_prev) = 0
//! corrector:  F(z̄, p_new) + ∂z F(z̄, p_new) (z - z̄) = 0        (repeated ℓ times)
//! ```
//!
//! There is no line search: divergence shows up in [`StepDiagnostics`].

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::math;
use crate::nlp::{self, EvalRequest, KktSystem, ParametricNlp, PrimalDualPoint};
use crate::numerics::LuFactorization;
use crate::{Error, Result};

/// Primal-block shift used when a Jacobian factorization fails.
pub const RESCUE_SHIFT: f64 = 1e-8;

/// Residual growth factor above which a warning is logged.
const GROWTH_WARNING: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SspcConfig {
    /// Corrector iterations per parameter update.
    pub ell: usize,
    pub use_predictor: bool,
    /// `δ` in the `∇²w L + δ I` block; 0 uses the Hessian as supplied.
    pub regularization_delta: f64,
    pub oracle_tol: f64,
    pub oracle_max_iter: usize,
}

impl Default for SspcConfig {
    fn default() -> Self {
        SspcConfig {
            ell: 1,
            use_predictor: true,
            regularization_delta: 0.0,
            oracle_tol: 1e-10,
            oracle_max_iter: 100,
        }
    }
}

impl SspcConfig {
    pub fn with_ell(ell: usize) -> Self {
        SspcConfig {
            ell,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.oracle_tol > 0.0) {
            return Err(Error::InvalidConfig("oracle_tol must be positive"));
        }
        if !(self.regularization_delta >= 0.0) || !self.regularization_delta.is_finite() {
            return Err(Error::InvalidConfig("regularization_delta must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Residual history of one [`step`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    /// `‖F(z_prev, p_new)‖`.
    pub residual_before: f64,
    /// `‖F(z̄, p_new)‖`; equals `residual_before` when no predictor ran.
    pub residual_after_predictor: f64,
    /// `‖F‖` after each corrector, length `ℓ`.
    pub residual_after_each_corrector: Vec<f64>,
    pub linear_solve_count: usize,
    pub singular_rescues: usize,
}

impl StepDiagnostics {
    /// Residual at the returned point.
    pub fn final_residual(&self) -> f64 {
        self.residual_after_each_corrector
            .last()
            .copied()
            .unwrap_or(self.residual_after_predictor)
    }
}

/// Solves `∂z F · dz = rhs`, retrying once with a shifted primal block.
fn newton_solve<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z: &PrimalDualPoint,
    p: &[f64],
    request: EvalRequest,
    rhs: impl Fn(&KktSystem) -> Vec<f64>,
    rescues: &mut usize,
) -> Result<(Vec<f64>, KktSystem)> {
    let sys = nlp::evaluate(nlp, z, p, request)?;
    let jz = sys.jacobian_z.as_ref().expect("Jacobian requested");
    let b = rhs(&sys);
    match LuFactorization::new(jz) {
        Ok(lu) => Ok((lu.solve(&b)?, sys)),
        Err(Error::SingularMatrix { .. }) => {
            *rescues += 1;
            let shift = request.hessian_shift + RESCUE_SHIFT;
            log::debug!("singular KKT Jacobian, retrying with primal shift {shift:e}");
            let retry = nlp::evaluate(
                nlp,
                z,
                p,
                EvalRequest {
                    jacobian_z: true,
                    jacobian_p: false,
                    hessian_shift: shift,
                },
            )?;
            let lu = LuFactorization::new(retry.jacobian_z.as_ref().expect("Jacobian requested"))?;
            Ok((lu.solve(&b)?, sys))
        }
        Err(e) => Err(e),
    }
}

fn predictor_impl<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z_prev: &PrimalDualPoint,
    p_prev: &[f64],
    p_new: &[f64],
    delta: f64,
    rescues: &mut usize,
) -> Result<PrimalDualPoint> {
    if p_prev.len() != p_new.len() {
        return Err(Error::dims("predictor parameter", p_prev.len(), p_new.len()));
    }
    let dp: Vec<f64> = p_new.iter().zip(p_prev).map(|(a, b)| a - b).collect();
    if dp.iter().all(|&d| d == 0.0) {
        return Ok(z_prev.clone());
    }
    let request = EvalRequest {
        jacobian_z: true,
        jacobian_p: true,
        hessian_shift: delta,
    };
    let (dz, _) = newton_solve(
        nlp,
        z_prev,
        p_prev,
        request,
        |sys| {
            let mut b = sys.jacobian_p.as_ref().expect("requested").matvec(&dp);
            b.iter_mut().for_each(|x| *x = -*x);
            b
        },
        rescues,
    )?;
    Ok(z_prev.add_stacked(&dz))
}

/// Returns the corrected point and the residual norm at `z_bar`.
fn corrector_impl<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z_bar: &PrimalDualPoint,
    p: &[f64],
    delta: f64,
    rescues: &mut usize,
) -> Result<(PrimalDualPoint, f64)> {
    let request = EvalRequest {
        jacobian_z: true,
        jacobian_p: false,
        hessian_shift: delta,
    };
    let (dz, sys) = newton_solve(
        nlp,
        z_bar,
        p,
        request,
        |sys| sys.residual.to_stacked().into_iter().map(|x| -x).collect(),
        rescues,
    )?;
    Ok((z_bar.add_stacked(&dz), sys.residual.norm2))
}

/// Euler predictor along the solution path from `p_prev` to `p_new`.
///
/// Returns `z_prev` unchanged when the parameter does not move.
pub fn predictor<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z_prev: &PrimalDualPoint,
    p_prev: &[f64],
    p_new: &[f64],
) -> Result<PrimalDualPoint> {
    predictor_impl(nlp, z_prev, p_prev, p_new, 0.0, &mut 0)
}

/// One semismooth Newton iteration at fixed `p`.
pub fn corrector<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z_bar: &PrimalDualPoint,
    p: &[f64],
) -> Result<PrimalDualPoint> {
    corrector_impl(nlp, z_bar, p, 0.0, &mut 0).map(|(z, _)| z)
}

fn at_solve(iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::StepFailed {
        iteration,
        source: Box::new(e),
    }
}

/// One SSPC update: the predictor (if enabled) followed by `ℓ` correctors at
/// `p_new`.
///
/// Errors are wrapped in [`Error::StepFailed`] with the index of the failing
/// solve (0 for the predictor, `j` for the `j`-th corrector).
pub fn step<N: ParametricNlp + ?Sized>(
    nlp: &N,
    cfg: &SspcConfig,
    z_prev: &PrimalDualPoint,
    p_prev: &[f64],
    p_new: &[f64],
) -> Result<(PrimalDualPoint, StepDiagnostics)> {
    cfg.validate()?;
    let delta = cfg.regularization_delta;
    let mut diag = StepDiagnostics::default();
    diag.residual_before = nlp::residual(nlp, z_prev, p_new)?.norm2;

    let mut z = if cfg.use_predictor && p_prev != p_new {
        let z_bar = predictor_impl(nlp, z_prev, p_prev, p_new, delta, &mut diag.singular_rescues)
            .map_err(at_solve(0))?;
        diag.linear_solve_count += 1;
        z_bar
    } else {
        z_prev.clone()
    };
    if cfg.ell == 0 {
        diag.residual_after_predictor = if diag.linear_solve_count > 0 {
            nlp::residual(nlp, &z, p_new)?.norm2
        } else {
            diag.residual_before
        };
        return Ok((z, diag));
    }

    let mut last = f64::NAN;
    for j in 0..cfg.ell {
        let (next, r_at_z) = corrector_impl(nlp, &z, p_new, delta, &mut diag.singular_rescues)
            .map_err(at_solve(j + 1))?;
        diag.linear_solve_count += 1;
        if j == 0 {
            diag.residual_after_predictor = r_at_z;
        } else {
            diag.residual_after_each_corrector.push(r_at_z);
        }
        last = r_at_z;
        z = next;
    }
    let r_final = nlp::residual(nlp, &z, p_new)?.norm2;
    diag.residual_after_each_corrector.push(r_final);
    if r_final > GROWTH_WARNING * last && r_final > GROWTH_WARNING * diag.residual_before {
        log::warn!(
            "SSPC residual grew from {:e} to {:e}; iterate may be outside the region of quadratic convergence",
            diag.residual_before,
            r_final
        );
    }
    Ok((z, diag))
}

/// Repeats the corrector at fixed `p` until `‖F‖ <= oracle_tol`.
///
/// Returns the converged point and the number of corrector iterations. On
/// failure the error carries the best iterate seen.
pub fn solve_to_convergence<N: ParametricNlp + ?Sized>(
    nlp: &N,
    cfg: &SspcConfig,
    z0: &PrimalDualPoint,
    p: &[f64],
) -> Result<(PrimalDualPoint, usize)> {
    cfg.validate()?;
    let mut z = z0.clone();
    let mut best = (z0.clone(), f64::INFINITY);
    let mut rescues = 0;
    for it in 0..=cfg.oracle_max_iter {
        let r = nlp::residual(nlp, &z, p)?.norm2;
        if r < best.1 {
            best = (z.clone(), r);
        }
        if r <= cfg.oracle_tol {
            return Ok((z, it));
        }
        if it == cfg.oracle_max_iter {
            break;
        }
        match corrector_impl(nlp, &z, p, cfg.regularization_delta, &mut rescues) {
            Ok((next, _)) if next.is_finite() => z = next,
            Ok(_) | Err(Error::SingularMatrix { .. }) | Err(Error::NonFiniteEvaluation { .. }) => {
                return Err(Error::SolveFailed {
                    iterations: it,
                    residual: best.1,
                    best: Box::new(best.0),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::SolveFailed {
        iterations: cfg.oracle_max_iter,
        residual: best.1,
        best: Box::new(best.0),
    })
}

/// `r_after / r_before²` for each consecutive corrector pair, starting from
/// the post-predictor residual of each step. `0/0` is reported as 0.
pub fn convergence_ratios(diags: &[StepDiagnostics]) -> Vec<f64> {
    let mut out = Vec::new();
    for d in diags {
        let mut prev = d.residual_after_predictor;
        for &r in &d.residual_after_each_corrector {
            let ratio = if r == 0.0 {
                0.0
            } else if prev == 0.0 {
                f64::INFINITY
            } else {
                r / (prev * prev)
            };
            out.push(ratio);
            prev = r;
        }
    }
    out
}

/// Least-squares slope of `log r_{k+1}` against `log r_k` over the residuals
/// in `(floor, threshold]`: ≈ 2 for quadratic convergence.
///
/// Returns `None` with fewer than two usable pairs.
pub fn convergence_order(residuals: &[f64], threshold: f64, floor: f64) -> Option<f64> {
    let usable = |r: f64| r > floor && r <= threshold;
    let pairs: Vec<(f64, f64)> = residuals
        .windows(2)
        .filter(|w| usable(w[0]) && usable(w[1]))
        .map(|w| (math::ln(w[0]), math::ln(w[1])))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
