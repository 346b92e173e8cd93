//! Finite-difference audit of every analytic derivative callback.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sspc_core::nlp::{self, BlockCheck};
use sspc_core::numerics::{self, DenseMatrix, MatrixDiscrepancy};
use sspc_core::ocp::OptimalControlProblem;
use sspc_core::problems::TrackingQp;
use sspc_core::{ParametricNlp, PrimalDualPoint};

use crate::config::ExperimentConfig;
use crate::problem::Problem;
use crate::Result;

pub const FD_ATOL: f64 = 1e-6;
pub const FD_RTOL: f64 = 1e-5;
/// Random points per problem at the OCP level (or NLP level for bare NLPs).
pub const POINTS: usize = 100;
/// Full-NLP points for transcribed OCPs, where one check costs O(n²) evaluations.
pub const NLP_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWorst {
    pub scope: &'static str,
    pub block: &'static str,
    pub worst: MatrixDiscrepancy,
    /// Index of the sample where the worst ratio occurred.
    pub point: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivativeReport {
    pub blocks: Vec<BlockWorst>,
    pub points: usize,
}

impl DerivativeReport {
    pub fn passes(&self) -> bool {
        self.blocks.iter().all(|b| b.worst.passes())
    }

    pub fn max_abs_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.worst.max_abs_error).fold(0.0, f64::max)
    }

    pub fn failing_blocks(&self) -> Vec<&'static str> {
        self.blocks
            .iter()
            .filter(|b| !b.worst.passes())
            .map(|b| b.block)
            .collect()
    }

    /// Blocks sorted by worst tolerance ratio, largest first.
    pub fn worst_offenders(&self, n: usize) -> Vec<&BlockWorst> {
        let mut v: Vec<&BlockWorst> = self.blocks.iter().collect();
        v.sort_by(|a, b| b.worst.worst_ratio.total_cmp(&a.worst.worst_ratio));
        v.truncate(n);
        v
    }

    fn record(&mut self, scope: &'static str, block: &'static str, d: MatrixDiscrepancy, point: usize) {
        match self.blocks.iter_mut().find(|b| b.scope == scope && b.block == block) {
            Some(b) => {
                if d.worst_ratio > b.worst.worst_ratio {
                    b.worst = d;
                    b.point = point;
                }
            }
            None => self.blocks.push(BlockWorst {
                scope,
                block,
                worst: d,
                point,
            }),
        }
    }

    fn merge(&mut self, other: DerivativeReport) {
        self.points += other.points;
        for b in other.blocks {
            self.record(b.scope, b.block, b.worst, b.point);
        }
    }
}

impl fmt::Display for DerivativeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.worst_offenders(self.blocks.len()) {
            writeln!(
                f,
                "{} {:<4} {:<32} max_abs_err {:.3e}  ratio {:.3e}  entry {:?}  point {}",
                if b.worst.passes() { "ok  " } else { "FAIL" },
                b.scope,
                b.block,
                b.worst.max_abs_error,
                b.worst.worst_ratio,
                b.worst.worst_entry,
                b.point,
            )?;
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, bounds: &[f64]) -> Vec<f64> {
    bounds.iter().map(|&b| rng.random_range(-b..=b)).collect()
}

/// Every OCP callback at `points` samples with `|x_i| <= x_box[i]`,
/// `|u_i| <= u_box[i]`.
pub fn check_ocp<O: OptimalControlProblem>(
    ocp: &O,
    rng: &mut impl Rng,
    points: usize,
    x_box: &[f64],
    u_box: &[f64],
) -> Result<DerivativeReport> {
    let n_x = ocp.state_dim();
    let mut report = DerivativeReport::default();
    let cmp = |a: &DenseMatrix, b: &DenseMatrix| numerics::compare_matrices(a, b, FD_ATOL, FD_RTOL);
    let row = |v: Vec<f64>| DenseMatrix::from_rows(&[v]);
    for k in 0..points {
        let x = uniform(rng, x_box);
        let u = uniform(rng, u_box);
        let xu: Vec<f64> = x.iter().chain(&u).copied().collect();
        let h = numerics::default_fd_step(&xu);
        let hx = numerics::default_fd_step(&x);
        let split = |v: &[f64]| (v[..n_x].to_vec(), v[n_x..].to_vec());

        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                ocp.dynamics(&x, &u)
            },
            &xu,
            h,
        )?;
        report.record("ocp", "dynamics Jacobian", cmp(&ocp.dynamics_jacobian(&x, &u), &fd)?, k);
        let wd = uniform(rng, &vec![1.0; n_x]);
        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                ocp.dynamics_jacobian(&x, &u).tr_matvec(&wd)
            },
            &xu,
            h,
        )?;
        report.record(
            "ocp",
            "dynamics Hessian",
            cmp(&ocp.dynamics_hessian(&x, &u, &wd), &fd)?,
            k,
        );

        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                vec![ocp.stage_cost(&x, &u)]
            },
            &xu,
            h,
        )?;
        report.record(
            "ocp",
            "stage cost gradient",
            cmp(&row(ocp.stage_cost_gradient(&x, &u)), &fd)?,
            k,
        );
        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                ocp.stage_cost_gradient(&x, &u)
            },
            &xu,
            h,
        )?;
        report.record(
            "ocp",
            "stage cost Hessian",
            cmp(&ocp.stage_cost_hessian(&x, &u), &fd)?,
            k,
        );

        let fd = numerics::fd_jacobian(|v| vec![ocp.terminal_cost(v)], &x, hx)?;
        report.record(
            "ocp",
            "terminal cost gradient",
            cmp(&row(ocp.terminal_cost_gradient(&x)), &fd)?,
            k,
        );
        let fd = numerics::fd_jacobian(|v| ocp.terminal_cost_gradient(v), &x, hx)?;
        report.record(
            "ocp",
            "terminal cost Hessian",
            cmp(&ocp.terminal_cost_hessian(&x), &fd)?,
            k,
        );

        if ocp.path_constraint_count() > 0 {
            let fd = numerics::fd_jacobian(
                |v| {
                    let (x, u) = split(v);
                    ocp.path_constraints(&x, &u)
                },
                &xu,
                h,
            )?;
            report.record(
                "ocp",
                "path constraint Jacobian",
                cmp(&ocp.path_jacobian(&x, &u), &fd)?,
                k,
            );
            let wc = uniform(rng, &vec![1.0; ocp.path_constraint_count()]);
            let fd = numerics::fd_jacobian(
                |v| {
                    let (x, u) = split(v);
                    ocp.path_jacobian(&x, &u).tr_matvec(&wc)
                },
                &xu,
                h,
            )?;
            report.record(
                "ocp",
                "path constraint Hessian",
                cmp(&ocp.path_hessian(&x, &u, &wc), &fd)?,
                k,
            );
        }
        if ocp.terminal_constraint_count() > 0 {
            let fd = numerics::fd_jacobian(|v| ocp.terminal_constraints(v), &x, hx)?;
            report.record(
                "ocp",
                "terminal constraint Jacobian",
                cmp(&ocp.terminal_jacobian(&x), &fd)?,
                k,
            );
            let wt = uniform(rng, &vec![1.0; ocp.terminal_constraint_count()]);
            let fd = numerics::fd_jacobian(|v| ocp.terminal_jacobian(v).tr_matvec(&wt), &x, hx)?;
            report.record(
                "ocp",
                "terminal constraint Hessian",
                cmp(&ocp.terminal_hessian(&x, &wt), &fd)?,
                k,
            );
        }
    }
    report.points = points;
    Ok(report)
}

/// Every NLP callback at `points` samples; `sample` draws `(z, p)`.
pub fn check_nlp<N: ParametricNlp + ?Sized, R: Rng>(
    nlp: &N,
    rng: &mut R,
    points: usize,
    mut sample: impl FnMut(&mut R) -> (PrimalDualPoint, Vec<f64>),
) -> Result<DerivativeReport> {
    let mut report = DerivativeReport::default();
    for k in 0..points {
        let (z, p) = sample(rng);
        for BlockCheck { block, discrepancy } in nlp::check_derivatives(nlp, &z, &p, FD_ATOL, FD_RTOL)? {
            report.record("nlp", block, discrepancy, k);
        }
    }
    report.points = points;
    Ok(report)
}

/// Small random primal-dual point with nonnegative multipliers `v`.
fn sample_point(rng: &mut impl Rng, nlp: &impl ParametricNlp, w: f64, lambda: f64, v: f64) -> PrimalDualPoint {
    let d = nlp.dims();
    PrimalDualPoint {
        w: uniform(rng, &vec![w; d.n]),
        lambda: uniform(rng, &vec![lambda; d.m]),
        v: (0..d.q).map(|_| rng.random_range(0.0..=v)).collect(),
    }
}

/// Seeded audit of the configured problem.
pub fn run_check_derivatives(cfg: &ExperimentConfig) -> Result<DerivativeReport> {
    let problem = Problem::build(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(match &problem {
        Problem::Spacecraft(cp) => {
            let ocp = cp.nlp.ocp();
            let rates = 2.5 * ocp.params.omega_bound;
            let x_box = [rates, rates, rates, 1.0, 1.0, 1.0];
            let u_box = [1.5 * ocp.params.u_bound; 3];
            let mut report = check_ocp(ocp, &mut rng, POINTS, &x_box, &u_box)?;
            report.merge(check_nlp(&cp.nlp, &mut rng, NLP_POINTS, |rng| {
                let z = sample_point(rng, &cp.nlp, 0.01, 1.0, 10.0);
                let p = uniform(rng, &[0.02, 0.02, 0.02, 0.5, 0.5, 0.5]);
                (z, p)
            })?);
            report
        }
        Problem::DoubleIntegrator(cp) => {
            let mut report = check_ocp(cp.nlp.ocp(), &mut rng, POINTS, &[2.0, 2.0], &[2.0])?;
            report.merge(check_nlp(&cp.nlp, &mut rng, NLP_POINTS, |rng| {
                (sample_point(rng, &cp.nlp, 1.0, 1.0, 1.0), uniform(rng, &[2.0, 2.0]))
            })?);
            report
        }
        Problem::TrackingQp => check_nlp(&TrackingQp, &mut rng, POINTS, |rng| {
            (sample_point(rng, &TrackingQp, 3.0, 1.0, 2.0), uniform(rng, &[3.0]))
        })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemKind;

    #[test]
    fn double_integrator_passes() {
        let report = run_check_derivatives(&ExperimentConfig::new(ProblemKind::DoubleIntegrator)).unwrap();
        assert!(report.passes(), "{report}");
        assert_eq!(report.points, POINTS + NLP_POINTS);
    }

    #[test]
    fn keeps_worst_per_block() {
        let d = |r: f64| MatrixDiscrepancy {
            max_abs_error: r,
            worst_ratio: r,
            worst_entry: (0, 0),
        };
        let mut report = DerivativeReport::default();
        report.record("nlp", "a", d(0.5), 0);
        report.record("nlp", "a", d(2.0), 1);
        report.record("nlp", "a", d(1.0), 2);
        report.record("nlp", "b", d(0.1), 0);
        assert_eq!(report.blocks.len(), 2);
        assert_eq!(report.blocks[0].point, 1);
        assert_eq!(report.failing_blocks(), ["a"]);
        assert_eq!(report.worst_offenders(1)[0].block, "a");
    }
}
