//! Small built-in problems used by tests, demos and the CLI.

use alloc::vec;
use alloc::vec::Vec;

use crate::nlp::{NlpDims, ParametricNlp, PrimalDualPoint};
use crate::numerics::{self, DenseMatrix};
use crate::ocp::OptimalControlProblem;
use crate::Result;

/// `min ½ (w - p)²  s.t.  w >= 1`, written as `h = 1 - w <= 0`.
///
/// Solution map: `w*(p) = max(p, 1)`, `v*(p) = max(0, 1 - p)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrackingQp;

impl TrackingQp {
    pub fn solution(p: f64) -> PrimalDualPoint {
        PrimalDualPoint {
            w: vec![p.max(1.0)],
            lambda: vec![],
            v: vec![(1.0 - p).max(0.0)],
        }
    }
}

impl ParametricNlp for TrackingQp {
    fn dims(&self) -> NlpDims {
        NlpDims { n: 1, m: 0, q: 1, n_p: 1 }
    }
    fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
        0.5 * (w[0] - p[0]) * (w[0] - p[0])
    }
    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        vec![w[0] - p[0]]
    }
    fn equality(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn equality_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        DenseMatrix::zeros(0, 1)
    }
    fn equality_param_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        DenseMatrix::zeros(0, 1)
    }
    fn inequality(&self, w: &[f64], _: &[f64]) -> Vec<f64> {
        vec![1.0 - w[0]]
    }
    fn inequality_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        DenseMatrix::from_rows(&[[-1.0]])
    }
    fn inequality_param_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        DenseMatrix::zeros(1, 1)
    }
    fn lagrangian_hessian(&self, _: &PrimalDualPoint, _: &[f64]) -> DenseMatrix {
        DenseMatrix::identity(1)
    }
    fn lagrangian_param_jacobian(&self, _: &PrimalDualPoint, _: &[f64]) -> DenseMatrix {
        DenseMatrix::from_rows(&[[-1.0]])
    }
}

/// Dense QP with the parameter entering linearly everywhere:
///
/// ```text
/// min ½ wᵀ H w + wᵀ (F p + c)
/// s.t. A w - E p - b = 0,   C w - G p - d <= 0
/// ```
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub hessian: DenseMatrix,
    pub linear_param: DenseMatrix,
    pub linear: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub eq_param: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: DenseMatrix,
    pub ineq_param: DenseMatrix,
    pub ineq_rhs: Vec<f64>,
}

fn affine(m: &DenseMatrix, x: &[f64], e: &DenseMatrix, p: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mx = m.matvec(x);
    let ep = e.matvec(p);
    mx.iter().zip(&ep).zip(rhs).map(|((a, b), c)| a - b - c).collect()
}

impl ParametricNlp for DenseQp {
    fn dims(&self) -> NlpDims {
        NlpDims {
            n: self.hessian.rows(),
            m: self.eq_matrix.rows(),
            q: self.ineq_matrix.rows(),
            n_p: self.linear_param.cols(),
        }
    }
    fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
        let lin: Vec<f64> = self
            .linear_param
            .matvec(p)
            .iter()
            .zip(&self.linear)
            .map(|(a, b)| a + b)
            .collect();
        0.5 * self.hessian.quad_form(w) + numerics::dot(w, &lin)
    }
    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        let hw = self.hessian.matvec(w);
        let fp = self.linear_param.matvec(p);
        hw.iter()
            .zip(&fp)
            .zip(&self.linear)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
    fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        affine(&self.eq_matrix, w, &self.eq_param, p, &self.eq_rhs)
    }
    fn equality_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        self.eq_matrix.clone()
    }
    fn equality_param_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        self.eq_param.scale(-1.0)
    }
    fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        affine(&self.ineq_matrix, w, &self.ineq_param, p, &self.ineq_rhs)
    }
    fn inequality_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        self.ineq_matrix.clone()
    }
    fn inequality_param_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        self.ineq_param.scale(-1.0)
    }
    fn lagrangian_hessian(&self, _: &PrimalDualPoint, _: &[f64]) -> DenseMatrix {
        self.hessian.clone()
    }
    fn lagrangian_param_jacobian(&self, _: &PrimalDualPoint, _: &[f64]) -> DenseMatrix {
        self.linear_param.clone()
    }
}

/// Linear dynamics with quadratic costs `xᵀQx + uᵀRu`, `V_f = xᵀPx`, optional
/// symmetric box bounds on states and inputs and an optional ellipsoidal
/// terminal constraint `xᵀPx <= level`.
#[derive(Debug, Clone)]
pub struct LinearQuadraticOcp {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub p: DenseMatrix,
    pub horizon: usize,
    pub state_bound: Option<f64>,
    pub input_bound: Option<f64>,
    pub terminal_level: Option<f64>,
}

impl LinearQuadraticOcp {
    /// `x⁺ = x + u`, `l = x² + u²`, `V_f = x²`, one stage, `|u| <= input_bound`.
    ///
    /// The optimal law is `u = clamp(-x/2, -input_bound, input_bound)`.
    pub fn scalar_integrator(input_bound: f64) -> Self {
        let one = DenseMatrix::identity(1);
        LinearQuadraticOcp {
            a: one.clone(),
            b: one.clone(),
            q: one.clone(),
            r: one.clone(),
            p: one,
            horizon: 1,
            state_bound: None,
            input_bound: Some(input_bound),
            terminal_level: None,
        }
    }

    /// Sampled double integrator (`dt = 0.1`) with `Q = I`, `R = 0.1`,
    /// LQR terminal cost and `|u| <= 1`.
    pub fn double_integrator(horizon: usize) -> Result<Self> {
        let dt = 0.1;
        let a = DenseMatrix::from_rows(&[[1.0, dt], [0.0, 1.0]]);
        let b = DenseMatrix::from_rows(&[[0.5 * dt * dt], [dt]]);
        let q = DenseMatrix::identity(2);
        let r = DenseMatrix::from_rows(&[[0.1]]);
        let dare = numerics::solve_dare(&a, &b, &q, &r, numerics::DARE_TOLERANCE, numerics::DARE_MAX_ITER)?;
        Ok(LinearQuadraticOcp {
            a,
            b,
            q,
            r,
            p: dare.p,
            horizon,
            state_bound: None,
            input_bound: Some(1.0),
            terminal_level: None,
        })
    }

    fn n_x(&self) -> usize {
        self.a.rows()
    }

    fn n_u(&self) -> usize {
        self.b.cols()
    }

    fn state_rows(&self) -> usize {
        if self.state_bound.is_some() {
            2 * self.n_x()
        } else {
            0
        }
    }
}

/// Rows `y_j - b` then `-y_j - b` of a symmetric box on `y`.
fn box_rows(y: &[f64], bound: f64, out: &mut Vec<f64>) {
    out.extend(y.iter().map(|v| v - bound));
    out.extend(y.iter().map(|v| -v - bound));
}

impl OptimalControlProblem for LinearQuadraticOcp {
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn state_dim(&self) -> usize {
        self.n_x()
    }
    fn input_dim(&self) -> usize {
        self.n_u()
    }
    fn path_constraint_count(&self) -> usize {
        self.state_rows() + if self.input_bound.is_some() { 2 * self.n_u() } else { 0 }
    }
    fn terminal_constraint_count(&self) -> usize {
        usize::from(self.terminal_level.is_some())
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let ax = self.a.matvec(x);
        let bu = self.b.matvec(u);
        ax.iter().zip(&bu).map(|(a, b)| a + b).collect()
    }
    fn dynamics_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        let (nx, nu) = (self.n_x(), self.n_u());
        let mut j = DenseMatrix::zeros(nx, nx + nu);
        j.add_block(0, 0, &self.a, 1.0);
        j.add_block(0, nx, &self.b, 1.0);
        j
    }
    fn dynamics_hessian(&self, _: &[f64], _: &[f64], _: &[f64]) -> DenseMatrix {
        let k = self.n_x() + self.n_u();
        DenseMatrix::zeros(k, k)
    }
    fn stage_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        self.q.quad_form(x) + self.r.quad_form(u)
    }
    fn stage_cost_gradient(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.q.matvec(x).iter().map(|v| 2.0 * v).collect();
        g.extend(self.r.matvec(u).iter().map(|v| 2.0 * v));
        g
    }
    fn stage_cost_hessian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        let nx = self.n_x();
        let mut h = DenseMatrix::zeros(nx + self.n_u(), nx + self.n_u());
        h.add_block(0, 0, &self.q, 2.0);
        h.add_block(nx, nx, &self.r, 2.0);
        h
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        self.p.quad_form(x)
    }
    fn terminal_cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.p.matvec(x).iter().map(|v| 2.0 * v).collect()
    }
    fn terminal_cost_hessian(&self, _: &[f64]) -> DenseMatrix {
        self.p.scale(2.0)
    }
    fn path_constraints(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.path_constraint_count());
        if let Some(b) = self.state_bound {
            box_rows(x, b, &mut c);
        }
        if let Some(b) = self.input_bound {
            box_rows(u, b, &mut c);
        }
        c
    }
    fn path_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        let (nx, nu) = (self.n_x(), self.n_u());
        let mut j = DenseMatrix::zeros(self.path_constraint_count(), nx + nu);
        let mut row = 0;
        if self.state_bound.is_some() {
            for s in [1.0, -1.0] {
                for k in 0..nx {
                    j[(row, k)] = s;
                    row += 1;
                }
            }
        }
        if self.input_bound.is_some() {
            for s in [1.0, -1.0] {
                for k in 0..nu {
                    j[(row, nx + k)] = s;
                    row += 1;
                }
            }
        }
        j
    }
    fn path_hessian(&self, _: &[f64], _: &[f64], _: &[f64]) -> DenseMatrix {
        let k = self.n_x() + self.n_u();
        DenseMatrix::zeros(k, k)
    }
    fn path_row_depends_on_input(&self, row: usize) -> bool {
        row >= self.state_rows()
    }
    fn terminal_constraints(&self, x: &[f64]) -> Vec<f64> {
        match self.terminal_level {
            Some(level) => vec![self.p.quad_form(x) - level],
            None => Vec::new(),
        }
    }
    fn terminal_jacobian(&self, x: &[f64]) -> DenseMatrix {
        match self.terminal_level {
            Some(_) => {
                let g: Vec<f64> = self.p.matvec(x).iter().map(|v| 2.0 * v).collect();
                DenseMatrix::from_rows(&[g])
            }
            None => DenseMatrix::zeros(0, self.n_x()),
        }
    }
    fn terminal_hessian(&self, _: &[f64], weights: &[f64]) -> DenseMatrix {
        match weights.first() {
            Some(&w) => self.p.scale(2.0 * w),
            None => DenseMatrix::zeros(self.n_x(), self.n_x()),
        }
    }
}
