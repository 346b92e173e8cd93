//! Transcription of a finite-horizon optimal control problem
//!
//! ```text
//! min  V_f(ξ_N) + Σ_{i<N} l(ξ_i, u_i)
//! s.t. ξ_{i+1} = f_d(ξ_i, u_i),  c(ξ_i, u_i) <= 0,  c_N(ξ_N) <= 0,  ξ_0 = x
//! ```
//!
//! into a [`ParametricNlp`] with parameter `p = x`. The initial state is
//! substituted out, so `p` enters only through stage 0. Path-constraint rows
//! that do not depend on the input are dropped at stage 0, since they are
//! constant in the decision variables.
//!
//! Variable order: `w = (ξ_1..ξ_N, u_0..u_{N-1})`; multipliers follow the
//! constraint order (dynamics stage 0..N-1; path stage 0..N-1; terminal).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::nlp::{NlpDims, ParametricNlp, PrimalDualPoint};
use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// Callbacks of an OCP. Stage-level Jacobians and Hessians are taken with
/// respect to the stacked `(x, u)`, so they have `n_x + n_u` columns.
pub trait OptimalControlProblem {
    fn horizon(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// `n_c`.
    fn path_constraint_count(&self) -> usize;
    /// `n_cf`.
    fn terminal_constraint_count(&self) -> usize;

    /// `f_d(x, u)`.
    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
    /// `[∂f_d/∂x  ∂f_d/∂u]`, `n_x × (n_x + n_u)`.
    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> DenseMatrix;
    /// `Σ_k weights_k ∇²f_d,k` over `(x, u)`.
    fn dynamics_hessian(&self, x: &[f64], u: &[f64], weights: &[f64]) -> DenseMatrix;

    fn stage_cost(&self, x: &[f64], u: &[f64]) -> f64;
    fn stage_cost_gradient(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
    fn stage_cost_hessian(&self, x: &[f64], u: &[f64]) -> DenseMatrix;

    fn terminal_cost(&self, x: &[f64]) -> f64;
    fn terminal_cost_gradient(&self, x: &[f64]) -> Vec<f64>;
    fn terminal_cost_hessian(&self, x: &[f64]) -> DenseMatrix;

    /// `c(x, u)`, length `n_c`; `<= 0` is feasible.
    fn path_constraints(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
    fn path_jacobian(&self, x: &[f64], u: &[f64]) -> DenseMatrix;
    fn path_hessian(&self, x: &[f64], u: &[f64], weights: &[f64]) -> DenseMatrix;

    /// Whether row `row` of `c` depends on the input. Rows that do not are
    /// dropped at stage 0.
    fn path_row_depends_on_input(&self, row: usize) -> bool {
        let _ = row;
        true
    }

    /// `c_N(x)`, length `n_cf`.
    fn terminal_constraints(&self, x: &[f64]) -> Vec<f64>;
    fn terminal_jacobian(&self, x: &[f64]) -> DenseMatrix;
    fn terminal_hessian(&self, x: &[f64], weights: &[f64]) -> DenseMatrix;
}

impl<T: OptimalControlProblem + ?Sized> OptimalControlProblem for &T {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn path_constraint_count(&self) -> usize {
        (**self).path_constraint_count()
    }
    fn terminal_constraint_count(&self) -> usize {
        (**self).terminal_constraint_count()
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (**self).dynamics(x, u)
    }
    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> DenseMatrix {
        (**self).dynamics_jacobian(x, u)
    }
    fn dynamics_hessian(&self, x: &[f64], u: &[f64], weights: &[f64]) -> DenseMatrix {
        (**self).dynamics_hessian(x, u, weights)
    }
    fn stage_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        (**self).stage_cost(x, u)
    }
    fn stage_cost_gradient(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (**self).stage_cost_gradient(x, u)
    }
    fn stage_cost_hessian(&self, x: &[f64], u: &[f64]) -> DenseMatrix {
        (**self).stage_cost_hessian(x, u)
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        (**self).terminal_cost(x)
    }
    fn terminal_cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).terminal_cost_gradient(x)
    }
    fn terminal_cost_hessian(&self, x: &[f64]) -> DenseMatrix {
        (**self).terminal_cost_hessian(x)
    }
    fn path_constraints(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (**self).path_constraints(x, u)
    }
    fn path_jacobian(&self, x: &[f64], u: &[f64]) -> DenseMatrix {
        (**self).path_jacobian(x, u)
    }
    fn path_hessian(&self, x: &[f64], u: &[f64], weights: &[f64]) -> DenseMatrix {
        (**self).path_hessian(x, u, weights)
    }
    fn path_row_depends_on_input(&self, row: usize) -> bool {
        (**self).path_row_depends_on_input(row)
    }
    fn terminal_constraints(&self, x: &[f64]) -> Vec<f64> {
        (**self).terminal_constraints(x)
    }
    fn terminal_jacobian(&self, x: &[f64]) -> DenseMatrix {
        (**self).terminal_jacobian(x)
    }
    fn terminal_hessian(&self, x: &[f64], weights: &[f64]) -> DenseMatrix {
        (**self).terminal_hessian(x, weights)
    }
}

/// Index bookkeeping for the transcribed NLP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    pub horizon: usize,
    pub n_x: usize,
    pub n_u: usize,
    pub n_c: usize,
    pub n_cf: usize,
    /// Rows of `c` kept at stage 0.
    pub stage0_rows: Vec<usize>,
}

impl VariableLayout {
    pub fn dims(&self) -> NlpDims {
        NlpDims {
            n: self.horizon * (self.n_x + self.n_u),
            m: self.horizon * self.n_x,
            q: self.stage0_rows.len() + (self.horizon - 1) * self.n_c + self.n_cf,
            n_p: self.n_x,
        }
    }

    /// Indices of `ξ_i` in `w`, `1 <= i <= N`.
    pub fn state(&self, i: usize) -> Range<usize> {
        debug_assert!(i >= 1 && i <= self.horizon);
        let s = (i - 1) * self.n_x;
        s..s + self.n_x
    }

    /// Indices of `u_i` in `w`, `0 <= i < N`.
    pub fn input(&self, i: usize) -> Range<usize> {
        debug_assert!(i < self.horizon);
        let s = self.horizon * self.n_x + i * self.n_u;
        s..s + self.n_u
    }

    /// Indices in `λ` (and `g`) of the dynamics constraint `ξ_{i+1} = f_d(ξ_i, u_i)`.
    pub fn dynamics_rows(&self, i: usize) -> Range<usize> {
        let s = i * self.n_x;
        s..s + self.n_x
    }

    /// Indices in `v` (and `h`) of the path constraints at stage `i`.
    pub fn path_rows(&self, i: usize) -> Range<usize> {
        if i == 0 {
            0..self.stage0_rows.len()
        } else {
            let s = self.stage0_rows.len() + (i - 1) * self.n_c;
            s..s + self.n_c
        }
    }

    pub fn terminal_rows(&self) -> Range<usize> {
        let s = self.stage0_rows.len() + (self.horizon - 1) * self.n_c;
        s..s + self.n_cf
    }

    /// `u_0` from the primal-dual point: the selector `u = H z`.
    pub fn extract_control(&self, z: &PrimalDualPoint) -> Vec<f64> {
        z.w[self.input(0)].to_vec()
    }

    /// Predicted state sequence `ξ_0 = p, ξ_1, …, ξ_N`.
    pub fn states<'a>(&'a self, w: &'a [f64], p: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        core::iter::once(p).chain((1..=self.horizon).map(move |i| &w[self.state(i)]))
    }
}

/// An OCP viewed as a [`ParametricNlp`] in `p = x`.
#[derive(Debug, Clone)]
pub struct TranscribedNlp<O> {
    ocp: O,
    layout: VariableLayout,
}

/// Builds the NLP and its layout, validating the OCP's dimensions and
/// `l(0, 0) = 0`.
pub fn transcribe<O: OptimalControlProblem>(ocp: O) -> Result<(TranscribedNlp<O>, VariableLayout)> {
    let nlp = TranscribedNlp::new(ocp)?;
    let layout = nlp.layout.clone();
    Ok((nlp, layout))
}

impl<O: OptimalControlProblem> TranscribedNlp<O> {
    pub fn new(ocp: O) -> Result<Self> {
        let horizon = ocp.horizon();
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1"));
        }
        let (n_x, n_u) = (ocp.state_dim(), ocp.input_dim());
        let (n_c, n_cf) = (ocp.path_constraint_count(), ocp.terminal_constraint_count());
        let x0 = vec![0.0; n_x];
        let u0 = vec![0.0; n_u];
        let check = |what: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::dims(what, expected, found))
            }
        };
        check("dynamics output", n_x, ocp.dynamics(&x0, &u0).len())?;
        let jd = ocp.dynamics_jacobian(&x0, &u0);
        check("dynamics Jacobian rows", n_x, jd.rows())?;
        check("dynamics Jacobian cols", n_x + n_u, jd.cols())?;
        check("stage cost gradient", n_x + n_u, ocp.stage_cost_gradient(&x0, &u0).len())?;
        check("stage cost Hessian", n_x + n_u, ocp.stage_cost_hessian(&x0, &u0).rows())?;
        check("terminal cost gradient", n_x, ocp.terminal_cost_gradient(&x0).len())?;
        check("path constraints", n_c, ocp.path_constraints(&x0, &u0).len())?;
        let jc = ocp.path_jacobian(&x0, &u0);
        check("path Jacobian rows", n_c, jc.rows())?;
        check("path Jacobian cols", n_x + n_u, jc.cols())?;
        check("terminal constraints", n_cf, ocp.terminal_constraints(&x0).len())?;
        let jt = ocp.terminal_jacobian(&x0);
        check("terminal Jacobian rows", n_cf, jt.rows())?;
        check("terminal Jacobian cols", n_x, jt.cols())?;
        let l00 = ocp.stage_cost(&x0, &u0);
        if l00 != 0.0 {
            return Err(Error::InvalidConfig("stage cost must vanish at the origin"));
        }
        let stage0_rows = (0..n_c).filter(|&r| ocp.path_row_depends_on_input(r)).collect();
        let layout = VariableLayout {
            horizon,
            n_x,
            n_u,
            n_c,
            n_cf,
            stage0_rows,
        };
        Ok(TranscribedNlp { ocp, layout })
    }

    pub fn ocp(&self) -> &O {
        &self.ocp
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    /// `(ξ_i, u_i)` for stage `i`, with `ξ_0 = p`.
    fn stage<'a>(&self, w: &'a [f64], p: &'a [f64], i: usize) -> (&'a [f64], &'a [f64]) {
        let x = if i == 0 { p } else { &w[self.layout.state(i)] };
        (x, &w[self.layout.input(i)])
    }

    /// Stage-0 path-constraint multipliers expanded to all `n_c` rows.
    fn stage_weights(&self, v: &[f64], i: usize) -> Vec<f64> {
        let rows = self.layout.path_rows(i);
        if i == 0 {
            let mut out = vec![0.0; self.layout.n_c];
            for (k, &r) in self.layout.stage0_rows.iter().enumerate() {
                out[r] = v[rows.start + k];
            }
            out
        } else {
            v[rows].to_vec()
        }
    }

    /// `∇²_{(x,u)}` of the stage-`i` Lagrangian terms.
    fn stage_lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64], i: usize) -> DenseMatrix {
        let (x, u) = self.stage(&z.w, p, i);
        let mut hess = self.ocp.stage_cost_hessian(x, u);
        let neg_lambda: Vec<f64> = z.lambda[self.layout.dynamics_rows(i)].iter().map(|l| -l).collect();
        hess.add_block(0, 0, &self.ocp.dynamics_hessian(x, u, &neg_lambda), 1.0);
        if self.layout.n_c > 0 {
            let weights = self.stage_weights(&z.v, i);
            hess.add_block(0, 0, &self.ocp.path_hessian(x, u, &weights), 1.0);
        }
        hess
    }
}

impl<O: OptimalControlProblem> ParametricNlp for TranscribedNlp<O> {
    fn dims(&self) -> NlpDims {
        self.layout.dims()
    }

    fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
        let stages: f64 = (0..self.layout.horizon)
            .map(|i| {
                let (x, u) = self.stage(w, p, i);
                self.ocp.stage_cost(x, u)
            })
            .sum();
        stages + self.ocp.terminal_cost(&w[self.layout.state(self.layout.horizon)])
    }

    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let mut grad = vec![0.0; l.dims().n];
        for i in 0..l.horizon {
            let (x, u) = self.stage(w, p, i);
            let g = self.ocp.stage_cost_gradient(x, u);
            if i > 0 {
                for (dst, src) in grad[l.state(i)].iter_mut().zip(&g[..l.n_x]) {
                    *dst += src;
                }
            }
            for (dst, src) in grad[l.input(i)].iter_mut().zip(&g[l.n_x..]) {
                *dst += src;
            }
        }
        let gt = self.ocp.terminal_cost_gradient(&w[l.state(l.horizon)]);
        for (dst, src) in grad[l.state(l.horizon)].iter_mut().zip(&gt) {
            *dst += src;
        }
        grad
    }

    fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let mut g = Vec::with_capacity(l.dims().m);
        for i in 0..l.horizon {
            let (x, u) = self.stage(w, p, i);
            let next = &w[l.state(i + 1)];
            g.extend(next.iter().zip(self.ocp.dynamics(x, u)).map(|(a, b)| a - b));
        }
        g
    }

    fn equality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let dims = l.dims();
        let mut jac = DenseMatrix::zeros(dims.m, dims.n);
        for i in 0..l.horizon {
            let (x, u) = self.stage(w, p, i);
            let jd = self.ocp.dynamics_jacobian(x, u);
            let rows = l.dynamics_rows(i);
            for (k, r) in rows.enumerate() {
                jac[(r, l.state(i + 1).start + k)] = 1.0;
                for c in 0..l.n_x {
                    if i > 0 {
                        jac[(r, l.state(i).start + c)] = -jd[(k, c)];
                    }
                }
                for c in 0..l.n_u {
                    jac[(r, l.input(i).start + c)] = -jd[(k, l.n_x + c)];
                }
            }
        }
        jac
    }

    fn equality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let mut jac = DenseMatrix::zeros(l.dims().m, l.n_x);
        let (x, u) = self.stage(w, p, 0);
        let jd = self.ocp.dynamics_jacobian(x, u);
        for k in 0..l.n_x {
            for c in 0..l.n_x {
                jac[(k, c)] = -jd[(k, c)];
            }
        }
        jac
    }

    fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let mut h = Vec::with_capacity(l.dims().q);
        for i in 0..l.horizon {
            let (x, u) = self.stage(w, p, i);
            if l.n_c == 0 {
                continue;
            }
            let c = self.ocp.path_constraints(x, u);
            if i == 0 {
                h.extend(l.stage0_rows.iter().map(|&r| c[r]));
            } else {
                h.extend(c);
            }
        }
        if l.n_cf > 0 {
            h.extend(self.ocp.terminal_constraints(&w[l.state(l.horizon)]));
        }
        h
    }

    fn inequality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let dims = l.dims();
        let mut jac = DenseMatrix::zeros(dims.q, dims.n);
        if l.n_c > 0 {
            for i in 0..l.horizon {
                let (x, u) = self.stage(w, p, i);
                let jc = self.ocp.path_jacobian(x, u);
                let rows: Vec<usize> = if i == 0 {
                    l.stage0_rows.clone()
                } else {
                    (0..l.n_c).collect()
                };
                for (k, &src) in rows.iter().enumerate() {
                    let r = l.path_rows(i).start + k;
                    if i > 0 {
                        for c in 0..l.n_x {
                            jac[(r, l.state(i).start + c)] = jc[(src, c)];
                        }
                    }
                    for c in 0..l.n_u {
                        jac[(r, l.input(i).start + c)] = jc[(src, l.n_x + c)];
                    }
                }
            }
        }
        if l.n_cf > 0 {
            let jt = self.ocp.terminal_jacobian(&w[l.state(l.horizon)]);
            jac.add_block(l.terminal_rows().start, l.state(l.horizon).start, &jt, 1.0);
        }
        jac
    }

    fn inequality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let mut jac = DenseMatrix::zeros(l.dims().q, l.n_x);
        if l.n_c > 0 {
            let (x, u) = self.stage(w, p, 0);
            let jc = self.ocp.path_jacobian(x, u);
            for (k, &src) in l.stage0_rows.iter().enumerate() {
                for c in 0..l.n_x {
                    jac[(k, c)] = jc[(src, c)];
                }
            }
        }
        jac
    }

    fn lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let n = l.dims().n;
        let mut hess = DenseMatrix::zeros(n, n);
        let nx = l.n_x;
        for i in 0..l.horizon {
            let hs = self.stage_lagrangian_hessian(z, p, i);
            // Map stage-local (x, u) indices into w; stage 0's x is p.
            let index = |k: usize| -> Option<usize> {
                if k < nx {
                    (i > 0).then(|| l.state(i).start + k)
                } else {
                    Some(l.input(i).start + k - nx)
                }
            };
            for a in 0..nx + l.n_u {
                let Some(ra) = index(a) else { continue };
                for b in 0..nx + l.n_u {
                    let Some(rb) = index(b) else { continue };
                    hess[(ra, rb)] += hs[(a, b)];
                }
            }
        }
        let xn = &z.w[l.state(l.horizon)];
        let mut ht = self.ocp.terminal_cost_hessian(xn);
        if l.n_cf > 0 {
            ht.add_block(0, 0, &self.ocp.terminal_hessian(xn, &z.v[l.terminal_rows()]), 1.0);
        }
        let s = l.state(l.horizon).start;
        hess.add_block(s, s, &ht, 1.0);
        hess
    }

    fn lagrangian_param_jacobian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        let l = &self.layout;
        let mut cross = DenseMatrix::zeros(l.dims().n, l.n_x);
        let hs = self.stage_lagrangian_hessian(z, p, 0);
        let u0 = l.input(0).start;
        for a in 0..l.n_u {
            for b in 0..l.n_x {
                cross[(u0 + a, b)] = hs[(l.n_x + a, b)];
            }
        }
        cross
    }
}

/// `u_0` of `z`.
pub fn extract_control(layout: &VariableLayout, z: &PrimalDualPoint) -> Vec<f64> {
    layout.extract_control(z)
}

/// OCP cost of the plan stored in `z` with `ξ_0 = p`.
pub fn plan_cost<O: OptimalControlProblem>(nlp: &TranscribedNlp<O>, z: &PrimalDualPoint, p: &[f64]) -> Result<f64> {
    let dims = nlp.dims();
    if z.w.len() != dims.n {
        return Err(Error::dims("plan primal vector", dims.n, z.w.len()));
    }
    if p.len() != dims.n_p {
        return Err(Error::dims("plan initial state", dims.n_p, p.len()));
    }
    let j = nlp.objective(&z.w, p);
    if !j.is_finite() {
        return Err(Error::NonFiniteEvaluation { what: "plan cost" });
    }
    Ok(j)
}
