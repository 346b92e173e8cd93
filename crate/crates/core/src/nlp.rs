//! Parametric nonlinear programs
//!
//! ```text
//! min_w f(w, p)   s.t.   g(w, p) = 0,   h(w, p) <= 0
//! ```
//!
//! and their Fischer-Burmeister reformulation `F(z, p) = 0` with generalized
//! Jacobians `∂z F` and `∂p F`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::math;
use crate::numerics::{self, DenseMatrix};
use crate::{Error, Result};

/// Dimensions of a parametric NLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NlpDims {
    /// Primal variables `w`.
    pub n: usize,
    /// Equality constraints `g`.
    pub m: usize,
    /// Inequality constraints `h`.
    pub q: usize,
    /// Parameters `p`.
    pub n_p: usize,
}

impl NlpDims {
    /// Length of the primal-dual vector `z = (w, λ, v)`.
    pub fn z_len(&self) -> usize {
        self.n + self.m + self.q
    }
}

/// A parametric NLP described by its derivative callbacks.
///
/// Jacobians are `rows = outputs`, `cols = inputs`. Implementations must be
/// pure: the same inputs give the same outputs.
pub trait ParametricNlp {
    fn dims(&self) -> NlpDims;

    fn objective(&self, w: &[f64], p: &[f64]) -> f64;
    /// `∇w f`, length `n`.
    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64>;

    /// `g(w, p)`, length `m`.
    fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64>;
    /// `∇w g`, `m × n`.
    fn equality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix;
    /// `∇p g`, `m × n_p`.
    fn equality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix;

    /// `h(w, p)`, length `q`.
    fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64>;
    /// `∇w h`, `q × n`.
    fn inequality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix;
    /// `∇p h`, `q × n_p`.
    fn inequality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix;

    /// `∇²w L(z, p)`, `n × n`.
    fn lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix;
    /// `∂(∇w L)/∂p`, `n × n_p`.
    fn lagrangian_param_jacobian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix;
}

impl<T: ParametricNlp + ?Sized> ParametricNlp for &T {
    fn dims(&self) -> NlpDims {
        (**self).dims()
    }
    fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
        (**self).objective(w, p)
    }
    fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        (**self).objective_gradient(w, p)
    }
    fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        (**self).equality(w, p)
    }
    fn equality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        (**self).equality_jacobian(w, p)
    }
    fn equality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        (**self).equality_param_jacobian(w, p)
    }
    fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        (**self).inequality(w, p)
    }
    fn inequality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        (**self).inequality_jacobian(w, p)
    }
    fn inequality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
        (**self).inequality_param_jacobian(w, p)
    }
    fn lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        (**self).lagrangian_hessian(z, p)
    }
    fn lagrangian_param_jacobian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
        (**self).lagrangian_param_jacobian(z, p)
    }
}

/// Primal-dual point `z = (w, λ, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub v: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn zeros(dims: NlpDims) -> Self {
        PrimalDualPoint {
            w: vec![0.0; dims.n],
            lambda: vec![0.0; dims.m],
            v: vec![0.0; dims.q],
        }
    }

    /// Splits a stacked `(w, λ, v)` vector.
    pub fn from_stacked(dims: NlpDims, z: &[f64]) -> Result<Self> {
        if z.len() != dims.z_len() {
            return Err(Error::dims("primal-dual vector", dims.z_len(), z.len()));
        }
        let (w, rest) = z.split_at(dims.n);
        let (lambda, v) = rest.split_at(dims.m);
        Ok(PrimalDualPoint {
            w: w.to_vec(),
            lambda: lambda.to_vec(),
            v: v.to_vec(),
        })
    }

    pub fn to_stacked(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.len());
        z.extend_from_slice(&self.w);
        z.extend_from_slice(&self.lambda);
        z.extend_from_slice(&self.v);
        z
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.lambda.len() + self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, dims: NlpDims) -> bool {
        self.w.len() == dims.n && self.lambda.len() == dims.m && self.v.len() == dims.q
    }

    /// `self + step` on the stacked representation.
    pub fn add_stacked(&self, step: &[f64]) -> Self {
        let n = self.w.len();
        let m = self.lambda.len();
        let add = |base: &[f64], off: usize| -> Vec<f64> {
            base.iter().zip(&step[off..]).map(|(a, b)| a + b).collect()
        };
        PrimalDualPoint {
            w: add(&self.w, 0),
            lambda: add(&self.lambda, n),
            v: add(&self.v, n + m),
        }
    }

    /// Euclidean distance on the stacked representation.
    pub fn distance(&self, other: &PrimalDualPoint) -> f64 {
        let d: Vec<f64> = self
            .w
            .iter()
            .chain(&self.lambda)
            .chain(&self.v)
            .zip(other.w.iter().chain(&other.lambda).chain(&other.v))
            .map(|(a, b)| a - b)
            .collect();
        numerics::norm2(&d)
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.lambda).chain(&self.v).all(|x| x.is_finite())
    }
}

/// Value of `F(z, p)` split by block.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    /// `∇w L`.
    pub stationarity: Vec<f64>,
    /// `g`.
    pub equality: Vec<f64>,
    /// `ψ(-h_i, v_i)`.
    pub complementarity: Vec<f64>,
    pub norm2: f64,
}

impl KktResidual {
    fn new(stationarity: Vec<f64>, equality: Vec<f64>, complementarity: Vec<f64>) -> Self {
        let sq: f64 = stationarity
            .iter()
            .chain(&equality)
            .chain(&complementarity)
            .map(|x| x * x)
            .sum();
        KktResidual {
            stationarity,
            equality,
            complementarity,
            norm2: math::sqrt(sq),
        }
    }

    pub fn to_stacked(&self) -> Vec<f64> {
        let mut out = self.stationarity.clone();
        out.extend_from_slice(&self.equality);
        out.extend_from_slice(&self.complementarity);
        out
    }
}

/// The Fischer-Burmeister NCP function `ψ(a, b) = a + b - sqrt(a² + b²)`.
///
/// Zero exactly when `a >= 0`, `b >= 0` and `ab = 0`.
#[inline]
pub fn fb(a: f64, b: f64) -> f64 {
    a + b - math::hypot(a, b)
}

/// Pairs with `‖(h, v)‖ <= TIE_THRESHOLD` use the tie selection.
pub const TIE_THRESHOLD: f64 = 1e-14;

/// Tie selection `(a, b)` with `‖(a, b)‖ = 1`.
pub const TIE_DIRECTION: (f64, f64) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);

/// Generalized-derivative coefficients `(ν, μ)` of `ψ(-h, v)` for the
/// constraint value `h` and multiplier `v`:
///
/// ```text
/// (ν, μ) = (1 + h/r, 1 - v/r)    r = ‖(h, v)‖ > 0
///          (1 - a, 1 - b)        otherwise
/// ```
///
/// The complementarity row of `∂z F` is `[-ν ∇w h, 0, μ]`.
#[inline]
pub fn fb_pair_derivative(h: f64, v: f64, tie_a: f64, tie_b: f64) -> (f64, f64) {
    let r = math::hypot(h, v);
    if r > TIE_THRESHOLD {
        (1.0 + h / r, 1.0 - v / r)
    } else {
        (1.0 - tie_a, 1.0 - tie_b)
    }
}

/// Which blocks [`evaluate`] should assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRequest {
    pub jacobian_z: bool,
    pub jacobian_p: bool,
    /// Uniform `δ I` added to the `∇²w L` block of `∂z F`.
    pub hessian_shift: f64,
}

impl EvalRequest {
    pub const RESIDUAL: EvalRequest = EvalRequest {
        jacobian_z: false,
        jacobian_p: false,
        hessian_shift: 0.0,
    };
    pub const ALL: EvalRequest = EvalRequest {
        jacobian_z: true,
        jacobian_p: true,
        hessian_shift: 0.0,
    };
}

/// `F`, `∂z F` and `∂p F` evaluated together at one `(z, p)`, so the
/// complementarity coefficients `C = diag(ν)` are shared by both Jacobians.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub residual: KktResidual,
    pub jacobian_z: Option<DenseMatrix>,
    pub jacobian_p: Option<DenseMatrix>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

fn finite_vec(v: Vec<f64>, what: &'static str, len: usize) -> Result<Vec<f64>> {
    if v.len() != len {
        return Err(Error::dims(what, len, v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEvaluation { what });
    }
    Ok(v)
}

fn finite_mat(m: DenseMatrix, what: &'static str, rows: usize, cols: usize) -> Result<DenseMatrix> {
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::dims(what, rows * cols, m.rows() * m.cols()));
    }
    if !m.is_finite() {
        return Err(Error::NonFiniteEvaluation { what });
    }
    Ok(m)
}

fn check_inputs(dims: NlpDims, z: &PrimalDualPoint, p: &[f64]) -> Result<()> {
    if !z.matches(dims) {
        return Err(Error::dims("primal-dual point", dims.z_len(), z.len()));
    }
    if p.len() != dims.n_p {
        return Err(Error::dims("parameter", dims.n_p, p.len()));
    }
    Ok(())
}

/// Evaluates the residual and, as requested, both generalized Jacobians.
///
/// `∂z F` has the block layout
///
/// ```text
/// [ ∇²w L + δI   ∇w gᵀ   ∇w hᵀ ]
/// [ ∇w g         0       0     ]
/// [ -C ∇w h      0       D     ]
/// ```
///
/// and `∂p F = [∂(∇w L)/∂p; ∇p g; -C ∇p h]`.
pub fn evaluate<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z: &PrimalDualPoint,
    p: &[f64],
    request: EvalRequest,
) -> Result<KktSystem> {
    let dims = nlp.dims();
    check_inputs(dims, z, p)?;
    let NlpDims { n, m, q, n_p } = dims;
    let w = &z.w;

    let grad_f = finite_vec(nlp.objective_gradient(w, p), "objective gradient", n)?;
    let g = finite_vec(nlp.equality(w, p), "equality constraints", m)?;
    let h = finite_vec(nlp.inequality(w, p), "inequality constraints", q)?;
    let jg = finite_mat(nlp.equality_jacobian(w, p), "equality Jacobian", m, n)?;
    let jh = finite_mat(nlp.inequality_jacobian(w, p), "inequality Jacobian", q, n)?;

    let mut stationarity = grad_f;
    for (s, (a, b)) in stationarity
        .iter_mut()
        .zip(jg.tr_matvec(&z.lambda).into_iter().zip(jh.tr_matvec(&z.v)))
    {
        *s += a + b;
    }
    let complementarity: Vec<f64> = h.iter().zip(&z.v).map(|(&hi, &vi)| fb(-hi, vi)).collect();
    let (nu, mu): (Vec<f64>, Vec<f64>) = h
        .iter()
        .zip(&z.v)
        .map(|(&hi, &vi)| fb_pair_derivative(hi, vi, TIE_DIRECTION.0, TIE_DIRECTION.1))
        .unzip();
    let residual = KktResidual::new(stationarity, g, complementarity);
    if !residual.norm2.is_finite() {
        return Err(Error::NonFiniteEvaluation { what: "KKT residual" });
    }

    let jacobian_z = if request.jacobian_z {
        let hess = finite_mat(nlp.lagrangian_hessian(z, p), "Lagrangian Hessian", n, n)?;
        let size = dims.z_len();
        let mut jz = DenseMatrix::zeros(size, size);
        jz.add_block(0, 0, &hess, 1.0);
        if request.hessian_shift != 0.0 {
            for i in 0..n {
                jz[(i, i)] += request.hessian_shift;
            }
        }
        for i in 0..m {
            for j in 0..n {
                let a = jg[(i, j)];
                if a != 0.0 {
                    jz[(n + i, j)] = a;
                    jz[(j, n + i)] = a;
                }
            }
        }
        for i in 0..q {
            let row = n + m + i;
            for j in 0..n {
                let a = jh[(i, j)];
                if a != 0.0 {
                    jz[(row, j)] = -nu[i] * a;
                    jz[(j, row)] = a;
                }
            }
            jz[(row, row)] = mu[i];
        }
        Some(jz)
    } else {
        None
    };

    let jacobian_p = if request.jacobian_p {
        let cross = finite_mat(nlp.lagrangian_param_jacobian(z, p), "Lagrangian parameter Jacobian", n, n_p)?;
        let gp = finite_mat(nlp.equality_param_jacobian(w, p), "equality parameter Jacobian", m, n_p)?;
        let hp = finite_mat(nlp.inequality_param_jacobian(w, p), "inequality parameter Jacobian", q, n_p)?;
        let mut jp = DenseMatrix::zeros(dims.z_len(), n_p);
        jp.add_block(0, 0, &cross, 1.0);
        jp.add_block(n, 0, &gp, 1.0);
        for i in 0..q {
            for j in 0..n_p {
                jp[(n + m + i, j)] = -nu[i] * hp[(i, j)];
            }
        }
        Some(jp)
    } else {
        None
    };

    Ok(KktSystem {
        residual,
        jacobian_z,
        jacobian_p,
        nu,
        mu,
    })
}

/// `F(z, p)`.
pub fn residual<N: ParametricNlp + ?Sized>(nlp: &N, z: &PrimalDualPoint, p: &[f64]) -> Result<KktResidual> {
    evaluate(nlp, z, p, EvalRequest::RESIDUAL).map(|s| s.residual)
}

/// The element of `∂z F(z, p)` selected by [`fb_pair_derivative`].
pub fn jacobian_z<N: ParametricNlp + ?Sized>(nlp: &N, z: &PrimalDualPoint, p: &[f64]) -> Result<DenseMatrix> {
    let req = EvalRequest {
        jacobian_z: true,
        jacobian_p: false,
        hessian_shift: 0.0,
    };
    Ok(evaluate(nlp, z, p, req)?.jacobian_z.expect("requested"))
}

/// The element of `∂p F(z, p)` using the same `C` as [`jacobian_z`].
pub fn jacobian_p<N: ParametricNlp + ?Sized>(nlp: &N, z: &PrimalDualPoint, p: &[f64]) -> Result<DenseMatrix> {
    let req = EvalRequest {
        jacobian_z: false,
        jacobian_p: true,
        hessian_shift: 0.0,
    };
    Ok(evaluate(nlp, z, p, req)?.jacobian_p.expect("requested"))
}

/// Worst discrepancy of one derivative block against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub block: &'static str,
    pub discrepancy: numerics::MatrixDiscrepancy,
}

/// Checks every derivative callback of `nlp` at `(z, p)` against central
/// differences of the value callbacks (and of `∇w L` for the second-order
/// blocks). Tolerance per entry is `max(atol, rtol |fd|)`.
pub fn check_derivatives<N: ParametricNlp + ?Sized>(
    nlp: &N,
    z: &PrimalDualPoint,
    p: &[f64],
    atol: f64,
    rtol: f64,
) -> Result<Vec<BlockCheck>> {
    let dims = nlp.dims();
    check_inputs(dims, z, p)?;
    let w = &z.w;
    let hw = numerics::default_fd_step(w);
    let hp = numerics::default_fd_step(p);
    let grad_l = |w: &[f64], p: &[f64]| -> Vec<f64> {
        let mut s = nlp.objective_gradient(w, p);
        let a = nlp.equality_jacobian(w, p).tr_matvec(&z.lambda);
        let b = nlp.inequality_jacobian(w, p).tr_matvec(&z.v);
        for (s, (a, b)) in s.iter_mut().zip(a.into_iter().zip(b)) {
            *s += a + b;
        }
        s
    };

    let mut out = Vec::new();
    let mut push = |block: &'static str, analytic: DenseMatrix, fd: DenseMatrix| -> Result<()> {
        let discrepancy = numerics::compare_matrices(&analytic, &fd, atol, rtol)?;
        out.push(BlockCheck { block, discrepancy });
        Ok(())
    };

    let fd = numerics::fd_jacobian(|w| vec![nlp.objective(w, p)], w, hw)?;
    let grad = DenseMatrix::from_row_major(1, dims.n, nlp.objective_gradient(w, p))?;
    push("objective gradient", grad, fd)?;
    let fd = numerics::fd_jacobian(|w| nlp.equality(w, p), w, hw)?;
    push("equality Jacobian", nlp.equality_jacobian(w, p), fd)?;
    let fd = numerics::fd_jacobian(|w| nlp.inequality(w, p), w, hw)?;
    push("inequality Jacobian", nlp.inequality_jacobian(w, p), fd)?;
    let fd = numerics::fd_jacobian(|p| nlp.equality(w, p), p, hp)?;
    push("equality parameter Jacobian", nlp.equality_param_jacobian(w, p), fd)?;
    let fd = numerics::fd_jacobian(|p| nlp.inequality(w, p), p, hp)?;
    push("inequality parameter Jacobian", nlp.inequality_param_jacobian(w, p), fd)?;
    let fd = numerics::fd_jacobian(|w| grad_l(w, p), w, hw)?;
    push("Lagrangian Hessian", nlp.lagrangian_hessian(z, p), fd)?;
    let fd = numerics::fd_jacobian(|p| grad_l(w, p), p, hp)?;
    push("Lagrangian parameter Jacobian", nlp.lagrangian_param_jacobian(z, p), fd)?;
    Ok(out)
}
