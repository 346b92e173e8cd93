//! Rigid-spacecraft attitude benchmark.
//!
//! State `x = (ω, θ)`: body rates and 3-2-1 Euler angles (radians); input `u`:
//! body torques. Continuous dynamics
//!
//! ```text
//! ω̇ = J⁻¹ (-ω × Jω + u)
//! θ̇ = S(θ) ω
//! ```
//!
//! discretized with explicit Euler, `x⁺ = x + τ f_c(x, u)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::numerics::{self, DenseMatrix, LuFactorization};
use crate::ocp::OptimalControlProblem;
use crate::{Error, Result};

pub const STATE_DIM: usize = 6;
pub const INPUT_DIM: usize = 3;

/// `|cos θ₂|` below which the attitude kinematics are singular.
pub const GIMBAL_LOCK_COS: f64 = 1e-9;

/// Safety factor applied to the terminal level.
pub const TERMINAL_SAFETY: f64 = 0.99;

/// Allowed positive part of `V_f(x⁺) - V_f(x) + l(x, -Kx)` at the sampled
/// terminal-set points when sizing the set.
pub const TERMINAL_DECREASE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SpacecraftParams {
    /// Principal moments of inertia (kg m²).
    pub inertia: [f64; 3],
    /// Sampling period (s).
    pub tau: f64,
    pub horizon: usize,
    /// Diagonal of the state weight.
    pub q_diag: [f64; 6],
    /// Diagonal of the input weight.
    pub r_diag: [f64; 3],
    /// Bound on each body rate (rad/s), stages 1..N.
    pub omega_bound: f64,
    /// Bound on each torque (N m).
    pub u_bound: f64,
    /// Initial state, angles in radians.
    pub x0: [f64; 6],
}

impl Default for SpacecraftParams {
    fn default() -> Self {
        let deg = PI / 180.0;
        SpacecraftParams {
            inertia: [918.0, 920.0, 1365.0],
            tau: 3.0,
            horizon: 30,
            q_diag: [500.0, 500.0, 500.0, 50.0, 50.0, 50.0],
            r_diag: [0.1, 0.1, 0.1],
            omega_bound: 0.02,
            u_bound: 2.0,
            x0: [0.0, 0.0, 0.0, 15.0 * deg, 30.0 * deg, -20.0 * deg],
        }
    }
}

impl SpacecraftParams {
    pub fn validate(&self) -> Result<()> {
        if self.inertia.iter().any(|&j| !(j > 0.0)) {
            return Err(Error::InvalidConfig("inertia must be positive definite"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidConfig("tau must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1"));
        }
        if !(self.omega_bound > 0.0) || !(self.u_bound > 0.0) {
            return Err(Error::InvalidConfig("bounds must be positive"));
        }
        if self.q_diag.iter().any(|&q| !(q > 0.0)) || self.r_diag.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidConfig("weights must be positive"));
        }
        Ok(())
    }

    pub fn q(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.q_diag)
    }

    pub fn r(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.r_diag)
    }

    /// Gyroscopic coefficients: `ω̇₁ = a₁ ω₂ ω₃ + u₁/J₁` and cyclic.
    fn gyro(&self) -> [f64; 3] {
        let [j1, j2, j3] = self.inertia;
        [(j2 - j3) / j1, (j3 - j1) / j2, (j1 - j2) / j3]
    }
}

struct Trig {
    s1: f64,
    c1: f64,
    t2: f64,
    sec2: f64,
}

impl Trig {
    fn new(theta: &[f64]) -> Self {
        let c2 = math::cos(theta[1]);
        Trig {
            s1: math::sin(theta[0]),
            c1: math::cos(theta[0]),
            t2: math::sin(theta[1]) / c2,
            sec2: 1.0 / c2,
        }
    }
}

fn field_unchecked(params: &SpacecraftParams, x: &[f64], u: &[f64]) -> [f64; 6] {
    let [a1, a2, a3] = params.gyro();
    let [j1, j2, j3] = params.inertia;
    let (w1, w2, w3) = (x[0], x[1], x[2]);
    let t = Trig::new(&x[3..6]);
    let a = t.s1 * w2 + t.c1 * w3;
    [
        a1 * w2 * w3 + u[0] / j1,
        a2 * w3 * w1 + u[1] / j2,
        a3 * w1 * w2 + u[2] / j3,
        w1 + t.t2 * a,
        t.c1 * w2 - t.s1 * w3,
        t.sec2 * a,
    ]
}

/// Continuous attitude dynamics `f_c(x, u)`.
pub fn attitude_field(params: &SpacecraftParams, x: &[f64], u: &[f64]) -> Result<[f64; 6]> {
    if x.len() != STATE_DIM {
        return Err(Error::dims("attitude state", STATE_DIM, x.len()));
    }
    if u.len() != INPUT_DIM {
        return Err(Error::dims("attitude input", INPUT_DIM, u.len()));
    }
    let cos_pitch = math::cos(x[4]);
    if cos_pitch.abs() <= GIMBAL_LOCK_COS {
        return Err(Error::GimbalLock { cos_pitch });
    }
    Ok(field_unchecked(params, x, u))
}

/// `∂f_c/∂(x, u)`, 6 × 9.
pub fn field_jacobian(params: &SpacecraftParams, x: &[f64], _u: &[f64]) -> DenseMatrix {
    let [a1, a2, a3] = params.gyro();
    let [j1, j2, j3] = params.inertia;
    let (w1, w2, w3) = (x[0], x[1], x[2]);
    let t = Trig::new(&x[3..6]);
    let a = t.s1 * w2 + t.c1 * w3;
    let b = t.c1 * w2 - t.s1 * w3;
    let sec_sq = t.sec2 * t.sec2;
    DenseMatrix::from_rows(&[
        [0.0, a1 * w3, a1 * w2, 0.0, 0.0, 0.0, 1.0 / j1, 0.0, 0.0],
        [a2 * w3, 0.0, a2 * w1, 0.0, 0.0, 0.0, 0.0, 1.0 / j2, 0.0],
        [a3 * w2, a3 * w1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / j3],
        [1.0, t.s1 * t.t2, t.c1 * t.t2, t.t2 * b, sec_sq * a, 0.0, 0.0, 0.0, 0.0],
        [0.0, t.c1, -t.s1, -a, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, t.s1 * t.sec2, t.c1 * t.sec2, t.sec2 * b, t.sec2 * t.t2 * a, 0.0, 0.0, 0.0, 0.0],
    ])
}

/// `Σ_k weights_k ∇²f_c,k` over `(x, u)`, 9 × 9.
pub fn field_hessian(params: &SpacecraftParams, x: &[f64], _u: &[f64], weights: &[f64]) -> DenseMatrix {
    let [a1, a2, a3] = params.gyro();
    let (w2, w3) = (x[1], x[2]);
    let t = Trig::new(&x[3..6]);
    let a = t.s1 * w2 + t.c1 * w3;
    let b = t.c1 * w2 - t.s1 * w3;
    let sec_sq = t.sec2 * t.sec2;
    let [m1, m2, m3, m4, m5, m6] = [weights[0], weights[1], weights[2], weights[3], weights[4], weights[5]];

    let mut h = DenseMatrix::zeros(9, 9);
    let mut sym = |i: usize, j: usize, v: f64| {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    };
    // ω̇ rows: bilinear in the rates.
    sym(1, 2, m1 * a1);
    sym(0, 2, m2 * a2);
    sym(0, 1, m3 * a3);

    // θ̇ rows; indices: ω = 0..3, θ₁ = 3, θ₂ = 4.
    let (th1, th2) = (3, 4);
    sym(th1, th1, -m4 * t.t2 * a - m5 * b - m6 * t.sec2 * a);
    sym(th1, th2, m4 * sec_sq * b + m6 * t.sec2 * t.t2 * b);
    sym(
        th2,
        th2,
        m4 * 2.0 * sec_sq * t.t2 * a + m6 * (t.sec2 * t.t2 * t.t2 + t.sec2 * sec_sq) * a,
    );
    sym(th1, 1, m4 * t.t2 * t.c1 - m5 * t.s1 + m6 * t.sec2 * t.c1);
    sym(th1, 2, -m4 * t.t2 * t.s1 - m5 * t.c1 - m6 * t.sec2 * t.s1);
    sym(th2, 1, m4 * sec_sq * t.s1 + m6 * t.sec2 * t.t2 * t.s1);
    sym(th2, 2, m4 * sec_sq * t.c1 + m6 * t.sec2 * t.t2 * t.c1);
    h
}

/// Euler-discretized dynamics `x + τ f_c(x, u)`.
pub fn discrete_dynamics(params: &SpacecraftParams, x: &[f64], u: &[f64]) -> Vec<f64> {
    let f = field_unchecked(params, x, u);
    x.iter().zip(f).map(|(xi, fi)| xi + params.tau * fi).collect()
}

/// Jacobians `(A, B)` of the discretized dynamics at the origin.
pub fn linearize_origin(params: &SpacecraftParams) -> (DenseMatrix, DenseMatrix) {
    let jf = field_jacobian(params, &[0.0; 6], &[0.0; 3]);
    let mut a = DenseMatrix::identity(STATE_DIM);
    let mut b = DenseMatrix::zeros(STATE_DIM, INPUT_DIM);
    for i in 0..STATE_DIM {
        for j in 0..STATE_DIM {
            a[(i, j)] += params.tau * jf[(i, j)];
        }
        for j in 0..INPUT_DIM {
            b[(i, j)] = params.tau * jf[(i, STATE_DIM + j)];
        }
    }
    (a, b)
}

/// Ellipsoidal terminal set `{x : xᵀ P x <= alpha}`, exposed as the single
/// inequality `c_N(x) = xᵀ P x - alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSet {
    pub p: DenseMatrix,
    pub alpha: f64,
}

impl TerminalSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.p.quad_form(x) <= self.alpha
    }

    pub fn constraint(&self, x: &[f64]) -> f64 {
        self.p.quad_form(x) - self.alpha
    }
}

#[derive(Debug, Clone)]
pub struct TerminalIngredients {
    /// DARE solution, also the terminal cost weight.
    pub p: DenseMatrix,
    /// LQR gain, `u = -K x`.
    pub k: DenseMatrix,
    pub terminal_set: TerminalSet,
    /// Largest level admissible for the state and input bounds under `u = -Kx`.
    pub admissible_level: f64,
    /// Largest level at which the sampled one-step decrease holds.
    pub decrease_level: f64,
}

/// `V_f(x⁺) - V_f(x) + l(x, u)` under the LQR law on the nonlinear model.
pub fn lqr_decrease(params: &SpacecraftParams, p: &DenseMatrix, k: &DenseMatrix, x: &[f64]) -> f64 {
    let u: Vec<f64> = k.matvec(x).iter().map(|v| -v).collect();
    let next = discrete_dynamics(params, x, &u);
    let stage = params.q().quad_form(x) + params.r().quad_form(&u);
    p.quad_form(&next) - p.quad_form(x) + stage
}

/// Radical inverse of `i` in base `b` (van der Corput).
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Deterministic, roughly uniform unit directions in `R⁶`: coordinate axes,
/// pairwise diagonals and Box-Muller-mapped Halton points.
fn sample_directions(count: usize) -> Vec<[f64; 6]> {
    let mut dirs = Vec::new();
    for i in 0..6 {
        for s in [1.0, -1.0] {
            let mut d = [0.0; 6];
            d[i] = s;
            dirs.push(d);
        }
    }
    let h = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..6 {
        for j in i + 1..6 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = [0.0; 6];
                d[i] = si * h;
                d[j] = sj * h;
                dirs.push(d);
            }
        }
    }
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    for idx in 1..=count as u64 {
        let u: Vec<f64> = PRIMES.iter().map(|&b| radical_inverse(idx, b)).collect();
        let mut d = [0.0; 6];
        for pair in 0..3 {
            let r = math::sqrt(-2.0 * math::ln(u[2 * pair].max(1e-300)));
            let phi = 2.0 * PI * u[2 * pair + 1];
            d[2 * pair] = r * math::cos(phi);
            d[2 * pair + 1] = r * math::sin(phi);
        }
        let norm = numerics::norm2(&d);
        if norm > 0.0 {
            d.iter_mut().for_each(|x| *x /= norm);
            dirs.push(d);
        }
    }
    dirs
}

/// DARE terminal cost, LQR gain and an admissible ellipsoidal terminal set.
///
/// The level is the smaller of
/// * the largest level on which `|K x| <= u_bound` and `|ω| <= omega_bound`,
///   from `max cᵀx over xᵀPx <= α = sqrt(α cᵀP⁻¹c)`, and
/// * the largest level (found by bisection) at which `V_f(x⁺) - V_f(x) + l(x, -Kx)`
///   stays below [`TERMINAL_DECREASE_TOL`] and `x⁺` stays in the set, on a fixed
///   sample of shells of the ellipsoid,
///
/// scaled by [`TERMINAL_SAFETY`].
pub fn build_terminal_ingredients(params: &SpacecraftParams) -> Result<TerminalIngredients> {
    params.validate()?;
    let (a, b) = linearize_origin(params);
    let dare = numerics::solve_dare(
        &a,
        &b,
        &params.q(),
        &params.r(),
        numerics::DARE_TOLERANCE,
        numerics::DARE_MAX_ITER,
    )?;
    let (p, k) = (dare.p, dare.k);
    let p_inv = LuFactorization::new(&p)?.solve_matrix(&DenseMatrix::identity(STATE_DIM))?;

    let mut admissible_level = f64::INFINITY;
    for j in 0..INPUT_DIM {
        let c = k.row(j);
        admissible_level = admissible_level.min(params.u_bound * params.u_bound / p_inv.quad_form(c));
    }
    for j in 0..3 {
        admissible_level = admissible_level.min(params.omega_bound * params.omega_bound / p_inv[(j, j)]);
    }

    let chol = numerics::cholesky(&p)?;
    let dirs = sample_directions(1000);
    // Boundary points of the unit-level ellipsoid; scale by sqrt(level).
    let unit_points: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| numerics::solve_upper_transposed(&chol, d))
        .collect();
    let holds = |level: f64| -> bool {
        [1.0, 0.5, 0.25].iter().all(|&shell| {
            let scale = math::sqrt(level * shell);
            unit_points.iter().all(|x1| {
                let x: Vec<f64> = x1.iter().map(|v| v * scale).collect();
                let u: Vec<f64> = k.matvec(&x).iter().map(|v| -v).collect();
                let next = discrete_dynamics(params, &x, &u);
                lqr_decrease(params, &p, &k, &x) <= TERMINAL_DECREASE_TOL && p.quad_form(&next) <= level
            })
        })
    };

    let decrease_level = if holds(admissible_level) {
        admissible_level
    } else {
        let mut hi = admissible_level;
        let mut lo = admissible_level;
        let mut found = false;
        for _ in 0..60 {
            lo *= 0.1;
            if holds(lo) {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::NoConvergence {
                iterations: 60,
                residual: lo,
            });
        }
        for _ in 0..50 {
            let mid = math::sqrt(lo * hi);
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let alpha = TERMINAL_SAFETY * admissible_level.min(decrease_level);
    Ok(TerminalIngredients {
        terminal_set: TerminalSet { p: p.clone(), alpha },
        p,
        k,
        admissible_level,
        decrease_level,
    })
}

/// The spacecraft OCP: quadratic costs `‖ξ‖²_Q + ‖u‖²_R`, terminal cost
/// `‖ξ_N‖²_P`, box bounds on rates and torques, ellipsoidal terminal set.
///
/// Path-constraint rows: `ω_j - b_ω` (3), `-ω_j - b_ω` (3), `u_j - b_u` (3),
/// `-u_j - b_u` (3).
#[derive(Debug, Clone)]
pub struct SpacecraftOcp {
    pub params: SpacecraftParams,
    pub terminal: TerminalSet,
}

pub fn build_spacecraft_ocp(params: &SpacecraftParams, terminal: &TerminalSet) -> SpacecraftOcp {
    SpacecraftOcp {
        params: params.clone(),
        terminal: terminal.clone(),
    }
}

impl SpacecraftOcp {
    /// Default parameters with terminal ingredients computed from them.
    pub fn standard() -> Result<Self> {
        Self::from_params(&SpacecraftParams::default())
    }

    pub fn from_params(params: &SpacecraftParams) -> Result<Self> {
        let ingredients = build_terminal_ingredients(params)?;
        Ok(build_spacecraft_ocp(params, &ingredients.terminal_set))
    }
}

const PATH_ROWS: usize = 12;

impl OptimalControlProblem for SpacecraftOcp {
    fn horizon(&self) -> usize {
        self.params.horizon
    }
    fn state_dim(&self) -> usize {
        STATE_DIM
    }
    fn input_dim(&self) -> usize {
        INPUT_DIM
    }
    fn path_constraint_count(&self) -> usize {
        PATH_ROWS
    }
    fn terminal_constraint_count(&self) -> usize {
        1
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        discrete_dynamics(&self.params, x, u)
    }
    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> DenseMatrix {
        let mut j = field_jacobian(&self.params, x, u).scale(self.params.tau);
        for i in 0..STATE_DIM {
            j[(i, i)] += 1.0;
        }
        j
    }
    fn dynamics_hessian(&self, x: &[f64], u: &[f64], weights: &[f64]) -> DenseMatrix {
        field_hessian(&self.params, x, u, weights).scale(self.params.tau)
    }
    fn stage_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        let qx: f64 = self.params.q_diag.iter().zip(x).map(|(q, v)| q * v * v).sum();
        let ru: f64 = self.params.r_diag.iter().zip(u).map(|(r, v)| r * v * v).sum();
        qx + ru
    }
    fn stage_cost_gradient(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.params.q_diag.iter().zip(x).map(|(q, v)| 2.0 * q * v).collect();
        g.extend(self.params.r_diag.iter().zip(u).map(|(r, v)| 2.0 * r * v));
        g
    }
    fn stage_cost_hessian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        let mut d = vec![0.0; STATE_DIM + INPUT_DIM];
        for (i, q) in self.params.q_diag.iter().enumerate() {
            d[i] = 2.0 * q;
        }
        for (i, r) in self.params.r_diag.iter().enumerate() {
            d[STATE_DIM + i] = 2.0 * r;
        }
        DenseMatrix::from_diagonal(&d)
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        self.terminal.p.quad_form(x)
    }
    fn terminal_cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.terminal.p.matvec(x).iter().map(|v| 2.0 * v).collect()
    }
    fn terminal_cost_hessian(&self, _: &[f64]) -> DenseMatrix {
        self.terminal.p.scale(2.0)
    }
    fn path_constraints(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let (bw, bu) = (self.params.omega_bound, self.params.u_bound);
        let mut c = Vec::with_capacity(PATH_ROWS);
        c.extend(x[..3].iter().map(|w| w - bw));
        c.extend(x[..3].iter().map(|w| -w - bw));
        c.extend(u.iter().map(|v| v - bu));
        c.extend(u.iter().map(|v| -v - bu));
        c
    }
    fn path_jacobian(&self, _: &[f64], _: &[f64]) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(PATH_ROWS, STATE_DIM + INPUT_DIM);
        for k in 0..3 {
            j[(k, k)] = 1.0;
            j[(3 + k, k)] = -1.0;
            j[(6 + k, STATE_DIM + k)] = 1.0;
            j[(9 + k, STATE_DIM + k)] = -1.0;
        }
        j
    }
    fn path_hessian(&self, _: &[f64], _: &[f64], _: &[f64]) -> DenseMatrix {
        DenseMatrix::zeros(STATE_DIM + INPUT_DIM, STATE_DIM + INPUT_DIM)
    }
    fn path_row_depends_on_input(&self, row: usize) -> bool {
        row >= 6
    }
    fn terminal_constraints(&self, x: &[f64]) -> Vec<f64> {
        vec![self.terminal.constraint(x)]
    }
    fn terminal_jacobian(&self, x: &[f64]) -> DenseMatrix {
        let g: Vec<f64> = self.terminal.p.matvec(x).iter().map(|v| 2.0 * v).collect();
        DenseMatrix::from_rows(&[g])
    }
    fn terminal_hessian(&self, _: &[f64], weights: &[f64]) -> DenseMatrix {
        self.terminal.p.scale(2.0 * weights[0])
    }
}
