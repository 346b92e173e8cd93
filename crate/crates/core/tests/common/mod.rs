#![allow(dead_code)]

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sspc_core::nlp::{self, PrimalDualPoint};
use sspc_core::numerics::{self, DenseMatrix};
use sspc_core::ocp::{transcribe, TranscribedNlp, VariableLayout};
use sspc_core::problems::DenseQp;
use sspc_core::spacecraft::{self, SpacecraftOcp, SpacecraftParams};
use sspc_core::ParametricNlp;

pub const FD_ATOL: f64 = 1e-6;
pub const FD_RTOL: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, uniform_vec(rng, rows * cols, -1.0, 1.0)).unwrap()
}

/// Random QP with `H = MᵀM + I`.
pub fn random_qp(rng: &mut impl Rng, n: usize, m: usize, q: usize, n_p: usize) -> DenseQp {
    let g = uniform_matrix(rng, n, n);
    let hessian = g.transpose().matmul(&g).add(&DenseMatrix::identity(n));
    DenseQp {
        hessian,
        linear_param: uniform_matrix(rng, n, n_p),
        linear: uniform_vec(rng, n, -1.0, 1.0),
        eq_matrix: uniform_matrix(rng, m, n),
        eq_param: uniform_matrix(rng, m, n_p),
        eq_rhs: uniform_vec(rng, m, -1.0, 1.0),
        ineq_matrix: uniform_matrix(rng, q, n),
        ineq_param: uniform_matrix(rng, q, n_p),
        ineq_rhs: uniform_vec(rng, q, -1.0, 1.0),
    }
}

pub fn random_point<N: ParametricNlp>(rng: &mut impl Rng, nlp: &N, scale: f64) -> PrimalDualPoint {
    let dims = nlp.dims();
    PrimalDualPoint::from_stacked(dims, &uniform_vec(rng, dims.z_len(), -scale, scale)).unwrap()
}

pub fn fd_residual_z<N: ParametricNlp>(nlp: &N, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
    let dims = nlp.dims();
    let zs = z.to_stacked();
    numerics::fd_jacobian(
        |x| {
            let z = PrimalDualPoint::from_stacked(dims, x).unwrap();
            nlp::residual(nlp, &z, p).unwrap().to_stacked()
        },
        &zs,
        numerics::default_fd_step(&zs),
    )
    .unwrap()
}

pub fn fd_residual_p<N: ParametricNlp>(nlp: &N, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
    numerics::fd_jacobian(
        |p| nlp::residual(nlp, z, p).unwrap().to_stacked(),
        p,
        numerics::default_fd_step(p),
    )
    .unwrap()
}

pub struct Spacecraft {
    pub params: SpacecraftParams,
    pub nlp: TranscribedNlp<SpacecraftOcp>,
    pub layout: VariableLayout,
}

/// Default spacecraft problem, built once per test binary.
pub fn spacecraft() -> &'static Spacecraft {
    static CELL: OnceLock<Spacecraft> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = SpacecraftParams::default();
        let ocp = SpacecraftOcp::from_params(&params).unwrap();
        let (nlp, layout) = transcribe(ocp).unwrap();
        Spacecraft { params, nlp, layout }
    })
}

/// Random state with rates inside the bounds and moderate angles.
pub fn random_attitude(rng: &mut impl Rng, omega: f64, angle: f64) -> Vec<f64> {
    let mut x = uniform_vec(rng, 3, -omega, omega);
    x.extend(uniform_vec(rng, 3, -angle, angle));
    x
}

pub fn spacecraft_field(params: &SpacecraftParams, xu: &[f64]) -> Vec<f64> {
    spacecraft::attitude_field(params, &xu[..6], &xu[6..]).unwrap().to_vec()
}
