mod common;

use common::*;
use sspc_core::nlp::{self, PrimalDualPoint};
use sspc_core::numerics::{self, compare_matrices, DenseMatrix};
use sspc_core::ocp::OptimalControlProblem;
use sspc_core::spacecraft::{self, SpacecraftParams};
use sspc_core::ParametricNlp;

#[test]
fn random_qp_jacobians_match_finite_differences() {
    let mut rng = rng(11);
    for trial in 0..100 {
        let qp = random_qp(&mut rng, 5, 2, 4, 3);
        let z = random_point(&mut rng, &qp, 2.0);
        let p = uniform_vec(&mut rng, 3, -1.0, 1.0);
        let jz = nlp::jacobian_z(&qp, &z, &p).unwrap();
        let d = compare_matrices(&jz, &fd_residual_z(&qp, &z, &p), FD_ATOL, FD_RTOL).unwrap();
        assert!(d.passes(), "trial {trial}: jacobian_z {d:?}");
        let jp = nlp::jacobian_p(&qp, &z, &p).unwrap();
        let d = compare_matrices(&jp, &fd_residual_p(&qp, &z, &p), FD_ATOL, FD_RTOL).unwrap();
        assert!(d.passes(), "trial {trial}: jacobian_p {d:?}");
    }
}

#[test]
fn tracking_qp_callbacks_are_exact() {
    let qp = sspc_core::problems::TrackingQp;
    for (w, v, p) in [(0.3, 0.2, 1.5), (2.0, -0.4, 0.1), (-1.0, 1.0, -2.0)] {
        let z = PrimalDualPoint {
            w: vec![w],
            lambda: vec![],
            v: vec![v],
        };
        for check in nlp::check_derivatives(&qp, &z, &[p], 1e-9, 0.0).unwrap() {
            assert!(check.discrepancy.max_abs_error <= 1e-9, "{}: {:?}", check.block, check.discrepancy);
        }
    }
}

#[test]
fn attitude_field_jacobian_matches_finite_differences() {
    let params = SpacecraftParams::default();
    let mut rng = rng(3);
    for _ in 0..100 {
        let mut xu = random_attitude(&mut rng, 0.05, 1.0);
        xu.extend(uniform_vec(&mut rng, 3, -3.0, 3.0));
        let analytic = spacecraft::field_jacobian(&params, &xu[..6], &xu[6..]);
        let fd = numerics::fd_jacobian(|v| spacecraft_field(&params, v), &xu, 1e-6).unwrap();
        let d = compare_matrices(&analytic, &fd, FD_ATOL, FD_RTOL).unwrap();
        assert!(d.passes(), "at {xu:?}: {d:?}");
    }
}

#[test]
fn attitude_field_hessian_matches_finite_differences() {
    let params = SpacecraftParams::default();
    let mut rng = rng(4);
    for _ in 0..100 {
        let mut xu = random_attitude(&mut rng, 0.5, 1.0);
        xu.extend(uniform_vec(&mut rng, 3, -3.0, 3.0));
        let weights = uniform_vec(&mut rng, 6, -2.0, 2.0);
        let weighted_gradient = |v: &[f64]| -> Vec<f64> {
            spacecraft::field_jacobian(&params, &v[..6], &v[6..]).tr_matvec(&weights)
        };
        let analytic = spacecraft::field_hessian(&params, &xu[..6], &xu[6..], &weights);
        let fd = numerics::fd_jacobian(weighted_gradient, &xu, 1e-6).unwrap();
        let d = compare_matrices(&analytic, &fd, FD_ATOL, FD_RTOL).unwrap();
        assert!(d.passes(), "at {xu:?}: {d:?}");
        assert_eq!(analytic, analytic.transpose());
    }
}

#[test]
fn gyroscopic_term_does_no_work() {
    let params = SpacecraftParams::default();
    let mut rng = rng(5);
    for _ in 0..1000 {
        let x = random_attitude(&mut rng, 1.0, 1.0);
        let f = spacecraft::attitude_field(&params, &x, &[0.0; 3]).unwrap();
        let power: f64 = (0..3).map(|i| x[i] * params.inertia[i] * f[i]).sum();
        assert!(power.abs() <= 1e-12, "ωᵀJω̇ = {power}");
    }
}

#[test]
fn linearization_matches_finite_differences() {
    let params = SpacecraftParams::default();
    let (a, b) = spacecraft::linearize_origin(&params);
    let fd = numerics::fd_jacobian(
        |xu| spacecraft::discrete_dynamics(&params, &xu[..6], &xu[6..]),
        &[0.0; 9],
        1e-6,
    )
    .unwrap();
    let cols_x: Vec<usize> = (0..6).collect();
    let cols_u: Vec<usize> = (6..9).collect();
    let rows: Vec<usize> = (0..6).collect();
    assert!(compare_matrices(&a, &fd.select(&rows, &cols_x), 1e-6, 0.0).unwrap().passes());
    assert!(compare_matrices(&b, &fd.select(&rows, &cols_u), 1e-6, 0.0).unwrap().passes());
    for i in 0..3 {
        assert!((b[(i, i)] - 3.0 / params.inertia[i]).abs() < 1e-15);
        assert_eq!(a[(3 + i, i)], 3.0);
    }
}

#[test]
fn spacecraft_ocp_callbacks_match_finite_differences() {
    let sc = spacecraft();
    let ocp = sc.nlp.ocp();
    let mut rng = rng(6);
    for _ in 0..100 {
        let x = random_attitude(&mut rng, 0.05, 1.0);
        let u = uniform_vec(&mut rng, 3, -3.0, 3.0);
        let xu: Vec<f64> = x.iter().chain(&u).copied().collect();
        let split = |v: &[f64]| (v[..6].to_vec(), v[6..].to_vec());

        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                ocp.dynamics(&x, &u)
            },
            &xu,
            1e-6,
        )
        .unwrap();
        assert!(compare_matrices(&ocp.dynamics_jacobian(&x, &u), &fd, FD_ATOL, FD_RTOL).unwrap().passes());

        let weights = uniform_vec(&mut rng, 6, -1.0, 1.0);
        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                ocp.dynamics_jacobian(&x, &u).tr_matvec(&weights)
            },
            &xu,
            1e-6,
        )
        .unwrap();
        assert!(compare_matrices(&ocp.dynamics_hessian(&x, &u, &weights), &fd, FD_ATOL, FD_RTOL)
            .unwrap()
            .passes());

        let fd = numerics::fd_jacobian(
            |v| {
                let (x, u) = split(v);
                vec![ocp.stage_cost(&x, &u)]
            },
            &xu,
            1e-6,
        )
        .unwrap();
        let grad = DenseMatrix::from_rows(&[ocp.stage_cost_gradient(&x, &u)]);
        assert!(compare_matrices(&grad, &fd, FD_ATOL, FD_RTOL).unwrap().passes());

        let fd = numerics::fd_jacobian(|v| ocp.terminal_jacobian(v).row(0).to_vec(), &x, 1e-6).unwrap();
        assert!(compare_matrices(&ocp.terminal_hessian(&x, &[1.0]), &fd, FD_ATOL, FD_RTOL)
            .unwrap()
            .passes());
        let fd = numerics::fd_jacobian(|v| vec![ocp.terminal_cost(v)], &x, 1e-6).unwrap();
        let grad = DenseMatrix::from_rows(&[ocp.terminal_cost_gradient(&x)]);
        assert!(compare_matrices(&grad, &fd, FD_ATOL, FD_RTOL).unwrap().passes());
    }
}

#[test]
fn spacecraft_nlp_jacobians_match_finite_differences() {
    let sc = spacecraft();
    let mut rng = rng(7);
    for _ in 0..3 {
        let mut z = random_point(&mut rng, &sc.nlp, 0.01);
        z.lambda.iter_mut().for_each(|l| *l *= 100.0);
        z.v.iter_mut().for_each(|v| *v = v.abs() * 10.0);
        let p = random_attitude(&mut rng, 0.02, 0.5);
        for check in nlp::check_derivatives(&sc.nlp, &z, &p, FD_ATOL, FD_RTOL).unwrap() {
            assert!(check.discrepancy.passes(), "{}: {:?}", check.block, check.discrepancy);
        }
        let jp = nlp::jacobian_p(&sc.nlp, &z, &p).unwrap();
        let d = compare_matrices(&jp, &fd_residual_p(&sc.nlp, &z, &p), FD_ATOL, FD_RTOL).unwrap();
        assert!(d.passes(), "jacobian_p {d:?}");
    }
}

#[test]
fn spacecraft_kkt_jacobian_matches_finite_differences() {
    let sc = spacecraft();
    let mut rng = rng(8);
    let mut z = random_point(&mut rng, &sc.nlp, 0.01);
    z.v.iter_mut().for_each(|v| *v = v.abs() + 0.1);
    let p = sc.params.x0.to_vec();
    let jz = nlp::jacobian_z(&sc.nlp, &z, &p).unwrap();
    let d = compare_matrices(&jz, &fd_residual_z(&sc.nlp, &z, &p), FD_ATOL, FD_RTOL).unwrap();
    assert!(d.passes(), "jacobian_z {d:?}");
}

#[test]
fn corrupted_jacobian_is_caught() {
    struct Corrupt(sspc_core::problems::TrackingQp);
    impl ParametricNlp for Corrupt {
        fn dims(&self) -> sspc_core::NlpDims {
            self.0.dims()
        }
        fn objective(&self, w: &[f64], p: &[f64]) -> f64 {
            self.0.objective(w, p)
        }
        fn objective_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
            self.0.objective_gradient(w, p)
        }
        fn equality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
            self.0.equality(w, p)
        }
        fn equality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
            self.0.equality_jacobian(w, p)
        }
        fn equality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
            self.0.equality_param_jacobian(w, p)
        }
        fn inequality(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
            self.0.inequality(w, p)
        }
        fn inequality_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
            self.0.inequality_jacobian(w, p).scale(1.5)
        }
        fn inequality_param_jacobian(&self, w: &[f64], p: &[f64]) -> DenseMatrix {
            self.0.inequality_param_jacobian(w, p)
        }
        fn lagrangian_hessian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
            self.0.lagrangian_hessian(z, p)
        }
        fn lagrangian_param_jacobian(&self, z: &PrimalDualPoint, p: &[f64]) -> DenseMatrix {
            self.0.lagrangian_param_jacobian(z, p)
        }
    }
    let z = PrimalDualPoint {
        w: vec![0.5],
        lambda: vec![],
        v: vec![0.3],
    };
    let failed: Vec<_> = nlp::check_derivatives(&Corrupt(sspc_core::problems::TrackingQp), &z, &[1.0], FD_ATOL, FD_RTOL)
        .unwrap()
        .into_iter()
        .filter(|c| !c.discrepancy.passes())
        .map(|c| c.block)
        .collect();
    assert_eq!(failed, ["inequality Jacobian"]);
}
