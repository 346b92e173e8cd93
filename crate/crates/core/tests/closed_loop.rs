mod common;

use common::*;
use sspc_core::mpc::{self, init_compensator};
use sspc_core::ocp::transcribe;
use sspc_core::problems::LinearQuadraticOcp;
use sspc_core::sim::{self, NoClock, PlantModel, SimConfig, SimTrace};
use sspc_core::{ParametricNlp, PrimalDualPoint, SspcConfig};

fn spacecraft_run(ell: usize, steps: usize, subopt: bool) -> SimTrace {
    let sc = spacecraft();
    let plant = sim::spacecraft_plant(&sc.params).unwrap();
    let x0 = sc.params.x0.to_vec();
    let mut comp = init_compensator(&sc.nlp, &sc.layout, &SspcConfig::with_ell(ell), None, &x0).unwrap();
    let cfg = SimConfig {
        steps,
        record_suboptimality: subopt,
        ..SimConfig::default()
    };
    sim::simulate(&plant, &sc.nlp, &mut comp, &x0, &cfg, &NoClock)
}

#[test]
fn scalar_integrator_reaches_clamped_law() {
    // Two updates at a frozen state, eight Newton steps in total.
    let (nlp, layout) = transcribe(LinearQuadraticOcp::scalar_integrator(0.3)).unwrap();
    for x in [-2.0, -0.5, 0.0, 0.2, 0.5, 3.0] {
        let mut comp = init_compensator(&nlp, &layout, &SspcConfig::with_ell(3), None, &[x]).unwrap();
        comp.update(&nlp, &[x]).unwrap();
        let u = comp.update(&nlp, &[x]).unwrap();
        let expected = (-x / 2.0f64).clamp(-0.3, 0.3);
        assert!((u[0] - expected).abs() <= 1e-10, "x = {x}: u = {u:?}");
    }
}

#[test]
fn converged_estimate_is_kept() {
    let (nlp, layout) = transcribe(LinearQuadraticOcp::double_integrator(10).unwrap()).unwrap();
    let cfg = SspcConfig::with_ell(3);
    let x = [0.5, -0.2];
    let (u_star, z) = mpc::ideal_control(&nlp, &layout, &cfg, &x, &PrimalDualPoint::zeros(nlp.dims())).unwrap();
    let mut comp = init_compensator(&nlp, &layout, &cfg, Some(z.clone()), &x).unwrap();
    let u = comp.update(&nlp, &x).unwrap();
    assert!(comp.z.distance(&z) <= 1e-9);
    assert!(u.iter().zip(&u_star).all(|(a, b)| (a - b).abs() <= 1e-9));
}

#[test]
fn trace_is_consistent() {
    let (nlp, layout) = transcribe(LinearQuadraticOcp::double_integrator(10).unwrap()).unwrap();
    let plant = scalar_free_double_integrator();
    let x0 = [1.0, 0.0];
    let mut comp = init_compensator(&nlp, &layout, &SspcConfig::with_ell(2), None, &x0).unwrap();
    let cfg = SimConfig {
        steps: 40,
        record_suboptimality: true,
        keep_iterates: true,
        ..SimConfig::default()
    };
    let trace = sim::simulate(&plant, &nlp, &mut comp, &x0, &cfg, &NoClock);
    assert!(trace.is_complete());
    assert_eq!(trace.records.len(), 41);
    for (i, r) in trace.records.iter().enumerate() {
        assert_eq!(r.k, i);
        // No sampling time on the plant, so samples are unit-spaced.
        assert_eq!(r.t, i as f64);
        assert_eq!(r.ell, 2);
        assert!(r.wall.is_none());
        let z = r.z.as_ref().unwrap();
        assert_eq!(layout.extract_control(z), r.u);
        let residual = sspc_core::nlp::residual(&nlp, z, &r.x).unwrap().norm2;
        assert!((residual - r.residual).abs() <= 1e-12 * (1.0 + residual));
        assert!(r.subopt.unwrap() >= 0.0);
        assert_eq!(r.max_violation, r.margins.iter().copied().fold(0.0, f64::max));
    }
    for pair in trace.records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let expected = plant.step(&a.x, &a.u).unwrap();
        assert_eq!(b.x, expected);
    }
}

/// `x⁺ = A x + B u` with the double-integrator matrices.
fn scalar_free_double_integrator() -> PlantModel {
    let ocp = LinearQuadraticOcp::double_integrator(1).unwrap();
    PlantModel::new(2, 1, move |x, u| {
        let mut next = ocp.a.matvec(x);
        for (n, bu) in next.iter_mut().zip(ocp.b.matvec(u)) {
            *n += bu;
        }
        Ok(next)
    })
    .unwrap()
}

#[test]
fn runs_are_deterministic() {
    let a = spacecraft_run(1, 5, false);
    let b = spacecraft_run(1, 5, false);
    assert!(a.is_complete());
    for (ra, rb) in a.records.iter().zip(&b.records) {
        assert_eq!(ra.x, rb.x);
        assert_eq!(ra.u, rb.u);
        assert_eq!(ra.residual.to_bits(), rb.residual.to_bits());
    }
}

#[test]
fn large_budget_tracks_ideal_law() {
    let trace = spacecraft_run(10, 12, true);
    assert!(trace.is_complete());
    for r in &trace.records[3..] {
        assert!(r.subopt.unwrap() <= 1e-6, "k = {}: {:?}", r.k, r.subopt);
    }
}

#[test]
fn more_correctors_reduce_suboptimality() {
    let one = spacecraft_run(1, 30, true);
    let two = spacecraft_run(2, 30, true);
    let pairs: Vec<(f64, f64)> = one
        .records
        .iter()
        .zip(&two.records)
        .skip(1)
        .map(|(a, b)| (a.subopt.unwrap(), b.subopt.unwrap()))
        .collect();
    let better = pairs.iter().filter(|(a, b)| b <= a).count();
    assert!(better * 10 >= pairs.len() * 9, "{better} of {}: {pairs:?}", pairs.len());
}
