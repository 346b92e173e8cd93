mod common;

use common::*;
use rand::Rng;
use sspc_core::numerics;
use sspc_core::spacecraft::{self, SpacecraftParams, TERMINAL_SAFETY};

/// Uniform point on the unit sphere in R⁶ via normalized Gaussians.
fn sphere_point(rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..3)
            .flat_map(|_| {
                let u1: f64 = rng.random_range(f64::EPSILON..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                let r = (-2.0 * u1.ln()).sqrt();
                let t = std::f64::consts::TAU * u2;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let n = numerics::norm2(&g);
        if n > 1e-6 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// `x` with `xᵀPx = level`, from a unit direction `d` in whitened coordinates.
fn on_level(l: &numerics::DenseMatrix, d: &[f64], level: f64) -> Vec<f64> {
    numerics::solve_upper_transposed(l, d).into_iter().map(|v| v * level.sqrt()).collect()
}

#[test]
fn ingredients_are_consistent() {
    let params = SpacecraftParams::default();
    let ing = spacecraft::build_terminal_ingredients(&params).unwrap();
    let (a, b) = spacecraft::linearize_origin(&params);
    let res = numerics::dare_residual(&a, &b, &params.q(), &params.r(), &ing.p).unwrap();
    assert!(res <= numerics::DARE_TOLERANCE);
    assert!(ing.terminal_set.alpha > 0.0);
    assert!(ing.terminal_set.alpha <= TERMINAL_SAFETY * ing.admissible_level * (1.0 + 1e-15));
    assert!(ing.terminal_set.alpha <= TERMINAL_SAFETY * ing.decrease_level * (1.0 + 1e-15));
}

#[test]
fn boundary_points_satisfy_bounds() {
    let params = SpacecraftParams::default();
    let ing = spacecraft::build_terminal_ingredients(&params).unwrap();
    let l = numerics::cholesky(&ing.p).unwrap();
    let mut rng = rng(41);
    for _ in 0..1000 {
        let x = on_level(&l, &sphere_point(&mut rng), ing.terminal_set.alpha);
        assert!((ing.p.quad_form(&x) / ing.terminal_set.alpha - 1.0).abs() < 1e-9);
        let u = ing.k.matvec(&x);
        assert!(u.iter().all(|v| v.abs() <= params.u_bound), "u = {u:?}");
        assert!(x[..3].iter().all(|w| w.abs() <= params.omega_bound));
    }
}

#[test]
fn lqr_decreases_terminal_cost_inside_set() {
    let params = SpacecraftParams::default();
    let ing = spacecraft::build_terminal_ingredients(&params).unwrap();
    let alpha = ing.terminal_set.alpha;
    let l = numerics::cholesky(&ing.p).unwrap();
    let mut rng = rng(42);
    for _ in 0..1000 {
        // Uniform in the ellipsoid: radius ∝ s^(1/6).
        let s: f64 = rng.random_range(0.0..1.0);
        let x = on_level(&l, &sphere_point(&mut rng), alpha * s.powf(1.0 / 3.0));
        let decrease = spacecraft::lqr_decrease(&params, &ing.p, &ing.k, &x);
        assert!(decrease <= 1e-6, "decrease {decrease} at {x:?}");
        let u: Vec<f64> = ing.k.matvec(&x).iter().map(|v| -v).collect();
        let next = spacecraft::discrete_dynamics(&params, &x, &u);
        assert!(ing.terminal_set.contains(&next));
    }
}
