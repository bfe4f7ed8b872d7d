use std::f64::consts::PI;

use surfflow::solver::*;
use surfflow::spectral::*;
use surfflow::stokes::{Elimination, Integrator};
use surfflow::Error;

fn params(t_final: f64) -> SolverParams {
    SolverParams {
        n: 3,
        mu: 1.0,
        c_g: 1.0,
        c_sigma: 1.0,
        sigma: 1.0,
        dt: 0.25,
        t_final,
        gamma: 0.0,
        picard_min_iters: 2,
        picard_max_iters: 8,
        picard_tol: 1e-10,
        record_every: 1,
        q: 2.0,
        elimination: Elimination::Monolithic,
        integrator: Integrator::ImplicitEuler,
    }
}

fn grids() -> (HorizontalGrid, VerticalGrid) {
    (HorizontalGrid::for_dimension(3, 2.0 * PI * 4.0, 8).unwrap(), VerticalGrid::new(6.0, 10).unwrap())
}

#[test]
fn zero_state_stays_zero() {
    let (h, v) = grids();
    let r = run_simulation(&params(1.0), &h, &v, &HeightField::zeros(&h), &BulkField::zeros(&h, &v, 3)).unwrap();
    assert!(r.failure.is_none());
    assert_eq!(r.steps.len(), 4);
    for (e, u) in r.state.eta.iter().zip(&r.state.u) {
        assert_eq!(e.max_abs(), 0.0);
        assert_eq!(u.max_abs(), 0.0);
    }
}

#[test]
fn steep_surface_is_rejected() {
    let (h, v) = grids();
    let eta0 = HeightField::from_fn(&h, |x| 3.0 * (x[0] / 4.0).sin());
    let err = run_simulation(&params(1.0), &h, &v, &eta0, &BulkField::zeros(&h, &v, 3)).unwrap_err();
    assert!(matches!(err, Error::DiffeoViolation { .. }), "{err:?}");
}

#[test]
fn small_bump_decays_and_keeps_constraints() {
    let (h, v) = grids();
    let c = 4.0 * PI;
    let eta0 = HeightField::from_fn(&h, |x| 1e-3 * (-((x[0] - c).powi(2) + (x[1] - c).powi(2)) / 16.0).exp());
    let r = run_simulation(&params(2.0), &h, &v, &eta0, &BulkField::zeros(&h, &v, 3)).unwrap();
    assert!(r.failure.is_none());
    for s in &r.steps {
        assert!(s.ratios.iter().all(|&x| x < 0.5), "{:?}", s.ratios);
        assert!(s.min_jacobian > 0.99);
        assert!(s.div_residual < 1e-8, "{}", s.div_residual);
    }
    let eta_sup = r.state.norm_log.column("eta_sup").unwrap();
    assert!(eta_sup.last().unwrap() < &eta_sup[0]);
}

#[test]
fn compatibility_of_surface_only_data() {
    let (h, v) = grids();
    let eta0 = HeightField::from_fn(&h, |x| 1e-2 * (x[0] / 4.0).cos() * (x[1] / 4.0).sin());
    let coef = params(1.0).coefficients();
    let rep = check_compatibility(&eta0, &BulkField::zeros(&h, &v, 3), coef, 1e-12).unwrap();
    assert!(rep.div_residual <= 1e-12 && rep.stress_residual <= 1e-12);
    let u = BulkField::from_fn(&h, &v, 3, |_, z| vec![0.0, 0.0, 1e-3 * z]);
    assert!(matches!(check_compatibility(&HeightField::zeros(&h), &u, coef, 1e-12), Err(Error::IncompatibleData { .. })));
}

#[test]
fn nonpositive_viscosity_is_rejected() {
    let (h, v) = grids();
    let mut p = params(1.0);
    p.mu = 0.0;
    assert!(PicardSolver::new(p, &h, &v).is_err());
}
