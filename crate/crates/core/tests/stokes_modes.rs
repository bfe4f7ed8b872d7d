use surfflow::spectral::VerticalGrid;
use surfflow::stokes::{solve_reduced_mode, solve_resolvent_mode, ModeOperator, ModeRhs, SpectralColumn, StokesParams};
use surfflow::Complex64 as C;

const PARAMS: StokesParams = StokesParams { mu: 0.7, c_g: 1.3, c_sigma: 0.4 };
const ETA: C = C::new(0.3, -0.2);


// Closed-form profiles on [-1, 0] with value, first and second derivative.
fn upar(z: f64) -> [f64; 3] {
    let e = z.exp();
    [(z + 1.0) * e, (z + 2.0) * e, (z + 3.0) * e]
}
fn uperp(z: f64) -> [f64; 3] {
    let s = (z + 1.0).sin();
    [s, (z + 1.0).cos(), -s]
}
fn un(z: f64) -> [f64; 3] {
    let w = z + 1.0;
    [w * w * z.cos(), 2.0 * w * z.cos() - w * w * z.sin(), 2.0 * z.cos() - 4.0 * w * z.sin() - w * w * z.cos()]
}
fn pr(z: f64) -> [f64; 2] {
    [(2.0 * z).cos() + z, -2.0 * (2.0 * z).sin() + 1.0]
}

/// Data for the manufactured solution in the mode `xi`; returns also the exact profiles.
fn manufactured(op: &ModeOperator, lambda: C) -> (ModeRhs, Vec<Vec<C>>, Vec<C>) {
    let n = op.n();
    let m = op.v.points();
    let mu = op.params.mu;
    let k = op.k;
    let e = [op.xi[0] / k, op.xi[1] / k];
    let eperp = [-e[1], e[0]];
    let i = C::new(0.0, 1.0);
    let mut rhs = ModeRhs::zeros(n, m);
    let mut u = vec![vec![C::new(0.0, 0.0); m]; n];
    let mut p = vec![C::new(0.0, 0.0); m];
    let comp = |a: usize, z: f64| -> [f64; 3] {
        let (q, r) = (upar(z), uperp(z));
        let (ea, pa) = if n == 2 { (1.0, 0.0) } else { (e[a], eperp[a]) };
        [q[0] * ea + r[0] * pa, q[1] * ea + r[1] * pa, q[2] * ea + r[2] * pa]
    };
    for iz in 0..m {
        let z = op.v.node(iz);
        let pz = pr(z);
        p[iz] = C::new(pz[0], 0.0);
        for a in 0..n - 1 {
            let w = comp(a, z);
            u[a][iz] = C::new(w[0], 0.0);
            rhs.f[a][iz] = (lambda + mu * k * k) * w[0] - mu * w[2] + i * op.xi[a] * pz[0];
        }
        let w = un(z);
        u[n - 1][iz] = C::new(w[0], 0.0);
        rhs.f[n - 1][iz] = (lambda + mu * k * k) * w[0] - mu * w[2] + pz[1];
    }
    rhs.g_tilde = u.clone();
    let top = un(0.0);
    rhs.d = lambda * ETA - top[0];
    for a in 0..n - 1 {
        let w = comp(a, 0.0);
        rhs.h[a] = C::new(mu * w[1], 0.0) + i * (mu * op.xi[a] * top[0]);
    }
    rhs.h[n - 1] = C::new(2.0 * mu * top[1] - pr(0.0)[0], 0.0) + op.surface_coeff() * ETA;
    (rhs, u, p)
}

fn error(col: &SpectralColumn, u: &[Vec<C>], p: &[C]) -> (f64, f64) {
    let ue = col
        .u
        .iter()
        .zip(u)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
        .fold((col.eta - ETA).norm(), f64::max);
    let pe = col.p.iter().zip(p).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    (ue, pe)
}

fn order(errs: &[f64]) -> f64 {
    let n = errs.len();
    (errs[n - 2] / errs[n - 1]).log2()
}

fn study(xi: [f64; 3], dim_h: usize, lambda: C) -> (Vec<f64>, Vec<f64>) {
    let mut ue = Vec::new();
    let mut pe = Vec::new();
    for m in [33, 65, 129, 257] {
        let v = VerticalGrid::new(1.0, m).unwrap();
        let op = ModeOperator::new(xi, dim_h, &v, PARAMS);
        let (rhs, u, p) = manufactured(&op, lambda);
        let col = solve_resolvent_mode(&op, lambda, &rhs).unwrap();
        let (a, b) = error(&col, &u, &p);
        ue.push(a);
        pe.push(b);
    }
    (ue, pe)
}

#[test]
fn meridional_mode_converges_at_second_order() {
    for (k, lambda) in [(1.3, C::new(2.0, 3.0)), (0.05, C::new(0.5, -1.0)), (9.0, C::new(20.0, 5.0))] {
        let (ue, pe) = study([k, 0.0, 0.0], 1, lambda);
        println!("k={k}: velocity {ue:?} pressure {pe:?}");
        assert!(order(&ue) > 1.8, "velocity order {}", order(&ue));
        assert!(order(&pe) > 1.8, "pressure order {}", order(&pe));
    }
}

#[test]
fn oblique_mode_in_three_dimensions() {
    let (ue, pe) = study([0.8, -1.1, 0.0], 2, C::new(1.0, 2.0));
    println!("velocity {ue:?} pressure {pe:?}");
    assert!(order(&ue) > 1.8);
    assert!(order(&pe) > 1.8);
}

#[test]
fn reduced_matches_monolithic() {
    let v = VerticalGrid::new(1.0, 48).unwrap();
    for (xi, lambda) in [([0.4, 0.3, 0.0], C::new(1.0, 0.5)), ([3.0, -2.0, 0.0], C::new(0.2, 4.0))] {
        let op = ModeOperator::new(xi, 2, &v, PARAMS);
        let (rhs, _, _) = manufactured(&op, lambda);
        let a = solve_resolvent_mode(&op, lambda, &rhs).unwrap();
        let b = solve_reduced_mode(&op, lambda, &rhs).unwrap();
        let scale = a.u.iter().flatten().map(|z| z.norm()).fold(a.eta.norm(), f64::max);
        let diff = a.u.iter().flatten().zip(b.u.iter().flatten()).map(|(x, y)| (x - y).norm()).fold((a.eta - b.eta).norm(), f64::max);
        println!("xi={xi:?} rel diff {:e}", diff / scale);
        assert!(diff / scale < 1e-10, "relative difference {}", diff / scale);
    }
}
