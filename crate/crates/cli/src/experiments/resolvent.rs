//! Per-mode checks of the resolvent problem: manufactured convergence, the resolvent
//! estimate over a sector sweep, and reduced against monolithic elimination.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use surfflow::spectral::VerticalGrid;
use surfflow::stokes::{
    resolvent_ratio, solve_reduced_mode, solve_resolvent_mode, ModeOperator, ModeRhs, ResolventSector, SpectralColumn,
    StokesParams,
};
use surfflow::{Complex64 as C, Result};

use super::convergence::Refinement;
use super::fields::rng;

const I: C = C::new(0.0, 1.0);

/// Profile `sum_j c_j (e^{a_j z} - e^{-a_j H})`, zero at the bottom.
#[derive(Clone, Debug)]
struct ExpProfile {
    terms: Vec<(C, f64)>,
    depth: f64,
}

impl ExpProfile {
    fn random(r: &mut ChaCha8Rng, depth: f64) -> Self {
        let terms = (0..3)
            .map(|_| (C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)), r.gen_range(0.3..2.0)))
            .collect();
        Self { terms, depth }
    }

    /// Value and first two derivatives.
    fn eval(&self, z: f64) -> [C; 3] {
        let mut out = [C::new(0.0, 0.0); 3];
        for &(c, a) in &self.terms {
            let e = (a * z).exp();
            out[0] += c * (e - (-a * self.depth).exp());
            out[1] += c * a * e;
            out[2] += c * a * a * e;
        }
        out
    }
}

/// Exact mode solution `(eta, u, p)` and its data for the resolvent problem.
#[derive(Clone, Debug)]
pub struct ManufacturedMode {
    eta: C,
    u: Vec<ExpProfile>,
    p: ExpProfile,
}

impl ManufacturedMode {
    pub fn random(n: usize, depth: f64, seed: u64) -> Self {
        let mut r = rng(seed);
        let eta = C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let u = (0..n).map(|_| ExpProfile::random(&mut r, depth)).collect();
        let p = ExpProfile::random(&mut r, depth);
        Self { eta, u, p }
    }

    /// Continuum data `(d, f, g_tilde = u, h)` sampled on the grid of `op`.
    pub fn data(&self, op: &ModeOperator, lambda: C) -> ModeRhs {
        let n = op.n();
        let m = op.v.points();
        let mu = op.params.mu;
        let k2 = op.k * op.k;
        let mut rhs = ModeRhs::zeros(n, m);
        for iz in 0..m {
            let z = op.v.node(iz);
            let p = self.p.eval(z);
            for c in 0..n {
                let w = self.u[c].eval(z);
                let grad_p = if c + 1 == n { p[1] } else { I * op.xi[c] * p[0] };
                rhs.f[c][iz] = (lambda + mu * k2) * w[0] - mu * w[2] + grad_p;
                rhs.g_tilde[c][iz] = w[0];
            }
        }
        let top: Vec<[C; 3]> = self.u.iter().map(|pr| pr.eval(0.0)).collect();
        let un = top[n - 1];
        rhs.d = lambda * self.eta - un[0];
        for a in 0..n - 1 {
            rhs.h[a] = mu * (top[a][1] + I * op.xi[a] * un[0]);
        }
        rhs.h[n - 1] = 2.0 * mu * un[1] - self.p.eval(0.0)[0] + op.surface_coeff() * self.eta;
        rhs
    }

    /// Max-norm error of a computed column against the exact profiles.
    pub fn error(&self, op: &ModeOperator, col: &SpectralColumn) -> f64 {
        let mut e = (col.eta - self.eta).norm();
        for iz in 0..op.v.points() {
            let z = op.v.node(iz);
            for (c, pr) in self.u.iter().enumerate() {
                e = e.max((col.u[c][iz] - pr.eval(z)[0]).norm());
            }
            e = e.max((col.p[iz] - self.p.eval(z)[0]).norm());
        }
        e
    }
}

/// Manufactured convergence for one mode under vertical refinement.
pub fn manufactured_order(xi: [f64; 3], dim_h: usize, lambda: C, params: StokesParams, depth: f64, levels: &[usize], seed: u64) -> Result<Refinement> {
    let exact = ManufacturedMode::random(dim_h + 1, depth, seed);
    let mut errors = Vec::new();
    for &m in levels {
        let v = VerticalGrid::new(depth, m)?;
        let op = ModeOperator::new(xi, dim_h, &v, params);
        let col = solve_resolvent_mode(&op, lambda, &exact.data(&op, lambda))?;
        errors.push(exact.error(&op, &col));
    }
    Ok(Refinement { levels: levels.to_vec(), errors })
}

fn smooth_data(n: usize, v: &VerticalGrid, seed: u64) -> ModeRhs {
    let mut r = rng(seed);
    let profiles: Vec<ExpProfile> = (0..n).map(|_| ExpProfile::random(&mut r, v.depth())).collect();
    let mut rhs = ModeRhs::zeros(n, v.points());
    rhs.d = C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    for (c, pr) in profiles.iter().enumerate() {
        for iz in 0..v.points() {
            rhs.f[c][iz] = pr.eval(v.node(iz))[0];
        }
    }
    rhs
}

/// Resolvent-estimate ratios on a set of sector points at two vertical resolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventSweep {
    pub lambdas: Vec<C>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
}

impl ResolventSweep {
    /// Largest `max(r_f / r_c, r_c / r_f)` over the sweep.
    pub fn worst_change(&self) -> f64 {
        self.coarse.iter().zip(&self.fine).map(|(a, b)| (a / b).max(b / a)).fold(1.0, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.coarse.iter().chain(&self.fine).fold(0.0, |m, &x| m.max(x))
    }
}

/// Ratio of `|lambda| low + high` to the data norm for `(d, f)` data, over `count` points
/// of the shifted sector, at `m_z` and `2 m_z - 1` nodes.
pub fn resolvent_sweep(
    k: f64,
    params: StokesParams,
    sector: ResolventSector,
    count: usize,
    depth: f64,
    m_z: usize,
    seed: u64,
) -> Result<ResolventSweep> {
    let lambdas: Vec<C> = sector.sample(count, 0.1, 1e3).into_iter().map(|l| l + sector.gamma).collect();
    let run = |m: usize| -> Result<Vec<f64>> {
        let v = VerticalGrid::new(depth, m)?;
        let op = ModeOperator::new([k, 0.0, 0.0], 2, &v, params);
        let rhs = smooth_data(3, &v, seed);
        lambdas.iter().map(|&l| resolvent_ratio(&op, l, &rhs)).collect()
    };
    Ok(ResolventSweep { coarse: run(m_z)?, fine: run(2 * m_z - 1)?, lambdas })
}

/// Largest relative difference between the two eliminations over random modes and data.
pub fn elimination_agreement(params: StokesParams, depth: f64, m_z: usize, modes: usize, seed: u64) -> Result<Vec<f64>> {
    let mut r = rng(seed);
    let v = VerticalGrid::new(depth, m_z)?;
    (0..modes)
        .map(|i| {
            let xi = [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0), 0.0];
            let lambda = C::new(r.gen_range(0.1..5.0), r.gen_range(-5.0..5.0));
            let op = ModeOperator::new(xi, 2, &v, params);
            let rhs = ManufacturedMode::random(3, depth, seed ^ (i as u64 + 1)).data(&op, lambda);
            let a = solve_resolvent_mode(&op, lambda, &rhs)?;
            let b = solve_reduced_mode(&op, lambda, &rhs)?;
            let vals = |c: &SpectralColumn| -> Vec<C> {
                let mut out = vec![c.eta];
                out.extend(c.u.iter().flatten().copied());
                out.extend(c.p.iter().copied());
                out
            };
            let (va, vb) = (vals(&a), vals(&b));
            let scale = va.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let diff = va.iter().zip(&vb).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
            Ok(diff / scale)
        })
        .collect()
}
