//! Linear Stokes problem with a free surface, solved one horizontal mode at a time.
//!
//! For `xi' != 0` the tangential velocity is split into the component along `xi'/|xi'|`
//! and the part orthogonal to it. The first, together with `eta`, `u_N` and the pressure,
//! forms a two-dimensional (meridional) system; the orthogonal part solves a scalar heat
//! problem. Vertical derivatives use second-order finite differences with one ghost node
//! for `u_N` above `x_N = 0`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::analysis::NormSeries;
use crate::error::{Error, Result};
use crate::nonlinear::RhsBundle;
use crate::spectral::{forward_bulk, forward_height, HorizontalGrid, SpectralBulk, SpectralHeight, VerticalGrid};
use crate::Complex64 as C;

type CMat = DMatrix<C>;
type CVec = DVector<C>;
type Lu = LU<C, Dyn, Dyn>;

const ZERO: C = C::new(0.0, 0.0);
const IM: C = C::new(0.0, 1.0);

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// Physical constants of the linear problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesParams {
    pub mu: f64,
    pub c_g: f64,
    pub c_sigma: f64,
}

/// How the pressure is handled in a mode solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elimination {
    /// Velocity, height and pressure solved together.
    Monolithic,
    /// Pressure replaced by the functional `K(eta, u)` plus a data term.
    Reduced,
}

/// Shifted sector `{ |arg(lambda - gamma)| < pi - omega }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventSector {
    pub omega: f64,
    pub gamma: f64,
}

impl ResolventSector {
    pub fn new(omega: f64, gamma: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 0.5 * PI) || gamma.is_nan() || gamma < 0.0 {
            return Err(Error::HypothesisViolation(format!(
                "sector needs omega in (0, pi/2) and gamma >= 0, got ({omega}, {gamma})"
            )));
        }
        Ok(Self { omega, gamma })
    }

    pub fn contains(&self, lambda: C) -> bool {
        let z = lambda - re(self.gamma);
        z.norm() > 0.0 && z.arg().abs() < PI - self.omega
    }

    /// `count` points spread over rays inside the sector with log-spaced moduli in `[r_min, r_max]`.
    pub fn sample(&self, count: usize, r_min: f64, r_max: f64) -> Vec<C> {
        let rays = [0.0, 0.5, -0.5, 0.9, -0.9];
        let per_ray = count.div_ceil(rays.len()).max(1);
        let mut out = Vec::with_capacity(count);
        'outer: for i in 0..per_ray {
            let s = if per_ray == 1 { 0.0 } else { i as f64 / (per_ray - 1) as f64 };
            let r = r_min * (r_max / r_min).powf(s);
            for &f in &rays {
                if out.len() == count {
                    break 'outer;
                }
                let ang = f * (PI - self.omega);
                out.push(re(self.gamma) + C::from_polar(r, ang));
            }
        }
        out
    }
}

/// Data for one horizontal mode. Components are indexed `0..N`, each a depth profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeRhs {
    pub d: C,
    pub f: Vec<Vec<C>>,
    /// Vector potential of the divergence data: `div u = div g_tilde`.
    pub g_tilde: Vec<Vec<C>>,
    pub h: Vec<C>,
}

impl ModeRhs {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { d: ZERO, f: vec![vec![ZERO; m]; n], g_tilde: vec![vec![ZERO; m]; n], h: vec![ZERO; n] }
    }
}

/// Solution profiles of one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralColumn {
    pub xi: [f64; 3],
    pub eta: C,
    pub u: Vec<Vec<C>>,
    pub p: Vec<C>,
    /// `u_N` at the ghost node above the surface.
    pub ghost: C,
}

/// Index layout of the meridional unknowns `(eta, u_par, u_N + ghost, p)`.
/// Row `r` of the assembled system is the equation "owned" by unknown `r`.
#[derive(Clone, Copy)]
struct Layout {
    m: usize,
}

impl Layout {
    fn ut(&self, i: usize) -> usize {
        1 + i
    }
    fn un(&self, i: usize) -> usize {
        1 + self.m + i
    }
    fn nx(&self) -> usize {
        2 * self.m + 2
    }
    fn p(&self, i: usize) -> usize {
        self.nx() + i
    }
    fn total(&self) -> usize {
        3 * self.m + 2
    }
}

/// Operator of one horizontal mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    pub xi: [f64; 3],
    pub dim_h: usize,
    pub k: f64,
    pub v: VerticalGrid,
    pub params: StokesParams,
}

/// Meridional data derived from a [`ModeRhs`].
struct Split {
    d: C,
    fpar: Vec<C>,
    fnn: Vec<C>,
    g: Vec<C>,
    hpar: C,
    hn: C,
    fperp: Vec<Vec<C>>,
    hperp: Vec<C>,
}

impl ModeOperator {
    pub fn new(xi: [f64; 3], dim_h: usize, v: &VerticalGrid, params: StokesParams) -> Self {
        let k = xi.iter().take(dim_h).map(|x| x * x).sum::<f64>().sqrt();
        Self { xi, dim_h, k, v: v.clone(), params }
    }

    /// Mode with `|xi'| = k` in the two-dimensional setting.
    pub fn radial(k: f64, v: &VerticalGrid, params: StokesParams) -> Self {
        Self::new([k, 0.0, 0.0], 1, v, params)
    }

    pub fn n(&self) -> usize {
        self.dim_h + 1
    }

    fn m(&self) -> usize {
        self.v.points()
    }

    fn layout(&self) -> Layout {
        Layout { m: self.m() }
    }

    fn unit(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        if self.k > 0.0 {
            for (a, ea) in e.iter_mut().enumerate().take(self.dim_h) {
                *ea = self.xi[a] / self.k;
            }
        }
        e
    }

    /// Symbol of `c_g - c_sigma Delta'`.
    pub fn surface_coeff(&self) -> f64 {
        self.params.c_g + self.params.c_sigma * self.k * self.k
    }

    /// Size of the monolithic meridional system.
    pub fn system_size(&self) -> usize {
        self.layout().total()
    }

    /// Monolithic meridional matrix at the resolvent parameter `lambda`.
    pub fn meridional_matrix(&self, lambda: C) -> CMat {
        let l = self.layout();
        let m = l.m;
        let k = self.k;
        let mu = self.params.mu;
        let h = self.v.spacing();
        let mut a = CMat::zeros(l.total(), l.total());
        a[(0, 0)] = lambda;
        a[(0, l.un(m - 1))] = re(-1.0);
        a[(l.ut(0), l.ut(0))] = lambda;
        for i in 1..m - 1 {
            let r = l.ut(i);
            a[(r, l.ut(i))] += lambda + re(mu * k * k);
            for (j, w) in self.v.d2(i).taps() {
                a[(r, l.ut(j))] -= re(mu * w);
            }
            a[(r, l.p(i))] += IM * k;
        }
        let r = l.ut(m - 1);
        for (j, w) in self.v.d1(m - 1).taps() {
            a[(r, l.ut(j))] += re(mu * w);
        }
        a[(r, l.un(m - 1))] += IM * (mu * k);
        a[(l.un(0), l.un(0))] = lambda;
        let c2 = 1.0 / (h * h);
        for i in 1..m {
            let r = l.un(i);
            a[(r, l.un(i))] += lambda + re(mu * k * k + 2.0 * mu * c2);
            a[(r, l.un(i - 1))] -= re(mu * c2);
            a[(r, l.un(i + 1))] -= re(mu * c2);
            for (j, w) in self.v.d1(i).taps() {
                a[(r, l.p(j))] += re(w);
            }
        }
        let r = l.un(m);
        a[(r, l.un(m))] += re(mu / h);
        a[(r, l.un(m - 2))] -= re(mu / h);
        a[(r, l.p(m - 1))] -= re(1.0);
        a[(r, 0)] += re(self.surface_coeff());
        for i in 0..m {
            let r = l.p(i);
            a[(r, l.ut(i))] += IM * k;
            for (j, w) in self.v.d1(i).taps() {
                a[(r, l.un(j))] += re(w);
            }
        }
        a
    }

    /// Scalar problem for velocity components orthogonal to `xi'`.
    fn heat_matrix(&self, lambda: C) -> CMat {
        let m = self.m();
        let mu = self.params.mu;
        let k = self.k;
        let mut a = CMat::zeros(m, m);
        a[(0, 0)] = lambda;
        for i in 1..m - 1 {
            a[(i, i)] += lambda + re(mu * k * k);
            for (j, w) in self.v.d2(i).taps() {
                a[(i, j)] -= re(mu * w);
            }
        }
        for (j, w) in self.v.d1(m - 1).taps() {
            a[(m - 1, j)] += re(mu * w);
        }
        a
    }

    fn check_rhs(&self, rhs: &ModeRhs) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        let ok = rhs.f.len() == n
            && rhs.g_tilde.len() == n
            && rhs.h.len() == n
            && rhs.f.iter().chain(&rhs.g_tilde).all(|c| c.len() == m);
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch("mode data has the wrong shape"))
        }
    }

    /// Discrete divergence `i xi' . g' + D1 g_N` of a mode profile.
    pub fn divergence(&self, comps: &[Vec<C>]) -> Vec<C> {
        let n = self.n();
        let m = self.m();
        (0..m)
            .map(|i| {
                let mut s = self.v.d1(i).apply(&comps[n - 1]);
                for a in 0..self.dim_h {
                    s += IM * self.xi[a] * comps[a][i];
                }
                s
            })
            .collect()
    }

    fn split(&self, rhs: &ModeRhs) -> Split {
        let n = self.n();
        let m = self.m();
        let e = self.unit();
        let proj = |comps: &[Vec<C>]| -> Vec<C> {
            (0..m).map(|i| (0..self.dim_h).map(|a| comps[a][i] * e[a]).sum()).collect()
        };
        let fpar = proj(&rhs.f);
        let hpar: C = (0..self.dim_h).map(|a| rhs.h[a] * e[a]).sum();
        let fperp = (0..self.dim_h)
            .map(|a| (0..m).map(|i| rhs.f[a][i] - fpar[i] * e[a]).collect())
            .collect();
        let hperp = (0..self.dim_h).map(|a| rhs.h[a] - hpar * e[a]).collect();
        Split {
            d: rhs.d,
            fpar,
            fnn: rhs.f[n - 1].clone(),
            g: self.divergence(&rhs.g_tilde),
            hpar,
            hn: rhs.h[n - 1],
            fperp,
            hperp,
        }
    }

    fn meridional_rhs(&self, s: &Split) -> CVec {
        let l = self.layout();
        let m = l.m;
        let mut b = CVec::zeros(l.total());
        b[0] = s.d;
        for i in 1..m - 1 {
            b[l.ut(i)] = s.fpar[i];
        }
        b[l.ut(m - 1)] = s.hpar;
        for i in 1..m {
            b[l.un(i)] = s.fnn[i];
        }
        b[l.un(m)] = s.hn;
        for i in 0..m {
            b[l.p(i)] = s.g[i];
        }
        b
    }

    fn heat_rhs(&self, f: &[C], h: C) -> CVec {
        let m = self.m();
        let mut b = CVec::zeros(m);
        for i in 1..m - 1 {
            b[i] = f[i];
        }
        b[m - 1] = h;
        b
    }

    /// Reassemble the full column from the meridional unknowns and the orthogonal part.
    fn assemble_column(&self, x: &CVec, p: Vec<C>, perp: Vec<Vec<C>>) -> SpectralColumn {
        let l = self.layout();
        let m = l.m;
        let n = self.n();
        let e = self.unit();
        let mut u = vec![vec![ZERO; m]; n];
        for a in 0..self.dim_h {
            for i in 0..m {
                u[a][i] = x[l.ut(i)] * e[a] + perp[a][i];
            }
        }
        for i in 0..m {
            u[n - 1][i] = x[l.un(i)];
        }
        SpectralColumn { xi: self.xi, eta: x[0], u, p, ghost: x[l.un(m)] }
    }

    fn column_to_x(&self, col: &SpectralColumn) -> CVec {
        let l = self.layout();
        let m = l.m;
        let n = self.n();
        let e = self.unit();
        let mut x = CVec::zeros(l.nx());
        x[0] = col.eta;
        for i in 0..m {
            x[l.ut(i)] = (0..self.dim_h).map(|a| col.u[a][i] * e[a]).sum();
            x[l.un(i)] = col.u[n - 1][i];
        }
        x[l.un(m)] = col.ghost;
        x
    }

    /// Pieces of the pressure elimination: `S p = Q x + r(data)`.
    fn pressure_system(&self, a: &CMat, lambda: C) -> (CMat, CMat) {
        let l = self.layout();
        let m = l.m;
        let nx = l.nx();
        let mut s = CMat::zeros(m, m);
        let mut q = CMat::zeros(m, nx);
        for i in 0..m - 1 {
            let r = l.p(i);
            for j in 0..nx {
                let cij = a[(r, j)];
                if cij == ZERO {
                    continue;
                }
                for c in 0..m {
                    s[(i, c)] += cij * a[(j, l.p(c))];
                }
                for c in 0..nx {
                    let mut a0 = a[(j, c)];
                    if c == j {
                        a0 -= lambda;
                    }
                    q[(i, c)] -= cij * a0;
                }
            }
        }
        s[(m - 1, m - 1)] = re(1.0);
        let h = self.v.spacing();
        let mu = self.params.mu;
        q[(m - 1, l.un(m))] = re(mu / h);
        q[(m - 1, l.un(m - 2))] = re(-mu / h);
        q[(m - 1, 0)] = re(self.surface_coeff());
        (s, q)
    }

    fn pressure_data(&self, a: &CMat, b: &CVec, lambda: C) -> CVec {
        let l = self.layout();
        let m = l.m;
        let nx = l.nx();
        let mut r = CVec::zeros(m);
        for i in 0..m - 1 {
            let row = l.p(i);
            let mut acc = -lambda * b[l.p(i)];
            for j in 0..nx {
                acc += a[(row, j)] * b[j];
            }
            r[i] = acc;
        }
        r[m - 1] = -b[l.un(m)];
        r
    }
}

fn lu_solve(lu: &Lu, b: &CVec, what: &str) -> Result<CVec> {
    let x = lu.solve(b).ok_or_else(|| Error::SingularSystem(what.to_string()))?;
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem(what.to_string()))
    }
}

fn factor(a: CMat, what: &str) -> Result<Lu> {
    let lu = a.lu();
    if lu.is_invertible() {
        Ok(lu)
    } else {
        Err(Error::SingularSystem(what.to_string()))
    }
}

/// Factored operator of one mode at a fixed `lambda`.
pub struct ModeFactors {
    pub op: ModeOperator,
    pub lambda: C,
    elimination: Elimination,
    heat: Lu,
    kind: FactorKind,
}

enum FactorKind {
    /// `xi' = 0`: no pressure coupling in the horizontal directions.
    Mean,
    Monolithic {
        full: Lu,
    },
    Reduced {
        /// Unreduced matrix, used for data terms.
        a: CMat,
        red: Lu,
        s: Lu,
        sinv_q: CMat,
        a_xp: CMat,
    },
}

impl ModeFactors {
    pub fn new(op: &ModeOperator, lambda: C, elimination: Elimination) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.norm() == 0.0 {
            return Err(Error::SingularSystem(format!("resolvent parameter {lambda}")));
        }
        let heat = factor(op.heat_matrix(lambda), "scalar mode problem")?;
        let kind = if op.k == 0.0 {
            FactorKind::Mean
        } else {
            let a = op.meridional_matrix(lambda);
            match elimination {
                Elimination::Monolithic => FactorKind::Monolithic { full: factor(a, "monolithic mode system")? },
                Elimination::Reduced => {
                    let l = op.layout();
                    let (m, nx) = (l.m, l.nx());
                    let (s, q) = op.pressure_system(&a, lambda);
                    let s = factor(s, "pressure functional system")?;
                    let sinv_q = s.solve(&q).ok_or_else(|| Error::SingularSystem("pressure functional".into()))?;
                    let a_xp = a.view((0, nx), (nx, m)).into_owned();
                    let mut red = a.view((0, 0), (nx, nx)).into_owned() + &a_xp * &sinv_q;
                    let top = l.un(m);
                    for c in 0..nx {
                        red[(top, c)] = a[(l.p(m - 1), c)];
                    }
                    let red = factor(red, "reduced mode system")?;
                    FactorKind::Reduced { a, red, s, sinv_q, a_xp }
                }
            }
        };
        Ok(Self { op: op.clone(), lambda, elimination, heat, kind })
    }

    pub fn elimination(&self) -> Elimination {
        self.elimination
    }

    fn perp(&self, op: &ModeOperator, s: &Split) -> Result<Vec<Vec<C>>> {
        s.fperp
            .iter()
            .zip(&s.hperp)
            .map(|(f, &h)| Ok(lu_solve(&self.heat, &op.heat_rhs(f, h), "scalar mode problem")?.iter().copied().collect()))
            .collect()
    }

    pub fn solve(&self, rhs: &ModeRhs) -> Result<SpectralColumn> {
        self.solve_with(&self.op, rhs)
    }

    /// Solve for another mode with the same `|xi'|` and vertical grid.
    pub fn solve_with(&self, op: &ModeOperator, rhs: &ModeRhs) -> Result<SpectralColumn> {
        if op.k.to_bits() != self.op.k.to_bits() || op.v != self.op.v || op.params != self.op.params {
            return Err(Error::GridMismatch("factors belong to a different mode"));
        }
        op.check_rhs(rhs)?;
        match &self.kind {
            FactorKind::Mean => self.solve_mean(op, rhs),
            FactorKind::Monolithic { full } => {
                let s = op.split(rhs);
                let z = lu_solve(full, &op.meridional_rhs(&s), "monolithic mode system")?;
                let l = op.layout();
                let p = (0..l.m).map(|i| z[l.p(i)]).collect();
                let x = z.rows(0, l.nx()).into_owned();
                Ok(op.assemble_column(&x, p, self.perp(op, &s)?))
            }
            FactorKind::Reduced { a, .. } => {
                let s = op.split(rhs);
                let l = op.layout();
                let b = op.meridional_rhs(&s);
                // One round of refinement against the unreduced residual.
                let z0 = self.reduced_core(op, &b)?;
                let z = &z0 + self.reduced_core(op, &(&b - a * &z0))?;
                let p = (0..l.m).map(|i| z[l.p(i)]).collect();
                let x = z.rows(0, l.nx()).into_owned();
                Ok(op.assemble_column(&x, p, self.perp(op, &s)?))
            }
        }
    }

    /// Reduced solve of the meridional system `a z = b`; returns `z = (x, p)`.
    fn reduced_core(&self, op: &ModeOperator, b: &CVec) -> Result<CVec> {
        let FactorKind::Reduced { a, red, s: slu, sinv_q, a_xp } = &self.kind else {
            return Err(Error::SingularSystem("reduced factors missing".into()));
        };
        let l = op.layout();
        let (m, nx) = (l.m, l.nx());
        let rd = op.pressure_data(a, b, self.lambda);
        let y = lu_solve(slu, &rd, "pressure functional system")?;
        let mut br = b.rows(0, nx).into_owned() - a_xp * &y;
        br[l.un(m)] = b[l.p(m - 1)];
        let x = lu_solve(red, &br, "reduced mode system")?;
        let p = sinv_q * &x + y;
        let mut z = CVec::zeros(l.total());
        z.rows_mut(0, nx).copy_from(&x);
        z.rows_mut(nx, m).copy_from(&p);
        Ok(z)
    }

    /// `xi' = 0`: the divergence fixes `u_N`, the tangential part is a heat problem and the
    /// pressure follows by integrating the vertical momentum balance down from the surface.
    fn solve_mean(&self, op: &ModeOperator, rhs: &ModeRhs) -> Result<SpectralColumn> {
        let n = op.n();
        let m = op.m();
        let mu = op.params.mu;
        let h = op.v.spacing();
        let lambda = self.lambda;
        let mut u = vec![vec![ZERO; m]; n];
        for a in 0..n - 1 {
            let w = lu_solve(&self.heat, &op.heat_rhs(&rhs.f[a], rhs.h[a]), "scalar mode problem")?;
            u[a] = w.iter().copied().collect();
        }
        let base = rhs.g_tilde[n - 1][0];
        u[n - 1] = rhs.g_tilde[n - 1].iter().map(|&g| g - base).collect();
        let un = &u[n - 1];
        let ghost = re(3.0) * un[m - 1] - re(3.0) * un[m - 2] + un[m - 3];
        let eta = (rhs.d + un[m - 1]) / lambda;
        let mut ext = un.clone();
        ext.push(ghost);
        let d2 = |i: usize| (ext[i + 1] - re(2.0) * ext[i] + ext[i - 1]) / (h * h);
        let resid = |i: usize| rhs.f[n - 1][i] - lambda * ext[i] + re(mu) * d2(i);
        let mut p = vec![ZERO; m];
        p[m - 1] = re(mu / h) * (ghost - un[m - 2]) + re(op.params.c_g) * eta - rhs.h[n - 1];
        for i in (0..m - 1).rev() {
            let r_hi = resid(i + 1);
            let r_lo = if i == 0 { r_hi } else { resid(i) };
            p[i] = p[i + 1] - re(0.5 * h) * (r_lo + r_hi);
        }
        Ok(SpectralColumn { xi: op.xi, eta, u, p, ghost })
    }
}

/// Monolithic solve of the resolvent problem for one mode.
pub fn solve_resolvent_mode(op: &ModeOperator, lambda: C, rhs: &ModeRhs) -> Result<SpectralColumn> {
    ModeFactors::new(op, lambda, Elimination::Monolithic)?.solve(rhs)
}

/// Same problem with the pressure eliminated through [`pressure_functional_k`].
pub fn solve_reduced_mode(op: &ModeOperator, lambda: C, rhs: &ModeRhs) -> Result<SpectralColumn> {
    ModeFactors::new(op, lambda, Elimination::Reduced)?.solve(rhs)
}

/// Discrete `K(eta, u)` for one mode: the weak Neumann problem with the divergence of
/// `mu Delta u` as data in the bulk and the normal-stress trace as Dirichlet value on top.
pub fn pressure_functional_k(op: &ModeOperator, col: &SpectralColumn) -> Result<Vec<C>> {
    if op.k == 0.0 {
        return Err(Error::SingularSystem("pressure functional at xi' = 0".into()));
    }
    let lambda = re(1.0);
    let a = op.meridional_matrix(lambda);
    let (s, q) = op.pressure_system(&a, lambda);
    let s = factor(s, "pressure functional system")?;
    let qx = q * op.column_to_x(col);
    Ok(lu_solve(&s, &qx, "pressure functional system")?.iter().copied().collect())
}

fn column_l2(v: &VerticalGrid, f: &[C]) -> f64 {
    f.iter().enumerate().map(|(i, z)| v.trapezoid_weight(i) * z.norm_sqr()).sum::<f64>().sqrt()
}

/// Mode-level norms used by the resolvent estimate: returns `(low, high)` where
/// `low = |eta| (1+k^2)^{3/4} + |u|_{L2}` and `high = |eta| (1+k^2)^{5/4} + |u|_{H2}`.
pub fn mode_norms(op: &ModeOperator, col: &SpectralColumn) -> (f64, f64) {
    let v = &op.v;
    let w = 1.0 + op.k * op.k;
    let mut l2 = 0.0;
    let mut h2 = 0.0;
    for c in &col.u {
        let d1 = v.derivative(c, 1);
        let d2 = v.derivative(c, 2);
        let a = column_l2(v, c);
        let b = column_l2(v, &d1);
        let cc = column_l2(v, &d2);
        l2 += a * a;
        h2 += w * w * a * a + 2.0 * w * b * b + cc * cc;
    }
    let e = col.eta.norm();
    (e * w.powf(0.75) + l2.sqrt(), e * w.powf(1.25) + h2.sqrt())
}

/// `(|lambda| low + high) / (|d| (1+k^2)^{3/4} + |f|_{L2})` for one solve.
pub fn resolvent_ratio(op: &ModeOperator, lambda: C, rhs: &ModeRhs) -> Result<f64> {
    let col = solve_resolvent_mode(op, lambda, rhs)?;
    let (low, high) = mode_norms(op, &col);
    let w = 1.0 + op.k * op.k;
    let fl2: f64 = rhs.f.iter().map(|c| column_l2(&op.v, c).powi(2)).sum::<f64>().sqrt();
    let data = rhs.d.norm() * w.powf(0.75) + fl2;
    Ok((lambda.norm() * low + high) / data)
}

/// Time integrator for [`LinearStepper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    ImplicitEuler,
    CrankNicolson,
}

/// Spectral `(eta, u, p)` on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearState {
    pub eta: SpectralHeight,
    pub u: SpectralBulk,
    pub p: SpectralBulk,
}

impl LinearState {
    pub fn zeros(h: &HorizontalGrid, v: &VerticalGrid) -> Self {
        Self {
            eta: SpectralHeight { grid: h.clone(), coeffs: vec![ZERO; h.len()] },
            u: SpectralBulk::zeros(h, v, h.dim()),
            p: SpectralBulk::zeros(h, v, 1),
        }
    }
}

/// Spectral forcing of the linear system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRhs {
    pub d: SpectralHeight,
    pub f: SpectralBulk,
    pub g_tilde: SpectralBulk,
    pub h: Vec<SpectralHeight>,
}

impl SpectralRhs {
    pub fn zeros(h: &HorizontalGrid, v: &VerticalGrid) -> Self {
        let n = h.dim();
        let sh = SpectralHeight { grid: h.clone(), coeffs: vec![ZERO; h.len()] };
        Self {
            d: sh.clone(),
            f: SpectralBulk::zeros(h, v, n),
            g_tilde: SpectralBulk::zeros(h, v, n),
            h: vec![sh; n],
        }
    }

    pub fn from_bundle(b: &RhsBundle) -> Result<Self> {
        Ok(Self {
            d: forward_height(&b.d)?,
            f: forward_bulk(&b.f)?,
            g_tilde: forward_bulk(&b.g_tilde)?,
            h: b.h.iter().map(forward_height).collect::<Result<_>>()?,
        })
    }

    /// Average of two forcings, coefficient by coefficient.
    pub fn midpoint(&self, other: &SpectralRhs) -> SpectralRhs {
        fn avg(a: &mut [C], b: &[C]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = (*x + *y) * 0.5;
            }
        }
        let mut out = self.clone();
        avg(&mut out.d.coeffs, &other.d.coeffs);
        avg(&mut out.f.coeffs, &other.f.coeffs);
        avg(&mut out.g_tilde.coeffs, &other.g_tilde.coeffs);
        for (a, b) in out.h.iter_mut().zip(&other.h) {
            avg(&mut a.coeffs, &b.coeffs);
        }
        out
    }

    /// Mode data with `(shift * eta_prev, shift * u_prev)` added to `(d, f)`.
    fn mode(&self, mode: usize, prev: &LinearState, shift: f64) -> ModeRhs {
        let n = self.f.ncomp;
        ModeRhs {
            d: self.d.coeffs[mode] + prev.eta.coeffs[mode] * shift,
            f: (0..n)
                .map(|c| {
                    self.f.column(c, mode).iter().zip(prev.u.column(c, mode)).map(|(a, b)| a + b * shift).collect()
                })
                .collect(),
            g_tilde: (0..n).map(|c| self.g_tilde.column(c, mode).to_vec()).collect(),
            h: self.h.iter().map(|s| s.coeffs[mode]).collect(),
        }
    }
}

/// One implicit step of the linear system on every mode of a torus grid, with factors
/// cached per distinct `|xi'|`.
pub struct LinearStepper {
    pub h: HorizontalGrid,
    pub v: VerticalGrid,
    pub params: StokesParams,
    pub dt: f64,
    pub gamma: f64,
    pub integrator: Integrator,
    factors: HashMap<u64, Arc<ModeFactors>>,
}

fn factor_key(k: f64) -> u64 {
    k.to_bits()
}

impl LinearStepper {
    pub fn new(
        h: &HorizontalGrid,
        v: &VerticalGrid,
        params: StokesParams,
        dt: f64,
        gamma: f64,
        integrator: Integrator,
        elimination: Elimination,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) || gamma.is_nan() || gamma < 0.0 {
            return Err(Error::HypothesisViolation(format!("need dt > 0 and gamma >= 0, got ({dt}, {gamma})")));
        }
        let lambda = re(Self::shift_for(dt, integrator) + gamma);
        let mut reps: Vec<(u64, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for mode in 0..h.len() {
            if h.is_nyquist(mode) {
                continue;
            }
            let key = factor_key(h.wavenumber(mode));
            if seen.insert(key) {
                reps.push((key, mode));
            }
        }
        let built: Vec<(u64, Arc<ModeFactors>)> = reps
            .par_iter()
            .map(|&(key, mode)| {
                let op = ModeOperator::new(h.wavevector(mode), h.dim_h(), v, params);
                ModeFactors::new(&op, lambda, elimination).map(|f| (key, Arc::new(f)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { h: h.clone(), v: v.clone(), params, dt, gamma, integrator, factors: built.into_iter().collect() })
    }

    fn shift_for(dt: f64, integrator: Integrator) -> f64 {
        match integrator {
            Integrator::ImplicitEuler => 1.0 / dt,
            Integrator::CrankNicolson => 2.0 / dt,
        }
    }

    /// Advance one step. For Crank-Nicolson the forcing is read at the midpoint and the
    /// returned pressure is the midpoint pressure.
    /// One step. The spectral data must come from real fields.
    pub fn step(&self, state: &LinearState, forcing: &SpectralRhs) -> Result<LinearState> {
        let shift = Self::shift_for(self.dt, self.integrator);
        let h = &self.h;
        let n = h.dim();
        let nz = self.v.points();
        // Data of real fields is Hermitian, so each pair (xi', -xi') needs one solve.
        let mirror = |mode: usize| {
            let k = h.wave_index(mode);
            h.mode([-k[0], -k[1], -k[2]])
        };
        let cols: Vec<Option<SpectralColumn>> = (0..h.len())
            .into_par_iter()
            .map(|mode| {
                if h.is_nyquist(mode) || mirror(mode) < mode {
                    return Ok(None);
                }
                let base = &self.factors[&factor_key(h.wavenumber(mode))];
                let op = ModeOperator::new(h.wavevector(mode), h.dim_h(), &self.v, self.params);
                let rhs = forcing.mode(mode, state, shift);
                // Factors depend on |xi'| only; the direction enters through the split.
                base.solve_with(&op, &rhs).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut out = LinearState::zeros(h, &self.v);
        for (mode, col) in cols.iter().enumerate() {
            let Some(col) = col else { continue };
            let twin = mirror(mode);
            for (target, conj) in [(mode, false), (twin, true)] {
                let f = |z: C| if conj { z.conj() } else { z };
                out.eta.coeffs[target] = f(col.eta);
                for c in 0..n {
                    for (o, z) in out.u.column_mut(c, target).iter_mut().zip(&col.u[c]) {
                        *o = f(*z);
                    }
                }
                for (o, z) in out.p.column_mut(0, target).iter_mut().zip(&col.p[..nz]) {
                    *o = f(*z);
                }
            }
        }
        if self.integrator == Integrator::CrankNicolson {
            for (o, s) in out.eta.coeffs.iter_mut().zip(&state.eta.coeffs) {
                *o = re(2.0) * *o - s;
            }
            for (o, s) in out.u.coeffs.iter_mut().zip(&state.u.coeffs) {
                *o = re(2.0) * *o - s;
            }
        }
        Ok(out)
    }

    /// Homogeneous evolution up to `t_final`, recording `|eta|_{L2}` and `|u|_{L2}` after each step.
    pub fn evolve_semigroup(&self, initial: &LinearState, t_final: f64) -> Result<(LinearState, NormSeries)> {
        let zero = SpectralRhs::zeros(&self.h, &self.v);
        let mut series = NormSeries::new(&["eta_l2", "u_l2"]);
        let mut state = initial.clone();
        let mut t = 0.0;
        series.push(t, vec![spectral_l2_height(&state.eta), spectral_l2_bulk(&state.u)]);
        let steps = (t_final / self.dt).round() as usize;
        for _ in 0..steps {
            state = self.step(&state, &zero)?;
            t += self.dt;
            series.push(t, vec![spectral_l2_height(&state.eta), spectral_l2_bulk(&state.u)]);
        }
        Ok((state, series))
    }
}

/// `L2` norm of a height field from its unnormalised coefficients (Parseval).
pub fn spectral_l2_height(s: &SpectralHeight) -> f64 {
    let len = s.grid.len() as f64;
    (s.grid.cell_area() / len * s.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `L2` norm over torus x depth of a spectral bulk field (Parseval horizontally).
pub fn spectral_l2_bulk(s: &SpectralBulk) -> f64 {
    let len = s.h.len() as f64;
    let nz = s.v.points();
    let mut acc = 0.0;
    for col in s.coeffs.chunks(nz) {
        for (i, z) in col.iter().enumerate() {
            acc += s.v.trapezoid_weight(i) * z.norm_sqr();
        }
    }
    (s.h.cell_area() / len * acc).sqrt()
}
