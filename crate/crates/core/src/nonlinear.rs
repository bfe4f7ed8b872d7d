//! Right-hand sides of the flattened system.

use crate::error::{Error, Result};
use crate::geometry::{djk_from_derivs, flat_gradient, strain_from_gradient, vertical_derivs, TransformState};
use crate::spectral::{laplacian, BulkField, HeightField};

/// Sign in front of `mu * sum_j D_jj(eta) u` inside `F_tilde`.
///
/// Composing the chain rule gives `D_j D_k = d_j d_k - J^{-3} D_jk(eta)`, so the viscous
/// correction enters `F_tilde` with a minus sign; the `consistency-check` experiment tests it.
pub const VISCOUS_CORRECTION_SIGN: f64 = -1.0;

/// Physical constants entering the nonlinear terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub mu: f64,
    /// Coefficient in front of `H_kappa`; equal to `c_sigma` unless overridden.
    pub sigma: f64,
}

/// All nonlinear right-hand sides evaluated at one state.
#[derive(Clone, Debug)]
pub struct RhsBundle {
    pub d: HeightField,
    pub f: BulkField,
    pub g: BulkField,
    pub g_tilde: BulkField,
    /// Boundary vector, one height field per component.
    pub h: Vec<HeightField>,
}

fn check(u: &BulkField, ts: &TransformState) -> Result<()> {
    if u.h != ts.eta_ext.h || u.v != ts.eta_ext.v {
        return Err(Error::GridMismatch("velocity and transform grids differ"));
    }
    if u.ncomp != ts.n {
        return Err(Error::GridMismatch("velocity must have N components"));
    }
    Ok(())
}

/// `-sum_{j<N} u_j d_j E_N eta` at `x_N = 0`.
pub fn term_d(u: &BulkField, ts: &TransformState) -> Result<HeightField> {
    check(u, ts)?;
    let n = ts.n;
    let top = u.nz() - 1;
    let values = (0..u.nh())
        .map(|ih| -(0..n - 1).map(|j| u.get(j, ih, top) * ts.grad(j, ih, top)).sum::<f64>())
        .collect();
    Ok(HeightField { grid: u.h.clone(), values })
}

/// `(G, G_tilde)` with `G = -(d_N E) div u + grad E . d_N u` and
/// `G_tilde = -(d_N E) u + J(eta)^T u`.
pub fn term_g(u: &BulkField, ts: &TransformState) -> Result<(BulkField, BulkField)> {
    check(u, ts)?;
    let grad = flat_gradient(u)?;
    Ok(g_from_gradient(u, &grad, ts))
}

fn g_from_gradient(u: &BulkField, grad: &BulkField, ts: &TransformState) -> (BulkField, BulkField) {
    let n = ts.n;
    let (nh, nz) = (u.nh(), u.nz());
    let mut g = BulkField::zeros(&u.h, &u.v, 1);
    let mut gt = BulkField::zeros(&u.h, &u.v, n);
    for ih in 0..nh {
        for iz in 0..nz {
            let en = ts.grad(n - 1, ih, iz);
            let div: f64 = (0..n).map(|j| grad.get(j * n + j, ih, iz)).sum();
            let conv: f64 = (0..n).map(|j| ts.grad(j, ih, iz) * grad.get(j * n + n - 1, ih, iz)).sum();
            let i0 = g.idx(0, ih, iz);
            g.values[i0] = -en * div + conv;
            let jt: f64 = (0..n).map(|j| ts.grad(j, ih, iz) * u.get(j, ih, iz)).sum();
            for c in 0..n {
                let idx = gt.idx(c, ih, iz);
                gt.values[idx] = -en * u.get(c, ih, iz) + if c == n - 1 { jt } else { 0.0 };
            }
        }
    }
    (g, gt)
}

/// Bulk forcing `F(eta, u)`; `dt_u` is supplied by the caller.
pub fn term_f(u: &BulkField, dt_u: &BulkField, ts: &TransformState, mu: f64) -> Result<BulkField> {
    check(u, ts)?;
    check(dt_u, ts)?;
    let grad = flat_gradient(u)?;
    f_from_parts(u, dt_u, &grad, ts, mu)
}

fn f_from_parts(
    u: &BulkField,
    dt_u: &BulkField,
    grad: &BulkField,
    ts: &TransformState,
    mu: f64,
) -> Result<BulkField> {
    let n = ts.n;
    let lap = laplacian(u)?;
    let vd = vertical_derivs(u, n)?;
    let mut djj = BulkField::zeros(&u.h, &u.v, n);
    for j in 0..n {
        let d = djk_from_derivs(&vd, n, ts, j, j);
        for (o, v) in djj.values.iter_mut().zip(&d.values) {
            *o += v;
        }
    }
    let (nh, nz) = (u.nh(), u.nz());
    let mut out = BulkField::zeros(&u.h, &u.v, n);
    let mut ft = [0.0f64; 4];
    for ih in 0..nh {
        for iz in 0..nz {
            let a = ts.jacobian.get(0, ih, iz);
            let et = ts.dt_eta_ext.get(0, ih, iz);
            let ue: f64 = (0..n).map(|j| u.get(j, ih, iz) * ts.grad(j, ih, iz)).sum();
            for (i, fi) in ft.iter_mut().enumerate().take(n) {
                let dn = grad.get(i * n + n - 1, ih, iz);
                let conv: f64 = (0..n).map(|j| u.get(j, ih, iz) * grad.get(i * n + j, ih, iz)).sum();
                *fi = a * a * et * dn - a * a * a * conv
                    + a * a * ue * dn
                    + VISCOUS_CORRECTION_SIGN * mu * djj.get(i, ih, iz);
            }
            let lin_n = dt_u.get(n - 1, ih, iz) - mu * lap.get(n - 1, ih, iz);
            let inv = 1.0 / (a * a * a);
            for i in 0..n {
                let ei = ts.grad(i, ih, iz);
                let val = inv * (ft[i] + ei * ft[n - 1]) - ei * lin_n;
                let idx = out.idx(i, ih, iz);
                out.values[idx] = val;
            }
        }
    }
    Ok(out)
}

/// `H_kappa(eta)` at `x_N = 0`; cubic in the amplitude of `eta`.
pub fn term_h_kappa(ts: &TransformState) -> HeightField {
    let n = ts.n;
    let top = ts.eta_ext.nz() - 1;
    let values = (0..ts.eta_ext.nh())
        .map(|ih| {
            let g2: f64 = (0..n - 1).map(|j| ts.grad(j, ih, top).powi(2)).sum();
            let lap: f64 = (0..n - 1).map(|j| ts.hess(j, j, ih, top)).sum();
            let s = (1.0 + g2).sqrt();
            let mut quad = 0.0;
            for j in 0..n - 1 {
                for k in 0..n - 1 {
                    quad += ts.grad(j, ih, top) * ts.grad(k, ih, top) * ts.hess(j, k, ih, top);
                }
            }
            g2 * lap / ((1.0 + s) * s) + quad / (s * s * s)
        })
        .collect();
    HeightField { grid: ts.eta_ext.h.clone(), values }
}

/// Mean curvature `Delta' eta - H_kappa(eta)` of the surface.
pub fn mean_curvature(ts: &TransformState) -> HeightField {
    let n = ts.n;
    let top = ts.eta_ext.nz() - 1;
    let hk = term_h_kappa(ts);
    let values = (0..ts.eta_ext.nh())
        .map(|ih| (0..n - 1).map(|j| ts.hess(j, j, ih, top)).sum::<f64>() - hk.values[ih])
        .collect();
    HeightField { grid: hk.grid, values }
}

/// Boundary forcing `H = H_tilde - sigma H_kappa e_N` at `x_N = 0`.
pub fn term_h(u: &BulkField, ts: &TransformState, coef: Coefficients) -> Result<Vec<HeightField>> {
    check(u, ts)?;
    let grad = flat_gradient(u)?;
    Ok(h_from_gradient(&grad, ts, coef))
}

fn h_from_gradient(grad: &BulkField, ts: &TransformState, coef: Coefficients) -> Vec<HeightField> {
    let n = ts.n;
    let top = grad.nz() - 1;
    let (dx, e) = strain_from_gradient(grad, ts);
    let hk = term_h_kappa(ts);
    let mut out: Vec<HeightField> = (0..n).map(|_| HeightField::zeros(&grad.h)).collect();
    let mu = coef.mu;
    for ih in 0..grad.nh() {
        let nv = ts.normal(ih, top);
        let nh_ = ts.normal_hat(ih, top);
        let km = ts.k_matrix(ih, top);
        let mut de_n = [0.0; 4];
        for i in 0..n {
            de_n[i] = (0..n)
                .map(|k| (dx.get(i * n + k, ih, top) - e.get(i * n + k, ih, top)) * nv[k])
                .sum();
        }
        for i in 0..n {
            let d_nhat: f64 = (0..n).map(|k| dx.get(i * n + k, ih, top) * nh_[k]).sum();
            let e_n: f64 = (0..n).map(|k| e.get(i * n + k, ih, top) * nv[k]).sum();
            let k_de: f64 = (0..n).map(|k| km[i][k] * de_n[k]).sum();
            let mut val = -mu * d_nhat + mu * e_n - mu * k_de;
            if i == n - 1 {
                val -= coef.sigma * hk.values[ih];
            }
            out[i].values[ih] = val;
        }
    }
    out
}

/// Evaluate every nonlinear term at `(eta, u)` with caller-supplied `d_t u`.
pub fn rhs_bundle(
    u: &BulkField,
    dt_u: &BulkField,
    ts: &TransformState,
    coef: Coefficients,
) -> Result<RhsBundle> {
    check(u, ts)?;
    check(dt_u, ts)?;
    let grad = flat_gradient(u)?;
    let d = term_d(u, ts)?;
    let (g, g_tilde) = g_from_gradient(u, &grad, ts);
    let f = f_from_parts(u, dt_u, &grad, ts, coef.mu)?;
    let h = h_from_gradient(&grad, ts, coef);
    Ok(RhsBundle { d, f, g, g_tilde, h })
}

impl RhsBundle {
    pub fn zeros(u: &BulkField) -> Self {
        let n = u.ncomp;
        RhsBundle {
            d: HeightField::zeros(&u.h),
            f: BulkField::zeros(&u.h, &u.v, n),
            g: BulkField::zeros(&u.h, &u.v, 1),
            g_tilde: BulkField::zeros(&u.h, &u.v, n),
            h: (0..n).map(|_| HeightField::zeros(&u.h)).collect(),
        }
    }
}
