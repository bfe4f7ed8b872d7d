//! The flattening map `Theta(x', x_N, t) = (x', x_N + E_N eta, t)` and its calculus.

use crate::error::{Error, Result};
use crate::spectral::{
    extension_derivative, forward_bulk, forward_height, horizontal_derivative, inverse_bulk,
    BulkField, ExtensionKind, HeightField, VerticalGrid,
};

/// Small dense matrix with `n <= 4`.
pub type Mat = [[f64; 4]; 4];

pub fn identity(n: usize) -> Mat {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat, n: usize) -> Mat {
    let mut c = [[0.0; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn matvec(a: &Mat, x: &[f64; 4], n: usize) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..n {
        y[i] = (0..n).map(|k| a[i][k] * x[k]).sum();
    }
    y
}

/// Extension of `eta` and its exact derivatives on the flat grid.
#[derive(Clone, Debug)]
pub struct TransformState {
    pub n: usize,
    pub kind: ExtensionKind,
    /// `E_N eta`.
    pub eta_ext: BulkField,
    /// `d_t E_N eta`.
    pub dt_eta_ext: BulkField,
    /// `d_j E_N eta`, `j = 1..N`.
    pub grad_eta_ext: BulkField,
    /// `d_j d_k E_N eta`, component `j * N + k`.
    pub hess_eta_ext: BulkField,
    /// `J = 1 + d_N E_N eta`.
    pub jacobian: BulkField,
}

/// Time derivative on stored levels: centered in the interior, one-sided second order at
/// the ends (first order when only two levels exist).
pub fn time_derivative(levels: &[HeightField], dt: f64, at: usize) -> HeightField {
    let n = levels.len();
    assert!(n >= 1 && at < n);
    if n == 1 {
        return HeightField::zeros(&levels[0].grid);
    }
    let comb = |w: &[(usize, f64)]| {
        let mut out = HeightField::zeros(&levels[0].grid);
        for &(i, c) in w {
            for (o, v) in out.values.iter_mut().zip(&levels[i].values) {
                *o += c * v / dt;
            }
        }
        out
    };
    if n == 2 {
        return comb(&[(0, -1.0), (1, 1.0)]);
    }
    if at == 0 {
        comb(&[(0, -1.5), (1, 2.0), (2, -0.5)])
    } else if at == n - 1 {
        comb(&[(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)])
    } else {
        comb(&[(at - 1, -0.5), (at + 1, 0.5)])
    }
}

/// Build the transform from `eta` and its time derivative.
pub fn build_transform(
    eta: &HeightField,
    dt_eta: &HeightField,
    n: usize,
    v: &VerticalGrid,
) -> Result<TransformState> {
    let ts = build_transform_unchecked(eta, dt_eta, n, v)?;
    let slope = ts.max_vertical_slope();
    if slope > 0.5 {
        return Err(Error::DiffeoViolation { max_slope: slope });
    }
    Ok(ts)
}

/// As [`build_transform`] with `d_t eta` from centered time differences of stored levels.
pub fn build_transform_sampled(
    levels: &[HeightField],
    dt: f64,
    at: usize,
    n: usize,
    v: &VerticalGrid,
) -> Result<TransformState> {
    let dte = time_derivative(levels, dt, at);
    build_transform(&levels[at], &dte, n, v)
}

/// Same as [`build_transform`] without the diffeomorphism check.
pub fn build_transform_unchecked(
    eta: &HeightField,
    dt_eta: &HeightField,
    n: usize,
    v: &VerticalGrid,
) -> Result<TransformState> {
    let kind = ExtensionKind::for_dimension(n)?;
    if eta.grid.dim() != n || dt_eta.grid != eta.grid {
        return Err(Error::GridMismatch("eta grid does not match N"));
    }
    let s = forward_height(eta)?;
    let st = forward_height(dt_eta)?;
    let axes = |j: usize| -> Vec<usize> { if j < n - 1 { vec![j] } else { vec![] } };
    let zo = |j: usize| -> u32 { u32::from(j == n - 1) };
    let eta_ext = extension_derivative(&s, v, kind, &[], 0);
    let dt_eta_ext = extension_derivative(&st, v, kind, &[], 0);
    let grads: Vec<BulkField> =
        (0..n).map(|j| extension_derivative(&s, v, kind, &axes(j), zo(j))).collect();
    let mut hess = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut ax = axes(j);
            ax.extend(axes(k));
            hess.push(extension_derivative(&s, v, kind, &ax, zo(j) + zo(k)));
        }
    }
    let jacobian = grads[n - 1].map(|d| 1.0 + d);
    Ok(TransformState {
        n,
        kind,
        eta_ext,
        dt_eta_ext,
        grad_eta_ext: BulkField::stack(&grads),
        hess_eta_ext: BulkField::stack(&hess),
        jacobian,
    })
}

impl TransformState {
    pub fn max_vertical_slope(&self) -> f64 {
        self.grad_eta_ext.component_slice(self.n - 1).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `1/2 - max |d_N E_N eta|`; nonnegative inside the admissible ball.
    pub fn diffeo_margin(&self) -> f64 {
        0.5 - self.max_vertical_slope()
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    #[inline]
    pub fn grad(&self, j: usize, ih: usize, iz: usize) -> f64 {
        self.grad_eta_ext.get(j, ih, iz)
    }

    #[inline]
    pub fn hess(&self, j: usize, k: usize, ih: usize, iz: usize) -> f64 {
        self.hess_eta_ext.get(j * self.n + k, ih, iz)
    }

    /// `J(eta)`: only the last column is nonzero.
    pub fn j_matrix(&self, ih: usize, iz: usize) -> Mat {
        let mut m = [[0.0; 4]; 4];
        for (j, row) in m.iter_mut().enumerate().take(self.n) {
            row[self.n - 1] = self.grad(j, ih, iz);
        }
        m
    }

    /// `K(eta)`: as `J(eta)` with vanishing `(N, N)` entry.
    pub fn k_matrix(&self, ih: usize, iz: usize) -> Mat {
        let mut m = self.j_matrix(ih, iz);
        m[self.n - 1][self.n - 1] = 0.0;
        m
    }

    /// `n(eta) = (-grad' E_N eta, 1)`.
    pub fn normal(&self, ih: usize, iz: usize) -> [f64; 4] {
        let mut v = self.normal_hat(ih, iz);
        v[self.n - 1] = 1.0;
        v
    }

    /// `n_hat(eta) = (-grad' E_N eta, 0)`.
    pub fn normal_hat(&self, ih: usize, iz: usize) -> [f64; 4] {
        let mut v = [0.0; 4];
        for (j, vj) in v.iter_mut().enumerate().take(self.n - 1) {
            *vj = -self.grad(j, ih, iz);
        }
        v
    }

    /// Unit outer normal of the physical surface, evaluated on the flat boundary.
    pub fn surface_unit_normal(&self, ih: usize) -> [f64; 4] {
        let iz = self.eta_ext.nz() - 1;
        let mut nv = self.normal(ih, iz);
        let s = self.slope_factor(ih);
        for x in nv.iter_mut().take(self.n) {
            *x /= s;
        }
        nv
    }

    /// `sqrt(1 + |grad' E_N eta|^2)` at `x_N = 0`.
    pub fn slope_factor(&self, ih: usize) -> f64 {
        let iz = self.eta_ext.nz() - 1;
        let g2: f64 = (0..self.n - 1).map(|j| self.grad(j, ih, iz).powi(2)).sum();
        (1.0 + g2).sqrt()
    }

    /// `I - J^{-1} J(eta)`, the matrix taking flat gradients to physical gradients.
    pub fn chain_matrix(&self, ih: usize, iz: usize) -> Mat {
        let jm = self.j_matrix(ih, iz);
        let a = self.jacobian.get(0, ih, iz);
        let mut m = identity(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                m[i][k] -= jm[i][k] / a;
            }
        }
        m
    }

    /// Best-effort inverse of the vertical map at column `ih`: returns `x_N` with
    /// `x_N + E_N eta(x', x_N) = y`, using linear interpolation of the column and bisection.
    pub fn invert_vertical(&self, ih: usize, y: f64, tol: f64) -> Option<f64> {
        let v = &self.eta_ext.v;
        let col = self.eta_ext.column(0, ih);
        let nodes = v.nodes();
        let phi = |x: f64| -> f64 {
            let h = v.spacing();
            let t = ((x + v.depth()) / h).clamp(0.0, (nodes.len() - 1) as f64);
            let i = (t.floor() as usize).min(nodes.len() - 2);
            let w = t - i as f64;
            x + (1.0 - w) * col[i] + w * col[i + 1] - y
        };
        let (mut lo, mut hi) = (-v.depth(), 0.0);
        let (flo, fhi) = (phi(lo), phi(hi));
        if flo > 0.0 || fhi < 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < tol {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Flat derivatives of a bulk field: horizontal spectral, vertical finite differences.
/// Component layout `c * N + a`.
pub fn flat_gradient(f: &BulkField) -> Result<BulkField> {
    crate::spectral::gradient(f)
}

/// Physical-side gradient `D_j f = d_j f - (d_j E / (1 + d_N E)) d_N f`, component `c * N + j`.
pub fn chain_gradient(f: &BulkField, ts: &TransformState) -> Result<BulkField> {
    check_grid(f, ts)?;
    let n = ts.n;
    let flat = flat_gradient(f)?;
    let mut out = flat.clone();
    let (nh, nz) = (f.nh(), f.nz());
    for c in 0..f.ncomp {
        for ih in 0..nh {
            for iz in 0..nz {
                let a = ts.jacobian.get(0, ih, iz);
                let dn = flat.get(c * n + n - 1, ih, iz);
                for j in 0..n {
                    let idx = out.idx(c * n + j, ih, iz);
                    out.values[idx] -= ts.grad(j, ih, iz) / a * dn;
                }
            }
        }
    }
    Ok(out)
}

fn check_grid(f: &BulkField, ts: &TransformState) -> Result<()> {
    if f.h != ts.eta_ext.h || f.v != ts.eta_ext.v {
        return Err(Error::GridMismatch("field and transform grids differ"));
    }
    Ok(())
}

/// Second flat derivatives needed by `D_jk`: the mixed `d_j d_N` (component `c * N + j`, with
/// `j = N` giving `d_N^2` by the three-point stencil) and `d_N` (component `c`).
pub struct VerticalDerivs {
    pub dn: BulkField,
    pub djn: BulkField,
}

pub fn vertical_derivs(f: &BulkField, n: usize) -> Result<VerticalDerivs> {
    let dn = f.dz(1);
    let s = forward_bulk(&dn)?;
    let mut parts = Vec::with_capacity(n);
    for a in 0..n - 1 {
        parts.push(inverse_bulk(&horizontal_derivative(&s, a)));
    }
    parts.push(f.dz(2));
    let nn = f.nh() * f.nz();
    let mut djn = BulkField::zeros(&f.h, &f.v, f.ncomp * n);
    for c in 0..f.ncomp {
        for (a, p) in parts.iter().enumerate() {
            djn.values[(c * n + a) * nn..(c * n + a + 1) * nn]
                .copy_from_slice(&p.values[c * nn..(c + 1) * nn]);
        }
    }
    Ok(VerticalDerivs { dn, djn })
}

/// `D_jk(eta) f` for every component of `f` (0-based `j, k`, `N - 1` is vertical).
pub fn second_order_djk(f: &BulkField, ts: &TransformState, j: usize, k: usize) -> Result<BulkField> {
    check_grid(f, ts)?;
    let d = vertical_derivs(f, ts.n)?;
    Ok(djk_from_derivs(&d, f.ncomp, ts, j, k))
}

pub(crate) fn djk_from_derivs(
    d: &VerticalDerivs,
    ncomp: usize,
    ts: &TransformState,
    j: usize,
    k: usize,
) -> BulkField {
    let n = ts.n;
    let mut out = BulkField::zeros(&d.dn.h, &d.dn.v, ncomp);
    let (nh, nz) = (d.dn.nh(), d.dn.nz());
    for c in 0..ncomp {
        for ih in 0..nh {
            for iz in 0..nz {
                let a = ts.jacobian.get(0, ih, iz);
                let (ej, ek) = (ts.grad(j, ih, iz), ts.grad(k, ih, iz));
                let f_jn = d.djn.get(c * n + j, ih, iz);
                let f_kn = d.djn.get(c * n + k, ih, iz);
                let f_nn = d.djn.get(c * n + n - 1, ih, iz);
                let f_n = d.dn.get(c, ih, iz);
                let coeff = a * a * ts.hess(j, k, ih, iz)
                    - a * ek * ts.hess(j, n - 1, ih, iz)
                    - a * ej * ts.hess(n - 1, k, ih, iz)
                    + ej * ek * ts.hess(n - 1, n - 1, ih, iz);
                let val = a * a * ek * f_jn + a * a * ej * f_kn - a * ej * ek * f_nn + coeff * f_n;
                let idx = out.idx(c, ih, iz);
                out.values[idx] = val;
            }
        }
    }
    out
}

/// Flat strain `D_x(u)` and correction `E(eta, u)`, both with component `i * N + k`.
pub fn strain_fields(u: &BulkField, ts: &TransformState) -> Result<(BulkField, BulkField)> {
    check_grid(u, ts)?;
    let n = ts.n;
    if u.ncomp != n {
        return Err(Error::GridMismatch("strain needs an N-vector field"));
    }
    let g = flat_gradient(u)?;
    Ok(strain_from_gradient(&g, ts))
}

/// Same as [`strain_fields`] from a precomputed flat gradient (`g[c * N + a] = d_a u_c`).
pub fn strain_from_gradient(g: &BulkField, ts: &TransformState) -> (BulkField, BulkField) {
    let n = ts.n;
    let mut dx = BulkField::zeros(&g.h, &g.v, n * n);
    let mut e = BulkField::zeros(&g.h, &g.v, n * n);
    let (nh, nz) = (g.nh(), g.nz());
    for ih in 0..nh {
        for iz in 0..nz {
            let a = ts.jacobian.get(0, ih, iz);
            for i in 0..n {
                for k in 0..n {
                    let d = g.get(k * n + i, ih, iz) + g.get(i * n + k, ih, iz);
                    let et = ts.grad(i, ih, iz) * g.get(k * n + n - 1, ih, iz)
                        + ts.grad(k, ih, iz) * g.get(i * n + n - 1, ih, iz);
                    let i1 = dx.idx(i * n + k, ih, iz);
                    dx.values[i1] = d;
                    e.values[i1] = et / a;
                }
            }
        }
    }
    (dx, e)
}
