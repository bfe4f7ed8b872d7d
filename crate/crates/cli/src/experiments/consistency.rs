//! Pull back an exact potential flow above a prescribed surface and measure how well the
//! flattened equations are satisfied.
//!
//! `v = grad phi` with `phi` harmonic solves the momentum and continuity equations with the
//! Bernoulli pressure, so lines two and three of the flattened system must hold up to
//! discretisation error. The surface lines are compared against their physical residuals,
//! which are evaluated in closed form; the stress line picks up the factor `I + K(eta)`.

use std::f64::consts::PI;

use surfflow::geometry::build_transform;
use surfflow::nonlinear::{term_d, term_f, term_g, term_h, Coefficients};
use surfflow::spectral::{gradient, laplacian, divergence, BulkField, HeightField, HorizontalGrid, VerticalGrid};
use surfflow::Result;

/// One trigonometric term `amp * e^{rate x_N} cos(k . x' + phase)`.
#[derive(Clone, Copy, Debug)]
struct Wave {
    k: [f64; 3],
    phase: f64,
}

impl Wave {
    fn norm(&self) -> f64 {
        self.k.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    fn arg(&self, x: [f64; 3]) -> f64 {
        self.k[0] * x[0] + self.k[1] * x[1] + self.k[2] * x[2] + self.phase
    }
}

/// Parameters of the manufactured flow.
#[derive(Clone, Debug)]
pub struct ConsistencySetup {
    pub n: usize,
    pub points: usize,
    pub depth: f64,
    pub mu: f64,
    pub c_g: f64,
    pub c_sigma: f64,
    pub amplitude: f64,
    pub t: f64,
}

impl ConsistencySetup {
    pub fn new(n: usize) -> Self {
        Self { n, points: 16, depth: 3.0, mu: 0.8, c_g: 1.5, c_sigma: 0.6, amplitude: 0.12, t: 0.4 }
    }
}

/// Max-norm residuals of the four flattened lines, each relative to the size of its terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineResiduals {
    pub kinematic: f64,
    pub momentum: f64,
    pub divergence: f64,
    pub stress: f64,
}

impl LineResiduals {
    pub fn as_array(&self) -> [f64; 4] {
        [self.kinematic, self.momentum, self.divergence, self.stress]
    }
}

struct Flow {
    n: usize,
    eta_waves: Vec<(Wave, f64)>,
    phi_waves: Vec<Wave>,
    amp: f64,
}

impl Flow {
    fn new(n: usize, amp: f64) -> Self {
        let k = |a: f64, b: f64| if n == 3 { [a, b, 0.0] } else { [a, b, 1.0] };
        let eta_waves = vec![
            (Wave { k: k(1.0, 0.0), phase: 0.0 }, 1.0),
            (Wave { k: k(1.0, 1.0), phase: -0.5 * PI }, 0.5),
        ];
        let phi_waves = vec![Wave { k: k(1.0, 0.0), phase: 0.3 }, Wave { k: k(1.0, -1.0), phase: 1.1 }];
        let mut f = Self { n, eta_waves, phi_waves, amp };
        if n == 2 {
            for w in f.eta_waves.iter_mut().map(|(w, _)| w).chain(f.phi_waves.iter_mut()) {
                w.k[1] = 0.0;
            }
        }
        f
    }

    fn eta_scale(&self, t: f64) -> (f64, f64) {
        (self.amp * (1.0 + 0.3 * t), 0.3 * self.amp)
    }

    fn phi_coeffs(&self, t: f64) -> [(f64, f64); 2] {
        [(0.2 + 0.1 * t, 0.1), (0.1 * t.cos(), -0.1 * t.sin())]
    }

    fn ext_rate(&self, w: &Wave) -> f64 {
        if self.n == 3 || self.n == 2 {
            w.norm()
        } else {
            (1.0 + w.norm().powi(2)).sqrt()
        }
    }

    /// `E_N eta` at `(x', x_N)`.
    fn ext(&self, x: [f64; 3], z: f64, t: f64) -> f64 {
        let (s, _) = self.eta_scale(t);
        self.eta_waves.iter().map(|(w, a)| s * a * (self.ext_rate(w) * z).exp() * w.arg(x).cos()).sum()
    }

    /// `(eta, d_t eta, grad' eta, hess' eta)` on the surface.
    fn surface(&self, x: [f64; 3], t: f64) -> (f64, f64, [f64; 3], [[f64; 3]; 3]) {
        let (s, ds) = self.eta_scale(t);
        let (mut e, mut et, mut g, mut hm) = (0.0, 0.0, [0.0; 3], [[0.0; 3]; 3]);
        for (w, a) in &self.eta_waves {
            let (c, sn) = (w.arg(x).cos(), w.arg(x).sin());
            e += s * a * c;
            et += ds * a * c;
            for i in 0..self.n - 1 {
                g[i] -= s * a * w.k[i] * sn;
                for j in 0..self.n - 1 {
                    hm[i][j] -= s * a * w.k[i] * w.k[j] * c;
                }
            }
        }
        (e, et, g, hm)
    }

    /// `(grad phi, hess phi, d_t phi)` at a physical point `y = (x', y_N)`.
    fn potential(&self, x: [f64; 3], y: f64, t: f64) -> ([f64; 4], [[f64; 4]; 4], f64) {
        let n = self.n;
        let coef = self.phi_coeffs(t);
        let (mut g, mut hm, mut pt) = ([0.0; 4], [[0.0; 4]; 4], 0.0);
        for (w, (a, da)) in self.phi_waves.iter().zip(coef) {
            // The potential is harmonic in y: the vertical rate equals |k|.
            let r = w.norm();
            let ez = (r * y).exp();
            let (c, s) = (w.arg(x).cos(), w.arg(x).sin());
            pt += da * ez * c;
            let mut kk = [0.0; 4];
            kk[..n - 1].copy_from_slice(&w.k[..n - 1]);
            for i in 0..n - 1 {
                g[i] -= a * kk[i] * ez * s;
                for j in 0..n - 1 {
                    hm[i][j] -= a * kk[i] * kk[j] * ez * c;
                }
                hm[i][n - 1] -= a * kk[i] * r * ez * s;
                hm[n - 1][i] = hm[i][n - 1];
            }
            g[n - 1] += a * r * ez * c;
            hm[n - 1][n - 1] += a * r * r * ez * c;
        }
        (g, hm, pt)
    }

    /// Pulled-back `(u, p)` at time `t`.
    fn pullback(&self, h: &HorizontalGrid, v: &VerticalGrid, t: f64) -> (BulkField, BulkField) {
        let n = self.n;
        let f = |x: [f64; 3], z: f64| -> Vec<f64> {
            let y = z + self.ext(x, z, t);
            let (g, _, pt) = self.potential(x, y, t);
            let q = -pt - 0.5 * g[..n].iter().map(|a| a * a).sum::<f64>();
            let mut out = g[..n].to_vec();
            out.push(q);
            out
        };
        let all = BulkField::from_fn(h, v, n + 1, f);
        let u = BulkField::stack(&(0..n).map(|c| all.component(c)).collect::<Vec<_>>());
        (u, all.component(n))
    }
}

fn rel(res: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

/// Residuals of the four flattened lines at vertical resolution `m_z`.
pub fn line_residuals(setup: &ConsistencySetup, m_z: usize) -> Result<LineResiduals> {
    let n = setup.n;
    let flow = Flow::new(n, setup.amplitude);
    let h = HorizontalGrid::for_dimension(n, 2.0 * PI, setup.points)?;
    let v = VerticalGrid::new(setup.depth, m_z)?;
    let t = setup.t;
    let eta = HeightField::from_fn(&h, |x| flow.surface(x, t).0);
    let dt_eta = HeightField::from_fn(&h, |x| flow.surface(x, t).1);
    let ts = build_transform(&eta, &dt_eta, n, &v)?;
    let (u, p) = flow.pullback(&h, &v, t);
    let dt = 1e-5;
    let (up, _) = flow.pullback(&h, &v, t + dt);
    let (um, _) = flow.pullback(&h, &v, t - dt);
    let dt_u = up.sub(&um).scaled(0.5 / dt);
    let coef = Coefficients { mu: setup.mu, sigma: setup.c_sigma };
    let top = m_z - 1;

    // Line 1 against the physical kinematic residual.
    let d = term_d(&u, &ts)?;
    let (mut r1, mut s1) = (0.0f64, 0.0f64);
    for ih in 0..h.len() {
        let x = h.coords(ih);
        let (e, et, g, _) = flow.surface(x, t);
        let (vel, _, _) = flow.potential(x, e, t);
        let phys = et - vel[n - 1] + (0..n - 1).map(|j| vel[j] * g[j]).sum::<f64>();
        let flat = et - u.get(n - 1, ih, top) - d.values[ih];
        r1 = r1.max((flat - phys).abs());
        s1 = s1.max(et.abs()).max(vel[n - 1].abs());
    }

    // Lines 2 and 3: the physical residuals vanish.
    let f = term_f(&u, &dt_u, &ts, setup.mu)?;
    let lap = laplacian(&u)?;
    let gp = gradient(&p)?;
    let (mut r2, mut s2) = (0.0f64, 0.0f64);
    for c in 0..n {
        for ih in 0..h.len() {
            for iz in 0..m_z {
                let parts = [dt_u.get(c, ih, iz), -setup.mu * lap.get(c, ih, iz), gp.get(c, ih, iz), -f.get(c, ih, iz)];
                r2 = r2.max(parts.iter().sum::<f64>().abs());
                s2 = parts.iter().fold(s2, |m, x| m.max(x.abs()));
            }
        }
    }
    let (g, _) = term_g(&u, &ts)?;
    let div = divergence(&u)?;
    let r3 = div.sub(&g).max_abs();
    let s3 = div.max_abs().max(g.max_abs());

    // Line 4 against (I + K) times the physical stress residual.
    let hh = term_h(&u, &ts, coef)?;
    let gu = gradient(&u)?;
    let (mut r4, mut s4) = (0.0f64, 0.0f64);
    for ih in 0..h.len() {
        let x = h.coords(ih);
        let (e, _, gr, hm) = flow.surface(x, t);
        let (vel, hp, pt) = flow.potential(x, e, t);
        let q = -pt - 0.5 * vel[..n].iter().map(|a| a * a).sum::<f64>();
        let mut nrm = [0.0; 4];
        for j in 0..n - 1 {
            nrm[j] = -gr[j];
        }
        nrm[n - 1] = 1.0;
        let g2: f64 = gr[..n - 1].iter().map(|a| a * a).sum();
        let sq = (1.0 + g2).sqrt();
        let lap_e: f64 = (0..n - 1).map(|j| hm[j][j]).sum();
        let mut quad = 0.0;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                quad += gr[i] * gr[j] * hm[i][j];
            }
        }
        let kappa = lap_e / sq - quad / (sq * sq * sq);
        let mut phys = [0.0; 4];
        for i in 0..n {
            let dn: f64 = (0..n).map(|k| 2.0 * setup.mu * hp[i][k] * nrm[k]).sum();
            phys[i] = dn - q * nrm[i] + setup.c_g * e * nrm[i] - setup.c_sigma * kappa * nrm[i];
        }
        // K has last column (grad' E eta, 0).
        let mut target = phys;
        for j in 0..n - 1 {
            target[j] += gr[j] * phys[n - 1];
        }
        let pt_top = p.get(0, ih, top);
        for i in 0..n {
            let stress = setup.mu * (gu.get(i * n + n - 1, ih, top) + gu.get((n - 1) * n + i, ih, top));
            let mut flat = stress - hh[i].values[ih];
            if i == n - 1 {
                flat += -pt_top + setup.c_g * e - setup.c_sigma * lap_e;
            }
            r4 = r4.max((flat - target[i]).abs());
            s4 = s4.max(stress.abs()).max(pt_top.abs()).max(hh[i].values[ih].abs());
        }
    }
    Ok(LineResiduals { kinematic: rel(r1, s1), momentum: rel(r2, s2), divergence: rel(r3, s3), stress: rel(r4, s4) })
}

/// Residuals over a vertical refinement and the observed orders between the last two levels.
pub fn consistency_study(setup: &ConsistencySetup, levels: &[usize]) -> Result<(Vec<LineResiduals>, [f64; 4])> {
    let res: Vec<LineResiduals> = levels.iter().map(|&m| line_residuals(setup, m)).collect::<Result<_>>()?;
    let mut orders = [0.0; 4];
    if res.len() >= 2 {
        let (a, b) = (res[res.len() - 2].as_array(), res[res.len() - 1].as_array());
        let ratio = (levels[levels.len() - 1] - 1) as f64 / (levels[levels.len() - 2] - 1) as f64;
        for i in 0..4 {
            orders[i] = (a[i] / b[i]).ln() / ratio.ln();
        }
    }
    Ok((res, orders))
}

/// `|F(0, u) + (u . grad) u|_inf` for the pulled-back flow at `eta = 0`.
pub fn flat_convection_defect(setup: &ConsistencySetup, m_z: usize) -> Result<f64> {
    let n = setup.n;
    let flow = Flow::new(n, 0.0);
    let h = HorizontalGrid::for_dimension(n, 2.0 * PI, setup.points)?;
    let v = VerticalGrid::new(setup.depth, m_z)?;
    let zero = HeightField::zeros(&h);
    let ts = build_transform(&zero, &zero, n, &v)?;
    let (u, _) = flow.pullback(&h, &v, setup.t);
    let dt_u = u.map(|x| 0.7 * x - 1.0);
    let f = term_f(&u, &dt_u, &ts, setup.mu)?;
    let g = gradient(&u)?;
    let mut worst = 0.0f64;
    for c in 0..n {
        for ih in 0..h.len() {
            for iz in 0..m_z {
                let conv: f64 = (0..n).map(|j| u.get(j, ih, iz) * g.get(c * n + j, ih, iz)).sum();
                worst = worst.max((f.get(c, ih, iz) + conv).abs());
            }
        }
    }
    Ok(worst)
}
