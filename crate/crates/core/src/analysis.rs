//! Duhamel-integral checks on model semigroups, continuum decay experiments, power-law
//! fits and the weighted space-time norms of the linear theory.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::time_derivative;
use crate::spectral::{
    extend_b, norm_lq_bulk, norm_lq_height, sobolev_bulk, sobolev_height, BulkField, HeightField,
    SobolevOrder, VerticalGrid,
};
use crate::stokes::{Elimination, ModeFactors, ModeOperator, ModeRhs, StokesParams};

/// Time-indexed table of named norms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Exponent `a` of the weight `<t>^a` the entries were multiplied by, if any.
    pub weight_exponent: Option<f64>,
}

impl NormSeries {
    pub fn new(names: &[&str]) -> Self {
        Self { names: names.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.names.len());
        self.times.push(t);
        self.rows.push(values);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// `<t> = sqrt(1 + t^2)`.
pub fn japanese(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// Least-squares slope of `log y` against `log t` over `window`, with its standard error.
pub fn fit_power_law(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if !(yi > 0.0) || ti <= 0.0 {
            return Err(Error::NonPositiveSample(ti));
        }
        xs.push(ti.ln());
        ys.push(yi.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::HypothesisViolation(format!("only {n} samples in the fit window")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// [`fit_power_law`] applied to one column of a series.
pub fn fit_decay_exponent(series: &NormSeries, column: &str, window: (f64, f64)) -> Result<(f64, f64)> {
    let y = series.column(column).ok_or_else(|| Error::MissingComponent(column.to_string()))?;
    fit_power_law(&series.times, &y, window)
}

/// Discrete `L_p(t_0, t_1)` norm by the trapezoid rule; `p = inf` gives the maximum.
pub fn lp_trapezoid(t: &[f64], g: &[f64], p: f64) -> f64 {
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || t.len() < 2 {
        return 0.0;
    }
    if p.is_infinite() {
        return scale;
    }
    let mut acc = 0.0;
    for i in 0..t.len() - 1 {
        let a = (g[i].abs() / scale).powf(p);
        let b = (g[i + 1].abs() / scale).powf(p);
        acc += 0.5 * (t[i + 1] - t[i]) * (a + b);
    }
    scale * acc.powf(1.0 / p)
}

/// Semigroup on a finite-dimensional state with the norms entering the Duhamel estimate.
pub trait ModelSemigroup: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, x: &[f64]) -> Vec<f64>;
    /// `A x` for the generator `-A`.
    fn generator(&self, x: &[f64]) -> Vec<f64>;
    fn x_norm(&self, x: &[f64]) -> f64;
    fn y_norm(&self, x: &[f64]) -> f64;
    /// `(a, delta, M)` in `|T(t) x|_{D(A)} <= M t^{-a-delta} |x|_Y` for `t >= 1`.
    fn decay(&self) -> (f64, f64, f64);
    /// Fastest time scale, used to refine the quadrature near `tau = t`.
    fn rate_max(&self) -> f64;

    fn dom_norm(&self, x: &[f64]) -> f64 {
        self.x_norm(x) + self.x_norm(&self.generator(x))
    }
}

/// `T(t) = diag(e^{-lambda_i t})` on `(R^n, max-norm)` with
/// `|x|_Y = max_i (1 + lambda_i) lambda_i^{-(a+delta)} |x_i|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSemigroup {
    pub rates: Vec<f64>,
    pub a: f64,
    pub delta: f64,
    pub m: f64,
}

impl DiagonalSemigroup {
    pub fn new(rates: Vec<f64>, a: f64, delta: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) || !(delta > 0.0) {
            return Err(Error::HypothesisViolation(format!("need a in (0,1] and delta > 0, got ({a}, {delta})")));
        }
        if rates.is_empty() || rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::HypothesisViolation("rates must be positive".into()));
        }
        let s = a + delta;
        // max_y y^s e^{-y} = (s/e)^s, and the graph norm is at most twice the weighted max.
        let m = 2.0 * (s / std::f64::consts::E).powf(s);
        Ok(Self { rates, a, delta, m })
    }

    pub fn log_spaced(n: usize, lo: f64, hi: f64, a: f64, delta: f64) -> Result<Self> {
        let rates = (0..n)
            .map(|i| if n == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (n - 1) as f64) })
            .collect();
        Self::new(rates, a, delta)
    }
}

impl ModelSemigroup for DiagonalSemigroup {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.rates).map(|(xi, r)| xi * (-r * t).exp()).collect()
    }

    fn generator(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.rates).map(|(xi, r)| xi * r).collect()
    }

    fn x_norm(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn y_norm(&self, x: &[f64]) -> f64 {
        let s = self.a + self.delta;
        x.iter().zip(&self.rates).fold(0.0, |m, (xi, r)| m.max((1.0 + r) * r.powf(-s) * xi.abs()))
    }

    fn decay(&self) -> (f64, f64, f64) {
        (self.a, self.delta, self.m)
    }

    fn rate_max(&self) -> f64 {
        self.rates.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Largest `|T(t) x|_{D(A)} / (M t^{-a-delta} |x|_Y)` over the given samples.
pub fn verify_decay_invariant(sg: &dyn ModelSemigroup, times: &[f64], states: &[Vec<f64>]) -> f64 {
    let (a, d, m) = sg.decay();
    let mut worst: f64 = 0.0;
    for &t in times {
        for x in states {
            let y = sg.y_norm(x);
            if y == 0.0 {
                continue;
            }
            let lhs = sg.dom_norm(&sg.apply(t, x));
            worst = worst.max(lhs / (m * t.powf(-a - d) * y));
        }
    }
    worst
}

/// Piecewise-linear interpolation of samples; zero outside the sampled range.
fn interp(times: &[f64], samples: &[Vec<f64>], t: f64) -> Vec<f64> {
    let d = samples.first().map_or(0, |s| s.len());
    if times.is_empty() || t < times[0] || t > *times.last().unwrap() {
        return vec![0.0; d];
    }
    let j = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(j) => return samples[j].clone(),
        Err(j) => j,
    };
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (t - t0) / (t1 - t0);
    samples[j - 1].iter().zip(&samples[j]).map(|(a, b)| (1.0 - w) * a + w * b).collect()
}

/// `u(t) = int_0^t T(t - tau) f(tau) dtau` on `t_grid` (sorted, nonnegative). The forcing is
/// interpolated linearly between its samples and vanishes after the last one.
///
/// The integral is accumulated step by step, `u(t') = T(t' - t) u(t) + int_t^{t'}`, with each
/// local integral done by a composite trapezoid rule subdivided so that the fastest rate is
/// resolved near `tau = t'`.
pub fn duhamel_convolve(
    sg: &dyn ModelSemigroup,
    f_times: &[f64],
    f_samples: &[Vec<f64>],
    t_grid: &[f64],
) -> Vec<Vec<f64>> {
    let d = sg.dim();
    let mut nodes: Vec<f64> = f_times.iter().chain(t_grid).copied().chain(std::iter::once(0.0)).collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();
    let f_end = f_times.last().copied().unwrap_or(0.0);
    let rmax = sg.rate_max();
    let mut u = vec![0.0; d];
    let mut out = Vec::with_capacity(t_grid.len());
    let mut gi = 0;
    let emit = |t: f64, u: &Vec<f64>, gi: &mut usize, out: &mut Vec<Vec<f64>>| {
        while *gi < t_grid.len() && t_grid[*gi] <= t {
            out.push(u.clone());
            *gi += 1;
        }
    };
    emit(nodes[0], &u, &mut gi, &mut out);
    for w in nodes.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        let mut next = sg.apply(dt, &u);
        if t0 < f_end {
            let sub = ((16.0 * rmax * dt).ceil() as usize).clamp(1, 1 << 14);
            let h = dt / sub as f64;
            for j in 0..=sub {
                let tau = t0 + j as f64 * h;
                let wt = if j == 0 || j == sub { 0.5 * h } else { h };
                let fv = interp(f_times, f_samples, tau);
                let tv = sg.apply(t1 - tau, &fv);
                for (n, v) in next.iter_mut().zip(&tv) {
                    *n += wt * v;
                }
            }
        }
        u = next;
        emit(t1, &u, &mut gi, &mut out);
    }
    out
}

/// Forcing `f(t)` with compact support in `[0, support]`.
pub struct Forcing {
    pub support: f64,
    pub eval: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

/// One smooth bump `amplitudes * exp(1 - 1/(1 - r^2))`, `r = (t - center)/width`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpTerm {
    pub center: f64,
    pub width: f64,
    pub amplitudes: Vec<f64>,
}

impl Forcing {
    pub fn zero(dim: usize) -> Self {
        Self { support: 0.0, eval: Box::new(move |_| vec![0.0; dim]) }
    }

    /// Sum of smooth bumps; the support is the hull of the bump supports.
    pub fn bumps(dim: usize, terms: Vec<BumpTerm>) -> Self {
        let support = terms.iter().fold(0.0f64, |m, b| m.max(b.center + b.width));
        let eval = move |t: f64| {
            let mut v = vec![0.0; dim];
            for b in &terms {
                let r = (t - b.center) / b.width;
                if r.abs() < 1.0 {
                    let s = (1.0 - 1.0 / (1.0 - r * r)).exp();
                    for (vi, a) in v.iter_mut().zip(&b.amplitudes) {
                        *vi += s * a;
                    }
                }
            }
            v
        };
        Self { support, eval: Box::new(eval) }
    }
}

/// Time grid for [`check_duhamel_estimate`]: uniform step `dt` on `[0, support]`, then
/// `log_points` geometric points up to `t_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuhamelGrid {
    pub dt: f64,
    pub support: f64,
    pub t_max: f64,
    pub log_points: usize,
}

impl DuhamelGrid {
    pub fn times(&self) -> Vec<f64> {
        let n = (self.support / self.dt).round() as usize;
        let mut t: Vec<f64> = (0..=n).map(|i| i as f64 * self.dt).collect();
        let t0 = n as f64 * self.dt;
        let r = (self.t_max / t0).powf(1.0 / self.log_points as f64);
        for j in 1..=self.log_points {
            t.push(t0 * r.powi(j as i32));
        }
        t
    }

    /// Twice as many points in both parts.
    pub fn refined(&self) -> Self {
        Self { dt: 0.5 * self.dt, log_points: 2 * self.log_points, ..*self }
    }
}

/// Outcome of [`check_duhamel_estimate`].
#[derive(Clone, Debug, PartialEq)]
pub struct DuhamelReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// True when every forcing vanished, so the estimate holds trivially.
    pub vacuous: bool,
}

/// `LHS / RHS` of the weighted Duhamel estimate for every forcing.
pub fn check_duhamel_estimate(
    sg: &dyn ModelSemigroup,
    forcings: &[Forcing],
    p: f64,
    grid: &DuhamelGrid,
) -> Result<DuhamelReport> {
    let (a, delta, _) = sg.decay();
    if !(p >= 1.0) || p * delta <= 1.0 {
        return Err(Error::HypothesisViolation(format!(
            "need p >= s_0 >= 1 with s_0 delta > 1; p delta = {}",
            p * delta
        )));
    }
    if grid.support < 2.0 || grid.t_max <= grid.support {
        return Err(Error::HypothesisViolation("time grid must cover [0, 2] and extend past the support".into()));
    }
    let times = grid.times();
    let ratios: Vec<Option<f64>> = forcings
        .par_iter()
        .map(|f| {
            let samples: Vec<Vec<f64>> =
                times.iter().map(|&t| if t <= f.support { (f.eval)(t) } else { vec![0.0; sg.dim()] }).collect();
            let rhs_g: Vec<f64> = times
                .iter()
                .zip(&samples)
                .map(|(&t, x)| japanese(t) * (sg.y_norm(x) + sg.dom_norm(x)))
                .collect();
            let rhs = lp_trapezoid(&times, &rhs_g, p);
            if rhs == 0.0 {
                return None;
            }
            let u = duhamel_convolve(sg, &times, &samples, &times);
            let mut tl = Vec::new();
            let mut g1 = Vec::new();
            let mut g2 = Vec::new();
            for ((&t, ui), fi) in times.iter().zip(&u).zip(&samples) {
                if t < 2.0 {
                    continue;
                }
                let au = sg.generator(ui);
                let dtu: Vec<f64> = fi.iter().zip(&au).map(|(f, a)| f - a).collect();
                let w = japanese(t).powf(a);
                tl.push(t);
                g1.push(w * sg.x_norm(&dtu));
                g2.push(w * sg.dom_norm(ui));
            }
            Some((lp_trapezoid(&tl, &g1, p) + lp_trapezoid(&tl, &g2, p)) / rhs)
        })
        .collect();
    let vacuous = ratios.iter().all(Option::is_none);
    let ratios: Vec<f64> = ratios.into_iter().map(|r| r.unwrap_or(0.0)).collect();
    let max_ratio = ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(DuhamelReport { ratios, max_ratio, vacuous })
}

/// Radial boundary data for [`continuum_mode_decay`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataProfile {
    /// `eta_hat_0 = exp(-|xi'|^2)`.
    Gaussian,
    /// `eta_hat_0 = |xi'|^{-(N-1)(1-1/p)} exp(-|xi'|^2)`, whose `L_p` scaling saturates the
    /// `L_p -> L_q` decay rate.
    ScaleCritical,
}

/// Settings of the continuum (`xi'` in `R^{N-1}`) decay experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumDecayConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub profile: DataProfile,
    pub params: StokesParams,
    pub k_min: f64,
    pub k_max: f64,
    pub k_nodes: usize,
    pub m_z: usize,
    /// Per-mode depth is `depth_factor / |xi'|`.
    pub depth_factor: f64,
    pub t_final: f64,
    /// Samples per unit interval of `log2 t`.
    pub samples_per_octave: usize,
    /// Upper bound for `omega(k) dt`, with `omega` the inviscid wave frequency.
    pub phase_step: f64,
    /// A node stops evolving once its weighted contributions to both surrogates fall below
    /// this value.
    pub cutoff: f64,
}

impl ContinuumDecayConfig {
    pub fn new(n: usize, p: f64, q: f64) -> Self {
        Self {
            n,
            p,
            q,
            profile: DataProfile::ScaleCritical,
            params: StokesParams { mu: 1.0, c_g: 1.0, c_sigma: 1.0 },
            k_min: 1e-3,
            k_max: 1e2,
            k_nodes: 200,
            m_z: 48,
            depth_factor: 8.0,
            t_final: 1024.0,
            samples_per_octave: 16,
            phase_step: 0.2,
            cutoff: 1e-30,
        }
    }

    /// Output times: `1/s, 2/s, ..., 1` and then `s` samples per octave up to `t_final`.
    pub fn times(&self) -> Vec<f64> {
        let s = self.samples_per_octave as f64;
        let mut t: Vec<f64> = (0..=self.samples_per_octave).map(|i| i as f64 / s).collect();
        let mut lo = 1.0;
        while lo < self.t_final * (1.0 - 1e-12) {
            let h = lo / s;
            for i in 1..=self.samples_per_octave {
                t.push(lo + i as f64 * h);
            }
            lo *= 2.0;
        }
        t
    }

    fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.n) {
            return Err(Error::UnsupportedDimension(self.n));
        }
        let (p, q) = (self.p, self.q);
        if !(p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()) || (p == 2.0 && q == 2.0) {
            return Err(Error::HypothesisViolation(format!(
                "decay needs 1 < p <= 2 <= q < inf with (p,q) != (2,2), got ({p}, {q})"
            )));
        }
        if self.k_nodes < 2 || !(self.k_min > 0.0 && self.k_max > self.k_min) {
            return Err(Error::HypothesisViolation("bad radial quadrature".into()));
        }
        Ok(())
    }

    fn data(&self, k: f64) -> f64 {
        let base = (-k * k).exp();
        match self.profile {
            DataProfile::Gaussian => base,
            DataProfile::ScaleCritical => k.powf(-((self.n - 1) as f64) * (1.0 - 1.0 / self.p)) * base,
        }
    }
}

/// Surface measure of the unit sphere in `R^{N-1}`.
fn sphere_measure(n: usize) -> f64 {
    match n {
        2 => 2.0,
        3 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Half the smoothness index `3 - 1/q` of the height norm.
fn surface_order(q: f64) -> f64 {
    0.5 * (3.0 - 1.0 / q)
}

/// Per-mode trajectory of `|eta_hat|` and `|u_hat|_{L_q(depth)}` at the output times.
fn mode_history(cfg: &ContinuumDecayConfig, k: f64, times: &[f64], amp: f64) -> Result<Vec<(f64, f64)>> {
    let v = VerticalGrid::new(cfg.depth_factor / k, cfg.m_z)?;
    let op = ModeOperator::radial(k, &v, cfg.params);
    let m = cfg.m_z;
    let omega = (cfg.params.c_g * k + cfg.params.c_sigma * k.powi(3)).sqrt();
    let weight = (1.0 + k * k).powf(surface_order(cfg.q));
    // Linear problem: evolve unit data and rescale, which keeps the iterates out of the
    // subnormal range for strongly damped modes.
    let mut eta = Complex64::new(1.0, 0.0);
    let mut u = vec![vec![Complex64::new(0.0, 0.0); m]; 2];
    let lq = |u: &[Vec<Complex64>]| -> f64 {
        let q = cfg.q;
        (0..m)
            .map(|i| {
                let mag2: f64 = u.iter().map(|c| c[i].norm_sqr()).sum();
                v.trapezoid_weight(i) * mag2.powf(0.5 * q)
            })
            .sum::<f64>()
            .powf(1.0 / q)
    };
    let mut cache: BTreeMap<u64, ModeFactors> = BTreeMap::new();
    let mut out = vec![(amp, 0.0)];
    let mut t = times[0];
    let mut dead = amp == 0.0;
    for &t_next in &times[1..] {
        if dead {
            out.push((0.0, 0.0));
            continue;
        }
        let span = t_next - t;
        // Halve the output spacing until the phase and stiffness limits are met.
        let mut sub = 1usize;
        while omega * span / sub as f64 > cfg.phase_step {
            sub *= 2;
        }
        let dt = span / sub as f64;
        let key = dt.to_bits();
        if !cache.contains_key(&key) {
            cache.insert(key, ModeFactors::new(&op, Complex64::new(2.0 / dt, 0.0), Elimination::Monolithic)?);
        }
        let fac = &cache[&key];
        for _ in 0..sub {
            let sh = 2.0 / dt;
            let mut rhs = ModeRhs::zeros(2, m);
            rhs.d = eta * sh;
            for c in 0..2 {
                for i in 0..m {
                    rhs.f[c][i] = u[c][i] * sh;
                }
            }
            let w = fac.solve(&rhs)?;
            eta = w.eta * 2.0 - eta;
            for c in 0..2 {
                for i in 0..m {
                    u[c][i] = w.u[c][i] * 2.0 - u[c][i];
                }
            }
        }
        t = t_next;
        let e = eta.norm();
        let ul = lq(&u);
        // Crank-Nicolson leaves roundoff in the constraint rows undamped, so a node that
        // has decayed to that level carries no further information.
        let negligible = amp * e * weight < cfg.cutoff && amp * ul < cfg.cutoff;
        if negligible || (e < 1e-13 && ul < 1e-13) {
            dead = true;
        }
        out.push((amp * e, amp * ul));
    }
    Ok(out)
}

/// Radial-quadrature surrogates of `|S_1(t) (eta_0, 0)|` and `|S_2(t) (eta_0, 0)|`.
///
/// Each `|xi'| = k` node is evolved by Crank-Nicolson on its own depth grid. The `L_q` norms
/// are replaced by their Hausdorff-Young majorants: `S_1` is the `L_{q'}(xi')` norm of
/// `(1+k^2)^{(3-1/q)/2} |eta_hat|` and `S_2` the `L_{q'}(xi')` norm of `|u_hat|_{L_q(x_N)}`.
pub fn continuum_mode_decay(cfg: &ContinuumDecayConfig) -> Result<NormSeries> {
    cfg.validate()?;
    let times = cfg.times();
    let nk = cfg.k_nodes;
    let lk: Vec<f64> = (0..nk)
        .map(|i| cfg.k_min.ln() + (cfg.k_max / cfg.k_min).ln() * i as f64 / (nk - 1) as f64)
        .collect();
    let dlk = lk[1] - lk[0];
    let ks: Vec<f64> = lk.iter().map(|l| l.exp()).collect();
    let sob = surface_order(cfg.q);
    let hist: Vec<Vec<(f64, f64)>> = ks
        .par_iter()
        .map(|&k| {
            let amp = cfg.data(k);
            if amp * (1.0 + k * k).powf(sob) < cfg.cutoff {
                Ok(vec![(0.0, 0.0); times.len()])
            } else {
                mode_history(cfg, k, &times, amp)
            }
        })
        .collect::<Result<_>>()?;
    let qp = cfg.q / (cfg.q - 1.0);
    let meas = sphere_measure(cfg.n);
    let mut series = NormSeries::new(&["s1", "s2"]);
    for (it, &t) in times.iter().enumerate() {
        let mut a1 = 0.0;
        let mut a2 = 0.0;
        for (ik, &k) in ks.iter().enumerate() {
            let w = if ik == 0 || ik == nk - 1 { 0.5 * dlk } else { dlk };
            let jac = meas * k.powi(cfg.n as i32 - 2) * k * w;
            let (e, ul) = hist[ik][it];
            a1 += jac * ((1.0 + k * k).powf(sob) * e).powf(qp);
            a2 += jac * ul.powf(qp);
        }
        series.push(t, vec![a1.powf(1.0 / qp), a2.powf(1.0 / qp)]);
    }
    Ok(series)
}

/// `-(N-1)/2 (1/p - 1/q)`, the `L_p -> L_q` heat-type decay exponent.
pub fn predicted_s1_exponent(n: usize, p: f64, q: f64) -> f64 {
    -0.5 * (n - 1) as f64 * (1.0 / p - 1.0 / q)
}

/// S_1 exponent with the extra `-(1/2)(1/2 - 1/q)` carried by the velocity.
pub fn predicted_s2_exponent(n: usize, p: f64, q: f64) -> f64 {
    predicted_s1_exponent(n, p, q) - 0.5 * (0.5 - 1.0 / q)
}

/// Which family of weighted norms to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Solution norm of `(eta, u)`.
    E,
    /// Data norm of `(d, f, g_tilde, g, h)`.
    F,
}

/// Exponents and window of a weighted norm `|<t>^a . |_{L_p(window, ...)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormSpec {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub window: (f64, f64),
}

/// Fields sampled at common times. Boundary fields carry one height field per component.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub boundary: BTreeMap<String, Vec<Vec<HeightField>>>,
    pub bulk: BTreeMap<String, Vec<BulkField>>,
}

impl Trajectory {
    fn boundary(&self, name: &str) -> Result<&Vec<Vec<HeightField>>> {
        self.boundary.get(name).ok_or_else(|| Error::MissingComponent(name.to_string()))
    }

    fn bulk(&self, name: &str) -> Result<&Vec<BulkField>> {
        self.bulk.get(name).ok_or_else(|| Error::MissingComponent(name.to_string()))
    }
}

/// Total and individual summands of a weighted norm.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedNormReport {
    pub total: f64,
    pub parts: Vec<(String, f64)>,
}

fn window_indices(times: &[f64], w: (f64, f64)) -> Vec<usize> {
    (0..times.len()).filter(|&i| times[i] >= w.0 - 1e-12 && times[i] <= w.1 + 1e-12).collect()
}

fn bulk_time_derivative(levels: &[BulkField], dt: f64, at: usize) -> BulkField {
    let n = levels.len();
    let comb = |w: &[(usize, f64)]| {
        let mut out = levels[0].map(|_| 0.0);
        for &(i, c) in w {
            for (o, v) in out.values.iter_mut().zip(&levels[i].values) {
                *o += c * v / dt;
            }
        }
        out
    };
    if n == 1 {
        comb(&[])
    } else if n == 2 {
        comb(&[(0, -1.0), (1, 1.0)])
    } else if at == 0 {
        comb(&[(0, -1.5), (1, 2.0), (2, -0.5)])
    } else if at == n - 1 {
        comb(&[(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)])
    } else {
        comb(&[(at - 1, -0.5), (at + 1, 0.5)])
    }
}

fn uniform_step(times: &[f64], idx: &[usize]) -> Result<f64> {
    if idx.len() < 2 {
        return Err(Error::HypothesisViolation("trajectory does not cover the window".into()));
    }
    let dt = times[idx[1]] - times[idx[0]];
    for w in idx.windows(2) {
        if ((times[w[1]] - times[w[0]]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::HypothesisViolation("weighted norms need a uniform time grid".into()));
        }
    }
    Ok(dt)
}

/// `L_p` in time of `|(1 + omega^2)^{1/4} E^e[w g]|_{L_q}`, with `E^e` the even extension of the
/// windowed series and the multiplier applied by FFT.
fn half_derivative_in_time(fields: &[BulkField], weights: &[f64], dt: f64, times: &[f64], p: f64, q: f64) -> Result<f64> {
    let n = fields.len();
    if n < 2 {
        return Ok(0.0);
    }
    let len = fields[0].values.len();
    let ext = 2 * n - 2;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(ext);
    let inv = planner.plan_fft_inverse(ext);
    let period = ext as f64 * dt;
    let mult: Vec<f64> = (0..ext)
        .map(|j| {
            let jj = if j <= ext / 2 { j as f64 } else { j as f64 - ext as f64 };
            let om = 2.0 * PI * jj / period;
            (1.0 + om * om).powf(0.25)
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..len)
        .into_par_iter()
        .map(|dof| {
            let mut buf: Vec<Complex64> = (0..ext)
                .map(|j| {
                    let i = if j < n { j } else { ext - j };
                    Complex64::new(weights[i] * fields[i].values[dof], 0.0)
                })
                .collect();
            fwd.process(&mut buf);
            for (b, m) in buf.iter_mut().zip(&mult) {
                *b *= m / ext as f64;
            }
            inv.process(&mut buf);
            buf[..n].iter().map(|z| z.re).collect()
        })
        .collect();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = fields[i].clone();
        for (dof, val) in f.values.iter_mut().enumerate() {
            *val = cols[dof][i];
        }
        g.push(norm_lq_bulk(&f, q)?);
    }
    Ok(lp_trapezoid(times, &g, p))
}

/// Weighted `E_{p,q}` or `F_{p,q}` norm of a trajectory with weight `<t>^a`.
///
/// `E` needs boundary `"eta"` and bulk `"u"`. `F` needs boundary `"d"`, `"h"` and bulk `"f"`,
/// `"g"`, `"g_tilde"`. Boundary data `h` enters the bulk norms through its Bessel extension.
pub fn eval_weighted_norms(traj: &Trajectory, spec: &WeightedNormSpec, kind: NormKind) -> Result<WeightedNormReport> {
    let idx = window_indices(&traj.times, spec.window);
    let dt = uniform_step(&traj.times, &idx)?;
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let w: Vec<f64> = times.iter().map(|&t| japanese(t).powf(spec.a)).collect();
    let (p, q) = (spec.p, spec.q);
    let lp = |vals: Vec<f64>| -> f64 {
        let g: Vec<f64> = vals.iter().zip(&w).map(|(v, wi)| v * wi).collect();
        lp_trapezoid(&times, &g, p)
    };
    let s_lo = SobolevOrder::Fractional(2.0 - 1.0 / q);
    let mut parts = Vec::new();
    match kind {
        NormKind::E => {
            let eta: Vec<HeightField> = traj.boundary("eta")?.iter().map(|c| c[0].clone()).collect();
            let u = traj.bulk("u")?;
            let dte = idx.iter().map(|&i| sobolev_height(&time_derivative(&eta, dt, i), q, s_lo)).collect::<Result<Vec<_>>>()?;
            let e3 = idx
                .iter()
                .map(|&i| sobolev_height(&eta[i], q, SobolevOrder::Fractional(3.0 - 1.0 / q)))
                .collect::<Result<Vec<_>>>()?;
            let dtu = idx.iter().map(|&i| norm_lq_bulk(&bulk_time_derivative(u, dt, i), q)).collect::<Result<Vec<_>>>()?;
            let uh2 = idx.iter().map(|&i| sobolev_bulk(&u[i], q, 2)).collect::<Result<Vec<_>>>()?;
            parts.push(("dt_eta".to_string(), lp(dte)));
            parts.push(("eta".to_string(), lp(e3)));
            parts.push(("dt_u".to_string(), lp(dtu)));
            parts.push(("u".to_string(), lp(uh2)));
        }
        NormKind::F => {
            let d = traj.boundary("d")?;
            let h = traj.boundary("h")?;
            let f = traj.bulk("f")?;
            let g = traj.bulk("g")?;
            let gt = traj.bulk("g_tilde")?;
            let v = f.first().map(|b| b.v.clone()).ok_or_else(|| Error::MissingComponent("f".into()))?;
            let hb: Vec<BulkField> = idx
                .iter()
                .map(|&i| Ok(BulkField::stack(&h[i].iter().map(|c| extend_b(c, &v)).collect::<Result<Vec<_>>>()?)))
                .collect::<Result<_>>()?;
            let dn = idx
                .iter()
                .map(|&i| Ok(d[i].iter().map(|c| sobolev_height(c, q, s_lo)).collect::<Result<Vec<_>>>()?.iter().sum()))
                .collect::<Result<Vec<f64>>>()?;
            let fl = idx.iter().map(|&i| norm_lq_bulk(&f[i], q)).collect::<Result<Vec<_>>>()?;
            let dtg = idx.iter().map(|&i| norm_lq_bulk(&bulk_time_derivative(gt, dt, i), q)).collect::<Result<Vec<_>>>()?;
            let gtl = idx.iter().map(|&i| norm_lq_bulk(&gt[i], q)).collect::<Result<Vec<_>>>()?;
            let gw: Vec<BulkField> = idx.iter().map(|&i| g[i].clone()).collect();
            let g_half = half_derivative_in_time(&gw, &w, dt, &times, p, q)?;
            let g1 = idx.iter().map(|&i| sobolev_bulk(&g[i], q, 1)).collect::<Result<Vec<_>>>()?;
            let h_half = half_derivative_in_time(&hb, &w, dt, &times, p, q)?;
            let h1 = hb.iter().map(|b| sobolev_bulk(b, q, 1)).collect::<Result<Vec<_>>>()?;
            parts.push(("d".to_string(), lp(dn)));
            parts.push(("f".to_string(), lp(fl)));
            parts.push(("dt_g_tilde".to_string(), lp(dtg)));
            parts.push(("g_tilde".to_string(), lp(gtl)));
            parts.push(("g_half".to_string(), g_half));
            parts.push(("g_h1".to_string(), lp(g1)));
            parts.push(("h_half".to_string(), h_half));
            parts.push(("h_h1".to_string(), lp(h1)));
        }
    }
    Ok(WeightedNormReport { total: parts.iter().map(|(_, v)| v).sum(), parts })
}

/// Convenience: finite differences of height levels on a uniform grid.
pub fn height_series_derivative(levels: &[HeightField], dt: f64) -> Vec<HeightField> {
    (0..levels.len()).map(|i| time_derivative(levels, dt, i)).collect()
}

/// `L_q` norms of a boundary series, one value per time.
pub fn boundary_lq_series(levels: &[HeightField], q: f64) -> Result<Vec<f64>> {
    levels.iter().map(|h| norm_lq_height(h, q)).collect()
}
