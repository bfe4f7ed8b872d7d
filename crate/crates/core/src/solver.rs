//! Small-data time marching of the flattened nonlinear system.
//!
//! Each time step freezes the nonlinear terms at the current iterate, performs one implicit
//! linear step and repeats until successive iterates agree.

use crate::analysis::NormSeries;
use crate::error::{Error, Result};
use crate::geometry::{build_transform, TransformState};
use crate::nonlinear::{rhs_bundle, term_g, term_h, Coefficients, RhsBundle};
use crate::spectral::{
    divergence, forward_bulk, forward_height, gradient, height_derivative, inverse_bulk, inverse_height,
    norm_lq_bulk, norm_lq_height, sobolev_bulk, sobolev_height, BulkField, HeightField, HorizontalGrid,
    SobolevOrder, VerticalGrid,
};
use crate::stokes::{Elimination, Integrator, LinearState, LinearStepper, SpectralRhs, StokesParams};

/// Tolerances and discretisation of a nonlinear run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub n: usize,
    pub mu: f64,
    pub c_g: f64,
    pub c_sigma: f64,
    /// Coefficient of the curvature term in `H`; normally equal to `c_sigma`.
    pub sigma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub gamma: f64,
    /// Minimum number of Picard iterations per step.
    pub picard_min_iters: usize,
    pub picard_max_iters: usize,
    /// Relative tolerance on the gap between successive iterates.
    pub picard_tol: f64,
    /// Keep every `record_every`-th field level in the history (the norm log keeps all).
    pub record_every: usize,
    /// Exponent `q` of the spatial norms in the log.
    pub q: f64,
    pub elimination: Elimination,
    /// With Crank-Nicolson the forcing is averaged between the two time levels.
    pub integrator: Integrator,
}

impl SolverParams {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients { mu: self.mu, sigma: self.sigma }
    }

    pub fn stokes(&self) -> StokesParams {
        StokesParams { mu: self.mu, c_g: self.c_g, c_sigma: self.c_sigma }
    }
}

/// Residuals of the two compatibility conditions on the initial data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompatibilityReport {
    /// `|div u_0 - G(eta_0, u_0)|_{L2}`.
    pub div_residual: f64,
    /// `|(mu D(u_0) e_N - H(eta_0, u_0))_tau|_{L2}` on the surface.
    pub stress_residual: f64,
}

/// Compatibility residuals without judging them.
pub fn compatibility_residuals(
    eta0: &HeightField,
    u0: &BulkField,
    coef: Coefficients,
) -> Result<CompatibilityReport> {
    eta0.check_finite()?;
    u0.check_finite()?;
    let n = u0.ncomp;
    let zero = HeightField::zeros(&eta0.grid);
    let ts = build_transform(eta0, &zero, n, &u0.v)?;
    let (g, _) = term_g(u0, &ts)?;
    let div = divergence(u0)?;
    let div_residual = norm_lq_bulk(&div.sub(&g), 2.0)?;
    let h = term_h(u0, &ts, coef)?;
    let grad = gradient(u0)?;
    let top = u0.nz() - 1;
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let mut r = HeightField::zeros(&eta0.grid);
        for ih in 0..u0.nh() {
            let s = coef.mu * (grad.get(j * n + n - 1, ih, top) + grad.get((n - 1) * n + j, ih, top));
            r.values[ih] = s - h[j].values[ih];
        }
        acc += norm_lq_height(&r, 2.0)?.powi(2);
    }
    Ok(CompatibilityReport { div_residual, stress_residual: acc.sqrt() })
}

/// [`compatibility_residuals`] failing with `IncompatibleData` above `tol`.
pub fn check_compatibility(
    eta0: &HeightField,
    u0: &BulkField,
    coef: Coefficients,
    tol: f64,
) -> Result<CompatibilityReport> {
    let r = compatibility_residuals(eta0, u0, coef)?;
    if r.div_residual > tol || r.stress_residual > tol {
        return Err(Error::IncompatibleData { div: r.div_residual, stress: r.stress_residual });
    }
    Ok(r)
}

/// Diagnostics of one accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    /// Successive-gap ratios `gap_k / gap_{k-1}`.
    pub ratios: Vec<f64>,
    pub final_gap: f64,
    pub diffeo_margin: f64,
    pub min_jacobian: f64,
    /// `|div u - div G_tilde(eta, u)|_{L2} / |grad u|_{L2}` (zero when `u = 0`).
    pub div_residual: f64,
    /// `|div u - G(eta, u)|_{L2}`, the continuum identity evaluated on the grid.
    pub div_identity_residual: f64,
}

/// Fields at the current time, with the previous height level for `d_t E eta`.
#[derive(Clone, Debug)]
pub struct StepState {
    pub t: f64,
    pub eta: HeightField,
    pub eta_prev: Option<HeightField>,
    pub u: BulkField,
    pub p: BulkField,
    /// Forcing at the accepted level, kept for Crank-Nicolson averaging.
    pub forcing: Option<SpectralRhs>,
}

/// Accepted history of a run.
#[derive(Clone, Debug, Default)]
pub struct SolverState {
    pub times: Vec<f64>,
    pub eta: Vec<HeightField>,
    pub u: Vec<BulkField>,
    pub p: Vec<BulkField>,
    pub norm_log: NormSeries,
    /// Largest Picard ratio of each step.
    pub picard_residuals: Vec<f64>,
}

/// Picard driver holding the factored linear operator.
pub struct PicardSolver {
    pub params: SolverParams,
    pub h: HorizontalGrid,
    pub v: VerticalGrid,
    stepper: LinearStepper,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// The linear solver carries no Nyquist modes, so the discrete constraint is checked
/// against data without them.
fn drop_nyquist(f: &BulkField) -> Result<BulkField> {
    let mut s = forward_bulk(f)?;
    let nh = f.nh();
    for c in 0..f.ncomp {
        for mode in (0..nh).filter(|&m| f.h.is_nyquist(m)) {
            s.column_mut(c, mode).fill(Default::default());
        }
    }
    Ok(inverse_bulk(&s))
}

fn physical(state: &LinearState) -> (HeightField, BulkField, BulkField) {
    (inverse_height(&state.eta), inverse_bulk(&state.u), inverse_bulk(&state.p))
}

impl PicardSolver {
    pub fn new(params: SolverParams, h: &HorizontalGrid, v: &VerticalGrid) -> Result<Self> {
        if h.dim() != params.n {
            return Err(Error::GridMismatch("grid dimension differs from N"));
        }
        if !(params.mu > 0.0 && params.c_g > 0.0 && params.c_sigma > 0.0) {
            return Err(Error::HypothesisViolation("mu, c_g and c_sigma must be positive".into()));
        }
        let stepper = LinearStepper::new(
            h,
            v,
            params.stokes(),
            params.dt,
            params.gamma,
            params.integrator,
            params.elimination,
        )?;
        Ok(Self { params, h: h.clone(), v: v.clone(), stepper })
    }

    fn transform(&self, theta: &HeightField, state: &StepState) -> Result<TransformState> {
        let dt = self.params.dt;
        let dte = match &state.eta_prev {
            Some(prev) => {
                let mut d = HeightField::zeros(&theta.grid);
                for (((o, a), b), c) in d.values.iter_mut().zip(&theta.values).zip(&state.eta.values).zip(&prev.values) {
                    *o = (1.5 * a - 2.0 * b + 0.5 * c) / dt;
                }
                d
            }
            None => theta.axpy(-1.0, &state.eta).scaled(1.0 / dt),
        };
        build_transform(theta, &dte, self.params.n, &self.v)
    }

    fn bundle(&self, theta: &HeightField, v: &BulkField, state: &StepState) -> Result<(RhsBundle, TransformState)> {
        let ts = self.transform(theta, state)?;
        let dt_v = v.sub(&state.u).scaled(1.0 / self.params.dt);
        Ok((rhs_bundle(v, &dt_v, &ts, self.params.coefficients())?, ts))
    }

    /// One time step with at least `picard_min_iters` inner iterations.
    pub fn picard_step(&self, state: &StepState) -> Result<(StepState, StepInfo)> {
        let prm = &self.params;
        let lin = LinearState {
            eta: forward_height(&state.eta)?,
            u: forward_bulk(&state.u)?,
            p: forward_bulk(&state.p)?,
        };
        let scale = 1.0 + state.eta.max_abs().max(state.u.max_abs());
        let mut theta = state.eta.clone();
        let mut vel = state.u.clone();
        let mut ratios = Vec::new();
        let mut prev_gap: Option<f64> = None;
        let mut streak = 0;
        let mut iters = 0;
        let mut pres;
        let mut gap;
        let mut last;
        let cn = prm.integrator == Integrator::CrankNicolson;
        let start = match (&state.forcing, cn) {
            (Some(f), true) => Some(f.clone()),
            (None, true) => Some(SpectralRhs::from_bundle(&self.bundle(&state.eta, &state.u, state)?.0)?),
            _ => None,
        };
        loop {
            let (bundle, _) = self.bundle(&theta, &vel, state)?;
            last = SpectralRhs::from_bundle(&bundle)?;
            let forcing = match &start {
                Some(f0) => last.midpoint(f0),
                None => last.clone(),
            };
            let next = self.stepper.step(&lin, &forcing)?;
            let (e1, u1, p1) = physical(&next);
            e1.check_finite()?;
            u1.check_finite()?;
            gap = max_abs_diff(&e1.values, &theta.values).max(max_abs_diff(&u1.values, &vel.values));
            iters += 1;
            if let Some(g0) = prev_gap {
                let r = if g0 > 0.0 { gap / g0 } else { 0.0 };
                ratios.push(r);
                streak = if r >= 1.0 { streak + 1 } else { 0 };
                if streak >= 3 {
                    return Err(Error::PicardDivergence { ratios });
                }
            }
            prev_gap = Some(gap);
            theta = e1;
            vel = u1;
            pres = p1;
            let converged = gap <= prm.picard_tol * scale;
            if iters >= prm.picard_min_iters && converged {
                break;
            }
            if iters >= prm.picard_max_iters {
                if converged || gap == 0.0 {
                    break;
                }
                return Err(Error::PicardDivergence { ratios });
            }
        }
        let next = StepState {
            t: state.t + prm.dt,
            eta: theta,
            eta_prev: Some(state.eta.clone()),
            u: vel,
            p: pres,
            forcing: if cn { Some(last) } else { None },
        };
        let ts = self.transform(&next.eta, state)?;
        let (g, gt) = term_g(&next.u, &ts)?;
        let div = divergence(&next.u)?;
        let div_gt = divergence(&drop_nyquist(&gt)?)?;
        let grad_norm = norm_lq_bulk(&gradient(&next.u)?, 2.0)?;
        let disc = norm_lq_bulk(&div.sub(&div_gt), 2.0)?;
        let info = StepInfo {
            iterations: iters,
            ratios,
            final_gap: gap,
            diffeo_margin: ts.diffeo_margin(),
            min_jacobian: ts.min_jacobian(),
            div_residual: if grad_norm > 0.0 { disc / grad_norm } else { 0.0 },
            div_identity_residual: norm_lq_bulk(&div.sub(&g), 2.0)?,
        };
        Ok((next, info))
    }
}

/// Column names of the per-step norm log.
pub const LOG_COLUMNS: [&str; 15] = [
    "dt_eta_w2",
    "eta_w3",
    "dt_u_lq",
    "u_h2",
    "eta_sup",
    "u_sup",
    "u_l2",
    "grad_u_l2",
    "energy",
    "diffeo_margin",
    "min_jacobian",
    "picard_ratio",
    "picard_iters",
    "div_residual",
    "div_identity_residual",
];

/// Spatial norms of one state; `dt_eta`, `dt_u` are backward differences.
fn log_row(
    prm: &SolverParams,
    prev: &StepState,
    next: &StepState,
    info: Option<&StepInfo>,
) -> Result<Vec<f64>> {
    let q = prm.q;
    let dt = prm.dt;
    let dte = next.eta.axpy(-1.0, &prev.eta).scaled(1.0 / dt);
    let dtu = next.u.sub(&prev.u).scaled(1.0 / dt);
    let eta = &next.eta;
    let u = &next.u;
    let mut energy = 0.5 * norm_lq_bulk(u, 2.0)?.powi(2) + 0.5 * prm.c_g * norm_lq_height(eta, 2.0)?.powi(2);
    for a in 0..eta.grid.dim_h() {
        energy += 0.5 * prm.c_sigma * norm_lq_height(&height_derivative(eta, a)?, 2.0)?.powi(2);
    }
    let (ratio, iters, margin, minj, divr, divi) = match info {
        Some(i) => (
            i.ratios.iter().fold(0.0f64, |m, &r| m.max(r)),
            i.iterations as f64,
            i.diffeo_margin,
            i.min_jacobian,
            i.div_residual,
            i.div_identity_residual,
        ),
        None => (0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
    };
    Ok(vec![
        sobolev_height(&dte, q, SobolevOrder::Fractional(2.0 - 1.0 / q))?,
        sobolev_height(eta, q, SobolevOrder::Fractional(3.0 - 1.0 / q))?,
        norm_lq_bulk(&dtu, q)?,
        sobolev_bulk(u, q, 2)?,
        eta.max_abs(),
        u.max_abs(),
        norm_lq_bulk(u, 2.0)?,
        norm_lq_bulk(&gradient(u)?, 2.0)?,
        energy,
        margin,
        minj,
        ratio,
        iters,
        divr,
        divi,
    ])
}

/// Result of [`run_simulation`]; on failure the history up to `failure.0` is kept.
#[derive(Debug)]
pub struct SimulationResult {
    pub state: SolverState,
    pub steps: Vec<StepInfo>,
    pub failure: Option<(f64, Error)>,
}

/// March from `(eta0, u0)` to `t_final`. Compatibility of the data is the caller's business
/// (see [`check_compatibility`]); the diffeomorphism bound is checked at every iterate.
pub fn run_simulation(
    params: &SolverParams,
    h: &HorizontalGrid,
    v: &VerticalGrid,
    eta0: &HeightField,
    u0: &BulkField,
) -> Result<SimulationResult> {
    let solver = PicardSolver::new(params.clone(), h, v)?;
    let zero = HeightField::zeros(h);
    let ts0 = build_transform(eta0, &zero, params.n, v)?;
    let mut state = StepState {
        t: 0.0,
        eta: eta0.clone(),
        eta_prev: None,
        u: u0.clone(),
        p: BulkField::zeros(h, v, 1),
        forcing: None,
    };
    let mut out = SolverState { norm_log: NormSeries::new(&LOG_COLUMNS), ..Default::default() };
    let record = params.record_every.max(1);
    let mut row0 = log_row(params, &state, &state, None)?;
    row0[9] = ts0.diffeo_margin();
    row0[10] = ts0.min_jacobian();
    out.norm_log.push(0.0, row0);
    out.times.push(0.0);
    out.eta.push(state.eta.clone());
    out.u.push(state.u.clone());
    out.p.push(state.p.clone());
    let steps_total = (params.t_final / params.dt).round() as usize;
    let mut steps = Vec::with_capacity(steps_total);
    let mut failure = None;
    for k in 1..=steps_total {
        match solver.picard_step(&state) {
            Ok((next, info)) => {
                let row = log_row(params, &state, &next, Some(&info))?;
                out.norm_log.push(next.t, row);
                out.picard_residuals.push(info.ratios.iter().fold(0.0f64, |m, &r| m.max(r)));
                if k % record == 0 {
                    out.times.push(next.t);
                    out.eta.push(next.eta.clone());
                    out.u.push(next.u.clone());
                    out.p.push(next.p.clone());
                }
                steps.push(info);
                state = next;
            }
            Err(e) => {
                failure = Some((state.t, e));
                break;
            }
        }
    }
    Ok(SimulationResult { state: out, steps, failure })
}
