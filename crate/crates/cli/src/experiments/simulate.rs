//! Nonlinear runs from a Gaussian surface bump.

use surfflow::analysis::{eval_weighted_norms, fit_decay_exponent, NormKind, Trajectory, WeightedNormSpec};
use surfflow::solver::{check_compatibility, run_simulation, SimulationResult, SolverParams};
use surfflow::spectral::{BulkField, HeightField, HorizontalGrid, VerticalGrid};
use surfflow::Result;

use crate::config::SimConfig;

pub fn grids(cfg: &SimConfig) -> Result<(HorizontalGrid, VerticalGrid)> {
    let d = &cfg.domain;
    Ok((HorizontalGrid::for_dimension(d.n, d.length(), d.points)?, VerticalGrid::new(d.depth, d.m_z)?))
}

pub fn solver_params(cfg: &SimConfig) -> SolverParams {
    SolverParams {
        n: cfg.domain.n,
        mu: cfg.physics.mu,
        c_g: cfg.physics.c_g,
        c_sigma: cfg.physics.c_sigma,
        sigma: cfg.sigma(),
        dt: cfg.time.dt,
        t_final: cfg.time.t_final,
        gamma: cfg.time.gamma_shift,
        picard_min_iters: cfg.picard.min_iters,
        picard_max_iters: cfg.picard.max_iters,
        picard_tol: cfg.picard.tol,
        record_every: cfg.time.record_every,
        q: cfg.norms.q1,
        elimination: cfg.elimination(),
        integrator: cfg.integrator(),
    }
}

/// `eps exp(-|x' - c|^2 / w^2)` centred in the torus.
pub fn bump(cfg: &SimConfig, h: &HorizontalGrid, epsilon: f64) -> HeightField {
    let c = 0.5 * cfg.domain.length();
    let w2 = cfg.initial.width * cfg.initial.width;
    let dims = cfg.domain.n - 1;
    HeightField::from_fn(h, |x| {
        let r2: f64 = x.iter().take(dims).map(|xi| (xi - c) * (xi - c)).sum();
        epsilon * (-r2 / w2).exp()
    })
}

/// Outcome of one run together with its derived quantities.
pub struct SimulationOutcome {
    pub result: SimulationResult,
    pub max_picard_ratio: f64,
    pub min_jacobian: f64,
    pub max_div_residual: f64,
    /// Exponent and standard error of `|u|_{L2}` over the fit window.
    pub u_decay: (f64, f64),
    pub u_sup_max: f64,
    pub eta_sup_max: f64,
    /// Weighted solution norm over the recorded levels, if they cover the window.
    pub energy_norm: Option<f64>,
}

fn column_max(result: &SimulationResult, name: &str) -> f64 {
    result.state.norm_log.column(name).unwrap_or_default().iter().fold(0.0, |m, &x| m.max(x))
}

pub fn simulate(cfg: &SimConfig, epsilon: f64) -> Result<SimulationOutcome> {
    let (h, v) = grids(cfg)?;
    let params = solver_params(cfg);
    let eta0 = bump(cfg, &h, epsilon);
    let u0 = BulkField::zeros(&h, &v, cfg.domain.n);
    check_compatibility(&eta0, &u0, params.coefficients(), 1e-12)?;
    let result = run_simulation(&params, &h, &v, &eta0, &u0)?;
    let steps = &result.steps;
    let max_picard_ratio = steps.iter().flat_map(|s| s.ratios.iter().copied()).fold(0.0, f64::max);
    let min_jacobian = steps.iter().map(|s| s.min_jacobian).fold(f64::INFINITY, f64::min);
    let max_div_residual = steps.iter().map(|s| s.div_residual).fold(0.0, f64::max);
    let log = &result.state.norm_log;
    let end = cfg.norms.fit_end.min(log.times.last().copied().unwrap_or(0.0));
    let u_decay = if epsilon > 0.0 && end > cfg.norms.fit_start {
        fit_decay_exponent(log, "u_l2", (cfg.norms.fit_start, end))?
    } else {
        (f64::NAN, f64::NAN)
    };
    let mut traj = Trajectory { times: result.state.times.clone(), ..Default::default() };
    traj.boundary.insert("eta".into(), result.state.eta.iter().map(|e| vec![e.clone()]).collect());
    traj.bulk.insert("u".into(), result.state.u.clone());
    let spec = WeightedNormSpec {
        p: cfg.norms.p,
        q: cfg.norms.q1,
        a: cfg.experiment.a,
        window: (0.0, result.state.times.last().copied().unwrap_or(0.0)),
    };
    let energy_norm = eval_weighted_norms(&traj, &spec, NormKind::E).ok().map(|r| r.total);
    Ok(SimulationOutcome {
        u_sup_max: column_max(&result, "u_sup"),
        eta_sup_max: column_max(&result, "eta_sup"),
        result,
        max_picard_ratio,
        min_jacobian,
        max_div_residual,
        u_decay,
        energy_norm,
    })
}
