//! Dispatch from a configuration to an experiment and its report.

use std::path::Path;

use surfflow::stokes::{ResolventSector, StokesParams};
use surfflow::Complex64 as C;

use crate::config::{Experiment, SimConfig};
use crate::error::CliError;
use crate::experiments::{consistency, convergence, decay, duhamel, resolvent, simulate};
use crate::report::{write_columns, write_series, Check, Fit, Relation, Report};

/// Depth and vertical nodes shared by the single-mode experiments.
const MODE_DEPTH: f64 = 4.0;
const MODE_NODES: usize = 64;

fn stokes_params(cfg: &SimConfig) -> StokesParams {
    StokesParams { mu: cfg.physics.mu, c_g: cfg.physics.c_g, c_sigma: cfg.physics.c_sigma }
}

fn csv_path(out: Option<&Path>, report: &mut Report, name: &str) -> Result<Option<std::path::PathBuf>, CliError> {
    let Some(dir) = out else { return Ok(None) };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
    let file = format!("{}_{name}.csv", report.experiment);
    report.csv.push(file.clone());
    Ok(Some(dir.join(file)))
}

/// Validate, run and report. Artifacts are written to `out` when given.
pub fn run_experiment(cfg: &SimConfig, out: Option<&Path>) -> Result<Report, CliError> {
    let warnings = cfg.validate()?;
    let kind = cfg.experiment.kind;
    let mut report = Report::new(kind.name(), cfg, warnings);
    let outcome = match kind {
        Experiment::Simulate => run_simulate(cfg, out, &mut report),
        Experiment::LinearDecay => run_decay(cfg, out, &mut report),
        Experiment::DuhamelCheck => run_duhamel(cfg, out, &mut report),
        Experiment::ResolventSweep => run_resolvent(cfg, out, &mut report),
        Experiment::ConvergenceStudy => run_convergence(cfg, out, &mut report),
        Experiment::ConsistencyCheck => run_consistency(cfg, out, &mut report),
    };
    match outcome {
        Ok(()) => {}
        // numerical failures end up in the report rather than aborting it
        Err(CliError::Solver(e)) => report.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}

fn run_simulate(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let o = simulate::simulate(cfg, cfg.initial.epsilon)?;
    if let Some(path) = csv_path(out, report, "norms")? {
        write_series(&path, &o.result.state.norm_log)?;
    }
    if let Some((t, e)) = &o.result.failure {
        report.failure = Some(format!("stopped at t = {t}: {e}"));
    }
    report.checks.push(Check::new(8, "max Picard ratio", o.max_picard_ratio, Relation::Below, 0.5));
    report.checks.push(Check::new(8, "min Jacobian", o.min_jacobian, Relation::AtLeast, 0.5));
    report.checks.push(Check::new(8, "max divergence residual", o.max_div_residual, Relation::Below, 1e-6));
    if o.u_decay.0.is_finite() {
        report.checks.push(Check::new(8, "u L2 decay exponent", o.u_decay.0, Relation::AtMost, -0.25));
        report.fits.push(Fit {
            series: "u_l2".into(),
            window: (cfg.norms.fit_start, cfg.norms.fit_end),
            exponent: o.u_decay.0,
            stderr: o.u_decay.1,
        });
    }
    report.values.push(("u_sup_max".into(), o.u_sup_max));
    report.values.push(("eta_sup_max".into(), o.eta_sup_max));
    if let Some(e) = o.energy_norm {
        report.values.push(("weighted_solution_norm".into(), e));
    }
    Ok(())
}

fn run_decay(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let w = (cfg.norms.decay_window[0], cfg.norms.decay_window[1]);
    let r = decay::decay_rates(cfg.domain.n, cfg.norms.decay_p, cfg.norms.decay_q, stokes_params(cfg), w)?;
    if let Some(path) = csv_path(out, report, "series")? {
        write_series(&path, &r.series)?;
    }
    report.checks.push(Check::within(7, "S1 exponent", r.s1.0, r.predicted_s1, 0.1));
    report.checks.push(Check::within(7, "S2 exponent", r.s2.0, r.predicted_s2, 0.1));
    for (name, (e, s)) in [("s1", r.s1), ("s2", r.s2)] {
        report.fits.push(Fit { series: name.into(), window: w, exponent: e, stderr: s });
    }
    Ok(())
}

fn run_duhamel(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let ex = &cfg.experiment;
    let mut points = vec![(ex.a, ex.delta)];
    points.extend(duhamel::regime_points(ex.delta));
    let mut cols = vec![Vec::new(); 5];
    for (a, delta) in points {
        let (base, fine) = duhamel::duhamel_check(&duhamel::DuhamelSetup::new(a, delta, cfg.norms.p))?;
        let change = if base.vacuous { 0.0 } else { (fine.max_ratio / base.max_ratio - 1.0).abs() };
        let label = format!("a={a:.4} delta={delta:.4}");
        report.checks.push(Check::new(6, format!("{label} grid change"), change, Relation::Below, 0.01));
        report.values.push((format!("{label} max ratio"), base.max_ratio));
        for (c, v) in cols.iter_mut().zip([a, delta, base.max_ratio, fine.max_ratio, change]) {
            c.push(v);
        }
    }
    if let Some(path) = csv_path(out, report, "ratios")? {
        write_columns(&path, &["a", "delta", "max_ratio", "max_ratio_fine", "change"], &cols)?;
    }
    Ok(())
}

fn run_resolvent(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let prm = stokes_params(cfg);
    let seed = cfg.initial.seed;
    let cases = [([1.0, 0.5, 0.0], C::new(1.0, 1.0)), ([0.05, 0.0, 0.0], C::new(0.3, 2.0)), ([6.0, -3.0, 0.0], C::new(10.0, -20.0))];
    for (xi, lambda) in cases {
        let r = resolvent::manufactured_order(xi, 2, lambda, prm, MODE_DEPTH, &[33, 65, 129, 257], seed)?;
        report.checks.push(Check::new(4, format!("manufactured order |xi'| = {:.3}", (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()), r.min_order(), Relation::AtLeast, 1.8));
    }
    let sector = ResolventSector::new(0.3, 0.5 + cfg.time.gamma_shift)?;
    let mut cols = vec![Vec::new(); 5];
    for k in [0.1, 1.0, 5.0] {
        let s = resolvent::resolvent_sweep(k, prm, sector, cfg.experiment.sweep_points, MODE_DEPTH, MODE_NODES, seed)?;
        report.checks.push(Check::new(4, format!("sweep ratio change k = {k}"), s.worst_change(), Relation::Below, 2.0));
        report.values.push((format!("sweep sup ratio k = {k}"), s.sup()));
        for ((l, a), b) in s.lambdas.iter().zip(&s.coarse).zip(&s.fine) {
            for (c, v) in cols.iter_mut().zip([k, l.re, l.im, *a, *b]) {
                c.push(v);
            }
        }
    }
    if let Some(path) = csv_path(out, report, "sweep")? {
        write_columns(&path, &["k", "re_lambda", "im_lambda", "ratio", "ratio_fine"], &cols)?;
    }
    let diffs = resolvent::elimination_agreement(prm, MODE_DEPTH, MODE_NODES, cfg.experiment.samples.min(5).max(1), seed)?;
    let worst = diffs.iter().fold(0.0f64, |m, &x| m.max(x));
    report.checks.push(Check::new(5, "reduced vs monolithic", worst, Relation::Below, 1e-8));
    Ok(())
}

fn run_convergence(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let seed = cfg.initial.seed;
    let (a, b) = convergence::extension_residuals(32, 4.0, &[64, 128, 256], seed)?;
    report.checks.push(Check::new(1, "extension A order", a.min_order(), Relation::AtLeast, 1.8));
    report.checks.push(Check::new(1, "extension B order", b.min_order(), Relation::AtLeast, 1.8));
    let mut cols = vec![Vec::new(); 4];
    let mut worst = f64::INFINITY;
    for s in 0..cfg.experiment.samples as u64 {
        let r = convergence::divergence_identity(cfg.domain.n, 16, 3.0, &[33, 65, 129], seed + s)?;
        worst = worst.min(r.min_order());
        for (l, e) in r.levels.iter().zip(&r.errors) {
            for (c, v) in cols.iter_mut().zip([(seed + s) as f64, *l as f64, *e, r.min_order()]) {
                c.push(v);
            }
        }
    }
    report.checks.push(Check::new(2, "divergence identity order", worst, Relation::AtLeast, 1.8));
    if let Some(path) = csv_path(out, report, "divergence")? {
        write_columns(&path, &["seed", "m_z", "residual", "order"], &cols)?;
    }
    Ok(())
}

fn run_consistency(cfg: &SimConfig, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let setup = consistency::ConsistencySetup::new(cfg.domain.n);
    let levels = [33, 65, 129];
    let (res, orders) = consistency::consistency_study(&setup, &levels)?;
    let names = ["kinematic", "momentum", "divergence", "stress"];
    for (i, name) in names.iter().enumerate() {
        let finest = res.last().map_or(0.0, |r| r.as_array()[i]);
        if finest < 1e-12 {
            // exact on every level, so no order is defined
            report.checks.push(Check::new(3, format!("{name} residual"), finest, Relation::Below, 1e-12));
        } else {
            report.checks.push(Check::new(3, format!("{name} order"), orders[i], Relation::AtLeast, 1.5));
        }
    }
    let defect = consistency::flat_convection_defect(&setup, 33)?;
    report.checks.push(Check::new(3, "F(0, u) + (u . grad) u", defect, Relation::Below, 1e-12));
    if let Some(path) = csv_path(out, report, "residuals")? {
        let mut cols = vec![levels.iter().map(|&l| l as f64).collect::<Vec<_>>()];
        for i in 0..4 {
            cols.push(res.iter().map(|r| r.as_array()[i]).collect());
        }
        write_columns(&path, &["m_z", names[0], names[1], names[2], names[3]], &cols)?;
    }
    Ok(())
}
