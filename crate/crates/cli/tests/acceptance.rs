//! One PASS/FAIL line per acceptance criterion, with the values behind it.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use surfflow::analysis::predicted_s1_exponent;
use surfflow::solver::{check_compatibility, compatibility_residuals};
use surfflow::spectral::{BulkField, HeightField};
use surfflow::stokes::{ResolventSector, StokesParams};
use surfflow::{Complex64 as C, Error};
use surfflow_cli::config::{Experiment, SimConfig};
use surfflow_cli::experiments::{consistency, convergence, decay, duhamel, resolvent, simulate};
use surfflow_cli::run_experiment;

struct Criterion {
    id: u32,
    title: &'static str,
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self { id, title, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.lines.push((ok, msg));
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let el = start.elapsed();
        self.check(el < limit, format!("runtime {:.1} s (limit {} s)", el.as_secs_f64(), limit.as_secs()));
    }

    fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|(ok, _)| *ok)
    }

    fn print(&self) {
        println!("{} criterion {:>2}: {}", if self.passed() { "PASS" } else { "FAIL" }, self.id, self.title);
        for (ok, msg) in &self.lines {
            println!("       [{}] {msg}", if *ok { "ok" } else { "xx" });
        }
    }
}

const PRM: StokesParams = StokesParams { mu: 1.0, c_g: 1.0, c_sigma: 1.0 };

fn extension_orders() -> Criterion {
    let mut c = Criterion::new(1, "extension residuals converge at order >= 1.8");
    let t = Instant::now();
    let (a, b) = convergence::extension_residuals(32, 4.0, &[64, 128, 256], 1).unwrap();
    c.check(a.min_order() >= 1.8, format!("Delta(A f): residuals {:?}, orders {:?}", a.errors, a.orders()));
    c.check(b.min_order() >= 1.8, format!("(1 - Delta)(B f): residuals {:?}, orders {:?}", b.errors, b.orders()));
    c.runtime(t, Duration::from_secs(10));
    c
}

fn divergence_orders() -> Criterion {
    let mut c = Criterion::new(2, "div G_tilde = G at order >= 1.8 on 10 random samples");
    let t = Instant::now();
    let mut worst = f64::INFINITY;
    for seed in 0..10 {
        let r = convergence::divergence_identity(3, 16, 3.0, &[33, 65, 129], 100 + seed).unwrap();
        worst = worst.min(r.min_order());
    }
    c.check(worst >= 1.8, format!("minimum order {worst:.3}"));
    c.runtime(t, Duration::from_secs(30));
    c
}

fn consistency_orders() -> Criterion {
    let mut c = Criterion::new(3, "flattened equations are consistent with the physical flow");
    let setup = consistency::ConsistencySetup::new(3);
    let (res, orders) = consistency::consistency_study(&setup, &[33, 65, 129]).unwrap();
    let names = ["kinematic", "momentum", "divergence", "stress"];
    for i in 0..4 {
        let finest = res[2].as_array()[i];
        if finest < 1e-12 {
            c.check(true, format!("{} line exact: residual {finest:.2e}", names[i]));
        } else {
            c.check(orders[i] >= 1.5, format!("{} line order {:.3} (need >= 1.5)", names[i], orders[i]));
        }
    }
    let defect = consistency::flat_convection_defect(&setup, 33).unwrap();
    c.check(defect < 1e-12, format!("F(0, u) + (u . grad) u = {defect:.2e}"));
    c
}

fn resolvent_checks() -> Criterion {
    let mut c = Criterion::new(4, "resolvent solve order and scale-independent sweep ratios");
    let t = Instant::now();
    let cases = [([1.0, 0.5, 0.0], C::new(1.0, 1.0)), ([0.05, 0.0, 0.0], C::new(0.3, 2.0)), ([6.0, -3.0, 0.0], C::new(10.0, -20.0))];
    for (xi, lambda) in cases {
        let r = resolvent::manufactured_order(xi, 2, lambda, PRM, 4.0, &[33, 65, 129, 257], 7).unwrap();
        c.check(r.min_order() >= 1.8, format!("xi' = {:?}, lambda = {lambda}: orders {:?}", &xi[..2], r.orders()));
    }
    let sector = ResolventSector::new(0.3, 0.5).unwrap();
    for k in [0.1, 1.0, 5.0] {
        let s = resolvent::resolvent_sweep(k, PRM, sector, 20, 4.0, 64, 3).unwrap();
        c.check(s.worst_change() < 2.0, format!("|xi'| = {k}: worst ratio change {:.4} under M_z doubling, sup {:.3}", s.worst_change(), s.sup()));
    }
    c.runtime(t, Duration::from_secs(60));
    c
}

fn elimination() -> Criterion {
    let mut c = Criterion::new(5, "reduced and monolithic solves agree to 1e-8");
    let d = resolvent::elimination_agreement(PRM, 4.0, 64, 5, 11).unwrap();
    let worst = d.iter().fold(0.0f64, |m, &x| m.max(x));
    c.check(worst < 1e-8, format!("largest relative difference {worst:.2e} over {} modes", d.len()));
    c
}

fn duhamel_checks() -> Criterion {
    let mut c = Criterion::new(6, "weighted Duhamel ratios are grid independent");
    let t = Instant::now();
    let delta = 1.0 / 30.0;
    let mut points = vec![(0.5, delta)];
    points.extend(duhamel::regime_points(delta));
    for (a, d) in points {
        let (base, fine) = duhamel::duhamel_check(&duhamel::DuhamelSetup::new(a, d, 31.0)).unwrap();
        let change = (fine.max_ratio / base.max_ratio - 1.0).abs();
        c.check(change < 0.01, format!("a = {a:.4}, delta = {d:.4}: max ratio {:.4}, change {change:.2e}", base.max_ratio));
    }
    c.runtime(t, Duration::from_secs(60));
    c
}

fn decay_checks() -> Criterion {
    let mut c = Criterion::new(7, "linear decay exponents");
    let t = Instant::now();
    for n in [3, 4] {
        let r = decay::decay_rates(n, 1.5, 6.0, PRM, (10.0, 1000.0)).unwrap();
        let pred = predicted_s1_exponent(n, 1.5, 6.0);
        c.check(
            (r.s1.0 - pred).abs() <= 0.1,
            format!("N = {n}: S1 exponent {:.3} +- {:.3}, predicted {pred:.3}", r.s1.0, r.s1.1),
        );
    }
    c.runtime(t, Duration::from_secs(300));
    c
}

fn nonlinear_checks() -> Criterion {
    let mut c = Criterion::new(8, "nonlinear run from a surface bump");
    let t = Instant::now();
    let cfg = SimConfig::default();
    let eps = cfg.initial.epsilon;
    let full = simulate::simulate(&cfg, eps).unwrap();
    c.check(full.result.failure.is_none(), format!("run completed: failure {:?}", full.result.failure.as_ref().map(|f| f.1.to_string())));
    c.check(full.max_picard_ratio < 0.5, format!("max Picard ratio {:.3e}", full.max_picard_ratio));
    c.check(full.min_jacobian >= 0.5, format!("min Jacobian {:.6}", full.min_jacobian));
    c.check(full.max_div_residual < 1e-6, format!("max divergence residual {:.2e}", full.max_div_residual));
    c.check(
        full.u_decay.0 <= -0.25,
        format!("u L2 decay exponent {:.3} +- {:.3} on [{}, {}]", full.u_decay.0, full.u_decay.1, cfg.norms.fit_start, cfg.norms.fit_end),
    );
    let half = simulate::simulate(&cfg, 0.5 * eps).unwrap();
    for (name, a, b) in [("u sup", full.u_sup_max, half.u_sup_max), ("eta sup", full.eta_sup_max, half.eta_sup_max)] {
        let r = a / b;
        c.check((r / 2.0 - 1.0).abs() <= 0.2, format!("{name} ratio eps / (eps/2) = {r:.4}"));
    }
    c.runtime(t, Duration::from_secs(600));
    c
}

fn compatibility_checks() -> Criterion {
    let mut c = Criterion::new(9, "compatibility of initial data");
    let cfg = SimConfig::default();
    let (h, v) = simulate::grids(&cfg).unwrap();
    let coef = simulate::solver_params(&cfg).coefficients();
    let eta0 = simulate::bump(&cfg, &h, cfg.initial.epsilon);
    let zero_u = BulkField::zeros(&h, &v, 3);
    let r = compatibility_residuals(&eta0, &zero_u, coef).unwrap();
    c.check(r.div_residual <= 1e-12 && r.stress_residual <= 1e-12, format!("(eta0, 0): residuals {:.1e}, {:.1e}", r.div_residual, r.stress_residual));

    // on a flat surface the residual is |div u| itself
    let l = cfg.domain.length();
    let (amp, kx) = (1e-3, 2.0 * PI * 3.0 / l);
    let u = BulkField::from_fn(&h, &v, 3, |x, _| vec![amp * (kx * x[0]).sin(), 0.0, 0.0]);
    let flat = HeightField::zeros(&h);
    let exact = amp * kx * (l * l * cfg.domain.depth / 2.0).sqrt();
    let r = compatibility_residuals(&flat, &u, coef).unwrap();
    let rel = (r.div_residual / exact - 1.0).abs();
    c.check(rel < 1e-12, format!("injected divergence: reported {:.15e}, exact {exact:.15e}", r.div_residual));
    match check_compatibility(&flat, &u, coef, 1e-12) {
        Err(Error::IncompatibleData { div, .. }) => c.check(div == r.div_residual, format!("IncompatibleData carries div {div:.6e}")),
        other => c.check(false, format!("expected IncompatibleData, got {other:?}")),
    }
    c
}

fn small_run(kind: Experiment) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.experiment.kind = kind;
    cfg.domain.points = 16;
    cfg.domain.m_z = 12;
    cfg.time.t_final = 2.0;
    cfg.time.record_every = 1;
    cfg.norms.fit_start = 0.4;
    cfg.norms.fit_end = 2.0;
    cfg.initial.epsilon = 1e-2;
    cfg
}

fn artifacts(cfg: &SimConfig, threads: usize) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(cfg, Some(dir.path()))).unwrap();
    let mut files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism_checks() -> Criterion {
    let mut c = Criterion::new(10, "identical artifacts across runs and thread counts");
    for kind in [Experiment::Simulate, Experiment::DuhamelCheck] {
        let cfg = small_run(kind);
        let a = artifacts(&cfg, 1);
        let b = artifacts(&cfg, 1);
        let d = artifacts(&cfg, 4);
        let names: Vec<_> = a.iter().map(|f| f.0.as_str()).collect();
        c.check(a.len() >= 2 && a == b, format!("{}: repeated run identical ({names:?})", kind.name()));
        c.check(a == d, format!("{}: 1 thread and 4 threads identical", kind.name()));
    }
    c
}

fn main() {
    let all = [
        extension_orders(),
        divergence_orders(),
        consistency_orders(),
        resolvent_checks(),
        elimination(),
        duhamel_checks(),
        decay_checks(),
        nonlinear_checks(),
        compatibility_checks(),
        determinism_checks(),
    ];
    for c in &all {
        c.print();
    }
    let failed: Vec<u32> = all.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
