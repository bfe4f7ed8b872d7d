use surfflow_cli::config::{Experiment, SimConfig};
use surfflow_cli::report::Relation;
use surfflow_cli::run_experiment;

fn tiny(kind: Experiment) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.experiment.kind = kind;
    cfg.domain.points = 8;
    cfg.domain.m_z = 8;
    cfg.time.t_final = 1.0;
    cfg.time.record_every = 1;
    cfg
}

#[test]
fn zero_data_simulation_gives_zero_norms() {
    let mut cfg = tiny(Experiment::Simulate);
    cfg.initial.epsilon = 0.0;
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.csv, vec!["simulate_norms.csv".to_string()]);
    let mut rd = csv::Reader::from_path(dir.path().join("simulate_norms.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "t");
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        for (name, v) in header.iter().zip(row.iter()).skip(1) {
            let v: f64 = v.parse().unwrap();
            match name.as_str() {
                "min_jacobian" => assert_eq!(v, 1.0),
                "diffeo_margin" | "picard_iters" => assert!(v >= 0.0),
                _ => assert_eq!(v, 0.0, "{name}"),
            }
        }
    }
    assert!(dir.path().join("simulate_report.json").exists());
}

#[test]
fn duhamel_report_lists_tolerances() {
    let cfg = tiny(Experiment::DuhamelCheck);
    let report = run_experiment(&cfg, None).unwrap();
    assert!(report.passed());
    assert_eq!(report.checks.len(), 4);
    for c in &report.checks {
        assert_eq!(c.criterion, 6);
        assert_eq!(c.relation, Relation::Below);
        assert_eq!(c.tolerance, 0.01);
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["experiment"], "duhamel-check");
    assert!(json["checks"][0]["tolerance"].is_number());
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = tiny(Experiment::Simulate);
    cfg.physics.mu = 0.0;
    let err = run_experiment(&cfg, None).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn oversized_bump_reports_failure() {
    let mut cfg = tiny(Experiment::Simulate);
    cfg.initial.epsilon = 40.0;
    cfg.initial.width = 1.0;
    let report = run_experiment(&cfg, None).unwrap();
    assert!(!report.passed());
    assert!(report.failure.is_some());
}
