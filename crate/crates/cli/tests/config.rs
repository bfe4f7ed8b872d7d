use surfflow_cli::config::{apply_overrides, parse_config, parse_config_str, Experiment, SimConfig, Q1_MAX};
use surfflow_cli::CliError;

#[test]
fn minimal_file_gives_defaults() {
    let cfg = parse_config_str("[domain]\nn = 3\n").unwrap();
    assert_eq!(cfg, SimConfig::default());
    assert!(cfg.validate().unwrap().is_empty());
    assert_eq!(cfg.sigma(), cfg.physics.c_sigma);
}

#[test]
fn empty_file_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "").unwrap();
    assert_eq!(parse_config(&path).unwrap(), SimConfig::default());
}

#[test]
fn negative_surface_tension_names_positivity() {
    let cfg = parse_config_str("[physics]\nc_sigma = -1.0\n").unwrap();
    match cfg.validate() {
        Err(CliError::Validation(errs)) => {
            assert_eq!(errs.len(), 1);
            assert!(errs[0].contains("c_sigma") && errs[0].contains("positivity"), "{errs:?}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
}

#[test]
fn large_q1_warns() {
    let cfg = parse_config_str("[norms]\nq1 = 2.3\n").unwrap();
    let w = cfg.validate().unwrap();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("exceeds 2+q0"), "{w:?}");
    assert!((Q1_MAX - 20.0 / 9.0).abs() < 1e-15);
}

#[test]
fn trace_condition_is_a_warning() {
    // 2/p + 2/q1 = 1
    let cfg = parse_config_str("[norms]\np = 22.0\nq1 = 2.2\n").unwrap();
    let w = cfg.validate().unwrap();
    assert!(w.iter().any(|s| s.contains("trace condition")), "{w:?}");
}

#[test]
fn small_q2_warns() {
    let cfg = parse_config_str("[norms]\nq2 = 3.0\n").unwrap();
    assert!(cfg.validate().unwrap().iter().any(|s| s.contains("q2")));
}

#[test]
fn parse_errors_carry_location() {
    let err = parse_config_str("[domain]\npoints = \"many\"\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 2") && msg.contains("points"), "{msg}");
    assert_eq!(err.exit_code(), 2);
    assert!(parse_config_str("[domain]\nbogus = 1\n").is_err());
}

#[test]
fn overrides_replace_single_keys() {
    let cfg = apply_overrides(
        &SimConfig::default(),
        &["domain.points=48".into(), "time.integrator=crank-nicolson".into(), "experiment.kind=linear-decay".into()],
    )
    .unwrap();
    assert_eq!(cfg.domain.points, 48);
    assert_eq!(cfg.experiment.kind, Experiment::LinearDecay);
    assert_eq!(cfg.integrator(), surfflow::stokes::Integrator::CrankNicolson);
    assert!(apply_overrides(&cfg, &["points=3".into()]).is_err());
    assert!(apply_overrides(&cfg, &["nowhere.points=3".into()]).is_err());
}

#[test]
fn sigma_override() {
    let cfg = parse_config_str("[physics]\nc_sigma = 2.0\nsigma = 0.5\n").unwrap();
    assert_eq!(cfg.sigma(), 0.5);
}
