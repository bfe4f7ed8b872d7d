//! Sectioned `key = value` configuration (TOML syntax) with defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use surfflow::stokes::{Elimination, Integrator};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    LinearDecay,
    DuhamelCheck,
    ResolventSweep,
    ConvergenceStudy,
    ConsistencyCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::LinearDecay => "linear-decay",
            Experiment::DuhamelCheck => "duhamel-check",
            Experiment::ResolventSweep => "resolvent-sweep",
            Experiment::ConvergenceStudy => "convergence-study",
            Experiment::ConsistencyCheck => "consistency-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Domain {
    pub n: usize,
    /// Side of the horizontal torus divided by `2 pi`.
    pub periods: f64,
    /// Horizontal points per direction (M).
    pub points: usize,
    /// Depth H of the truncated layer.
    pub depth: f64,
    /// Vertical nodes (M_z).
    pub m_z: usize,
}

impl Default for Domain {
    fn default() -> Self {
        Self { n: 3, periods: 16.0, points: 32, depth: 16.0, m_z: 24 }
    }
}

impl Domain {
    pub fn length(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.periods
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub mu: f64,
    pub c_g: f64,
    pub c_sigma: f64,
    /// Coefficient of the curvature term; defaults to `c_sigma`.
    pub sigma: Option<f64>,
}

impl Default for Physics {
    fn default() -> Self {
        Self { mu: 1.0, c_g: 1.0, c_sigma: 1.0, sigma: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EliminationName {
    Monolithic,
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Time {
    pub dt: f64,
    pub t_final: f64,
    pub integrator: IntegratorName,
    pub gamma_shift: f64,
    /// Keep every n-th field level for the weighted norms.
    pub record_every: usize,
}

impl Default for Time {
    fn default() -> Self {
        Self { dt: 0.2, t_final: 128.0, integrator: IntegratorName::ImplicitEuler, gamma_shift: 0.0, record_every: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Picard {
    pub tol: f64,
    pub min_iters: usize,
    pub max_iters: usize,
    pub elimination: EliminationName,
}

impl Default for Picard {
    fn default() -> Self {
        Self { tol: 1e-8, min_iters: 2, max_iters: 8, elimination: EliminationName::Monolithic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Norms {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    /// Exponent pair of the linear decay experiment.
    pub decay_p: f64,
    pub decay_q: f64,
    /// Fit window of decay exponents in nonlinear runs.
    pub fit_start: f64,
    pub fit_end: f64,
    /// Fit window of the linear decay experiment; its run length is the upper end.
    pub decay_window: [f64; 2],
}

impl Default for Norms {
    fn default() -> Self {
        Self { p: 31.0, q1: 2.2, q2: 6.0, decay_p: 1.5, decay_q: 6.0, fit_start: 10.0, fit_end: 128.0, decay_window: [10.0, 1000.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Initial {
    /// Amplitude of the Gaussian bump `eps exp(-|x' - c|^2 / w^2)`.
    pub epsilon: f64,
    pub width: f64,
    pub seed: u64,
}

impl Default for Initial {
    fn default() -> Self {
        Self { epsilon: 1e-3, width: 6.0, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: Experiment,
    /// Duhamel model parameters.
    pub a: f64,
    pub delta: f64,
    /// Number of sweep points in the resolvent experiment.
    pub sweep_points: usize,
    /// Number of random samples in convergence studies.
    pub samples: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { kind: Experiment::Simulate, a: 0.5, delta: 1.0 / 30.0, sweep_points: 20, samples: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub domain: Domain,
    pub physics: Physics,
    pub time: Time,
    pub picard: Picard,
    pub norms: Norms,
    pub initial: Initial,
    pub experiment: ExperimentSection,
}

/// Upper end `2 + q_0` of the admissible range of `q1`, with `q_0 = 2/9`.
pub const Q1_MAX: f64 = 2.0 + 2.0 / 9.0;

impl SimConfig {
    pub fn integrator(&self) -> Integrator {
        match self.time.integrator {
            IntegratorName::ImplicitEuler => Integrator::ImplicitEuler,
            IntegratorName::CrankNicolson => Integrator::CrankNicolson,
        }
    }

    pub fn elimination(&self) -> Elimination {
        match self.picard.elimination {
            EliminationName::Monolithic => Elimination::Monolithic,
            EliminationName::Reduced => Elimination::Reduced,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.physics.sigma.unwrap_or(self.physics.c_sigma)
    }

    /// Hard errors for violated bounds; returns the soft warnings.
    pub fn validate(&self) -> Result<Vec<String>, CliError> {
        let mut errors = Vec::new();
        let d = &self.domain;
        if !(2..=4).contains(&d.n) {
            errors.push(format!("domain.n = {} must be 2, 3 or 4", d.n));
        }
        if !(d.periods > 0.0 && d.depth > 0.0) {
            errors.push("domain.periods and domain.depth must be positive".to_string());
        }
        if d.points < 4 || d.points % 2 != 0 {
            errors.push(format!("domain.points = {} must be even and at least 4", d.points));
        }
        if d.m_z < 4 {
            errors.push(format!("domain.m_z = {} must be at least 4", d.m_z));
        }
        let ph = &self.physics;
        for (name, v) in [("mu", ph.mu), ("c_g", ph.c_g), ("c_sigma", ph.c_sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("physics.{name} = {v} violates positivity (mu, c_g, c_sigma > 0)"));
            }
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.t_final >= 0.0) {
            errors.push("time.dt must be positive and time.t_final nonnegative".to_string());
        }
        if t.gamma_shift < 0.0 {
            errors.push("time.gamma_shift must be nonnegative".to_string());
        }
        let pc = &self.picard;
        if !(pc.tol > 0.0) || pc.min_iters == 0 || pc.max_iters < pc.min_iters {
            errors.push("picard: need tol > 0 and 1 <= min_iters <= max_iters".to_string());
        }
        let nm = &self.norms;
        if !(nm.p >= 1.0 && nm.q1 > 1.0 && nm.q2 > 1.0) {
            errors.push("norms: need p >= 1 and q1, q2 > 1".to_string());
        }
        if !(nm.fit_start > 0.0 && nm.fit_end > nm.fit_start) {
            errors.push("norms: need 0 < fit_start < fit_end".to_string());
        }
        if !(nm.decay_window[0] > 0.0 && nm.decay_window[1] > nm.decay_window[0]) {
            errors.push("norms.decay_window must be an increasing pair of positive times".to_string());
        }
        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }
        let mut warnings = Vec::new();
        if !(nm.q1 > 2.0 && nm.q1 <= Q1_MAX) {
            warnings.push(format!("norms.q1 = {} lies outside (2, 2 + 2/9]; exceeds 2+q0 = {Q1_MAX:.6}", nm.q1));
        }
        if nm.q2 <= d.n as f64 {
            warnings.push(format!("norms.q2 = {} should exceed N = {} for the decay statements", nm.q2, d.n));
        }
        if (2.0 / nm.p + 2.0 / nm.q1 - 1.0).abs() < 1e-12 {
            warnings.push("2/p + 1/(q1/2) = 1: the trace condition is violated".to_string());
        }
        let ext = self.domain.n;
        if self.experiment.kind == Experiment::Simulate && ext != 3 && ext != 4 {
            warnings.push("simulate is intended for N = 3 or 4".to_string());
        }
        Ok(warnings)
    }
}

/// Parse a configuration from text; unspecified keys keep their defaults.
pub fn parse_config_str(text: &str) -> Result<SimConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn parse_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Apply `section.key=value` overrides. Values are read as TOML, falling back to a string.
pub fn apply_overrides(cfg: &SimConfig, overrides: &[String]) -> Result<SimConfig, CliError> {
    let mut tree = toml::Value::try_from(cfg).map_err(|e| CliError::Parse(e.to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("override `{item}` is not of the form section.key=value")))?;
        let (section, field) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Parse(format!("override key `{key}` needs a section")))?;
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.to_string())),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let table = tree
            .as_table_mut()
            .and_then(|t| t.get_mut(section))
            .and_then(|s| s.as_table_mut())
            .ok_or_else(|| CliError::Parse(format!("unknown section `{section}`")))?;
        table.insert(field.to_string(), value);
    }
    tree.try_into().map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))
}
