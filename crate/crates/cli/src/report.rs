//! Machine-readable report and CSV artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use surfflow::analysis::NormSeries;

use crate::config::SimConfig;
use crate::error::CliError;

/// How a value is compared against its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
    /// `|value - target| <= tolerance`.
    Within,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Reference value for [`Relation::Within`].
    pub target: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: u32, name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Below => value < tolerance,
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Within => false,
        };
        Self { criterion, name: name.into(), value, relation, tolerance, target: None, pass }
    }

    pub fn within(criterion: u32, name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Self { criterion, name: name.into(), value, relation: Relation::Within, tolerance, target: Some(target), pass }
    }

    pub fn describe(&self) -> String {
        let rel = match self.relation {
            Relation::Below => format!("< {:e}", self.tolerance),
            Relation::AtMost => format!("<= {:e}", self.tolerance),
            Relation::AtLeast => format!(">= {}", self.tolerance),
            Relation::Within => format!("= {} +- {}", self.target.unwrap_or(f64::NAN), self.tolerance),
        };
        format!("{}: {:.6e} (need {rel})", self.name, self.value)
    }
}

/// Fitted power law with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub series: String,
    pub window: (f64, f64),
    pub exponent: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: SimConfig,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub fits: Vec<Fit>,
    /// Scalar results that are not checks.
    pub values: Vec<(String, f64)>,
    pub csv: Vec<String>,
    pub failure: Option<String>,
}

impl Report {
    pub fn new(experiment: &str, config: &SimConfig, warnings: Vec<String>) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: config.clone(),
            warnings,
            checks: Vec::new(),
            fits: Vec::new(),
            values: Vec::new(),
            csv: Vec::new(),
            failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
        let path = dir.join(format!("{}_report.json", self.experiment));
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(path)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Write named columns; all columns must have the same length.
pub fn write_columns(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    let rows = columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| fmt(c[i]))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// `t` followed by every column of the series.
pub fn write_series(path: &Path, series: &NormSeries) -> Result<(), CliError> {
    let mut header = vec!["t"];
    header.extend(series.names.iter().map(String::as_str));
    let mut cols = vec![series.times.clone()];
    for j in 0..series.names.len() {
        cols.push(series.rows.iter().map(|r| r[j]).collect());
    }
    write_columns(path, &header, &cols)
}
