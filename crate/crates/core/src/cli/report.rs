use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{ModelSpec, RotationBlock};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub check: String,
    pub value: f64,
    /// `None` for diagnostics that are reported but never fail.
    pub tol: Option<f64>,
    pub pass: bool,
}

impl Residual {
    pub fn at_most(check: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            check: check.into(),
            value,
            tol: Some(tol),
            pass: value <= tol,
        }
    }

    /// Passes when `value` exceeds `floor`.
    pub fn above(check: impl Into<String>, value: f64, floor: f64) -> Self {
        Self {
            check: check.into(),
            value,
            tol: Some(floor),
            pass: value > floor,
        }
    }

    pub fn diagnostic(check: impl Into<String>, value: f64) -> Self {
        Self {
            check: check.into(),
            value,
            tol: None,
            pass: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(name: &str, residuals: Vec<Residual>) -> Self {
        let pass = residuals.iter().all(|r| r.pass);
        Self {
            name: name.into(),
            residuals,
            error: None,
            pass,
        }
    }

    pub fn failed(name: &str, residuals: Vec<Residual>, error: String) -> Self {
        Self {
            name: name.into(),
            residuals,
            error: Some(error),
            pass: false,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub dim: usize,
    pub sectors: Vec<usize>,
    pub q: Vec<Vec<f64>>,
    pub rotation_blocks: Vec<RotationBlock>,
    pub truncation: usize,
}

impl From<&ModelSpec> for ModelSummary {
    fn from(spec: &ModelSpec) -> Self {
        Self {
            dim: spec.dim(),
            sectors: spec.sectors.iter().map(|s| s.dim).collect(),
            q: spec.q.clone(),
            rotation_blocks: spec.rotation_blocks.clone(),
            truncation: spec.truncation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelEigenvalue {
    pub level: usize,
    pub min_eigenvalue: f64,
}

/// One row of a moment table.  Letters are coordinate indices joined by `-`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub word: String,
    pub order: usize,
    pub matrix_re: f64,
    pub matrix_im: f64,
    pub oracle_re: f64,
    pub oracle_im: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub model: ModelSummary,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub positivity: Vec<LevelEigenvalue>,
    pub moments: Vec<MomentRow>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Wall-clock seconds per suite, written next to the report.
pub type Timings = BTreeMap<String, f64>;
