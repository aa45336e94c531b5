//! Problem files and control specifications.
//!
//! A problem file is one JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "n": 3,
//!   "matrices": [[[-3, 3, 0], [2, -2, 0], [0, 0.01, -0.01]],
//!                [[-2, 2, 0], [1, -1, 0], [0, 0.1, -0.1]]],
//!   "x0": [1, 2, 2],
//!   "T": 0.5,
//!   "sense": "min",
//!   "solver": { "max_switches": 4, "grid": 16, "time_bins": 64, "seed": 0 }
//! }
//! ```
//!
//! Matrices are listed row by row. `sense` defaults to `min`, `solver` to the
//! library defaults. Unknown keys are rejected.

use std::path::Path;

use consensus_core::consensus::diagnose;
use consensus_core::dynamics::vertex;
use consensus_core::{ConsensusMatrix, OCProblem, PiecewiseControl, Sense, SwitchedSystem, Tolerances};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub n: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub x0: Vec<f64>,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: f64,
    #[serde(default = "default_sense")]
    pub sense: Sense,
    #[serde(default, skip_serializing_if = "SolverSettings::is_empty")]
    pub solver: SolverSettings,
}

fn default_sense() -> Sense {
    Sense::Minimize
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_switches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_bins: Option<usize>,
    /// Echoed into reports. Every solver is deterministic, so it currently
    /// has no effect on results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SolverSettings {
    pub fn is_empty(&self) -> bool {
        *self == SolverSettings::default()
    }
}

/// Findings for one matrix of a problem file; `issues` is empty when the
/// matrix is a valid consensus matrix.
#[derive(Debug, Clone)]
pub struct MatrixFindings {
    pub index: usize,
    pub issues: Vec<String>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported problem file version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Per-matrix diagnostics, including shape mismatches against `n`.
    pub fn diagnose(&self, tol: &Tolerances) -> Vec<MatrixFindings> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                let mut issues = Vec::new();
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                    let widths: Vec<usize> = rows.iter().map(Vec::len).collect();
                    issues.push(format!(
                        "expected {n}x{n}, got {} rows of lengths {widths:?}",
                        rows.len(),
                        n = self.n
                    ));
                } else {
                    let m = DMatrix::from_fn(self.n, self.n, |i, j| rows[i][j]);
                    issues.extend(diagnose(&m, tol).iter().map(ToString::to_string));
                }
                MatrixFindings { index: k + 1, issues }
            })
            .collect()
    }

    pub fn system(&self, tol: &Tolerances) -> Result<SwitchedSystem, CliError> {
        if self.n < 2 {
            return Err(CliError::Validation(format!(
                "need at least two agents, got n = {}",
                self.n
            )));
        }
        if self.matrices.is_empty() {
            return Err(CliError::Validation("no matrices given".into()));
        }
        let mut mats = Vec::with_capacity(self.matrices.len());
        for f in self.diagnose(tol) {
            if let Some(first) = f.issues.first() {
                return Err(CliError::Validation(format!("matrix {}: {first}", f.index)));
            }
            let rows = &self.matrices[f.index - 1];
            let m = DMatrix::from_fn(self.n, self.n, |i, j| rows[i][j]);
            mats.push(ConsensusMatrix::with_tolerances(m, tol)?);
        }
        Ok(SwitchedSystem::new(mats)?)
    }

    pub fn problem(&self, tol: &Tolerances) -> Result<OCProblem, CliError> {
        let sys = self.system(tol)?;
        if self.x0.len() != self.n {
            return Err(CliError::Validation(format!(
                "x0 has {} entries, expected {}",
                self.x0.len(),
                self.n
            )));
        }
        if let Some(i) = self.x0.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("x0 entry {} is not finite", i + 1)));
        }
        Ok(OCProblem::new(
            sys,
            DVector::from_column_slice(&self.x0),
            self.horizon,
            self.sense,
        )?)
    }
}

/// Parses a control specification.
///
/// The specification is a comma-separated list of `value@start` items with
/// strictly increasing start times, the first one 0. A value is either a
/// one-based subsystem index (`2`) or colon-separated simplex weights
/// (`0.5:0.5`). Each value holds until the next start time, the last one
/// until `horizon`:
///
/// ```text
/// 2@0,1@0.264834
/// ```
pub fn parse_control(spec: &str, inputs: usize, horizon: f64) -> Result<PiecewiseControl, CliError> {
    let mut starts = Vec::new();
    let mut values = Vec::new();
    for item in spec.split(',').map(str::trim) {
        let (value, start) = item
            .split_once('@')
            .ok_or_else(|| CliError::Parse(format!("control item `{item}` is not of the form value@start")))?;
        let start: f64 = start
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("bad start time in control item `{item}`")))?;
        let value = value.trim();
        let u = if value.contains(':') {
            value
                .split(':')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Parse(format!("bad weights in control item `{item}`")))?
        } else {
            let k: usize = value
                .parse()
                .map_err(|_| CliError::Parse(format!("bad subsystem index in control item `{item}`")))?;
            if k == 0 || k > inputs {
                return Err(CliError::Validation(format!(
                    "subsystem {k} does not exist (1..={inputs})"
                )));
            }
            vertex(k - 1, inputs)
        };
        if u.len() != inputs {
            return Err(CliError::Validation(format!(
                "control item `{item}` has {} weights, expected {inputs}",
                u.len()
            )));
        }
        starts.push(start);
        values.push(u);
    }
    if starts[0] != 0.0 {
        return Err(CliError::Validation(format!(
            "control must start at 0, not {}",
            starts[0]
        )));
    }
    if let Some(&t) = starts.iter().find(|&&t| !(0.0..horizon).contains(&t)) {
        return Err(CliError::Validation(format!(
            "control start time {t} is outside [0, {horizon})"
        )));
    }
    starts.push(horizon);
    Ok(PiecewiseControl::new(starts, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "version": 1,
        "n": 3,
        "matrices": [[[-3, 3, 0], [2, -2, 0], [0, 0.01, -0.01]],
                     [[-2, 2, 0], [1, -1, 0], [0, 0.1, -0.1]]],
        "x0": [1, 2, 2],
        "T": 0.5
    }"#;

    #[test]
    fn parses_with_defaults() {
        let f = ProblemFile::parse(EXAMPLE).unwrap();
        assert_eq!(f.sense, Sense::Minimize);
        assert!(f.solver.is_empty());
        let p = f.problem(&Tolerances::default()).unwrap();
        assert_eq!(p.inputs(), 2);
        assert_eq!(p.horizon, 0.5);
    }

    #[test]
    fn unknown_fields_are_located() {
        let text = EXAMPLE.replace("\"T\": 0.5", "\"T\": 0.5, \"colour\": 1");
        let CliError::Parse(msg) = ProblemFile::parse(&text).unwrap_err() else {
            panic!("expected a parse error");
        };
        assert!(msg.contains("colour") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn control_specs() {
        let u = parse_control("2@0,1@0.264834", 2, 0.5).unwrap();
        assert_eq!(u.switch_times(), &[0.264834]);
        assert_eq!(u.values(), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let u = parse_control("0.5:0.5@0", 2, 1.0).unwrap();
        assert_eq!(u.values(), &[vec![0.5, 0.5]]);
        assert!(matches!(
            parse_control("1@0,2@0.7", 2, 0.5),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(parse_control("1@0.1", 2, 0.5), Err(CliError::Validation(_))));
        assert!(matches!(parse_control("3@0", 2, 0.5), Err(CliError::Validation(_))));
        assert!(matches!(parse_control("x@0", 2, 0.5), Err(CliError::Parse(_))));
        assert!(matches!(parse_control("1", 2, 0.5), Err(CliError::Parse(_))));
    }
}
