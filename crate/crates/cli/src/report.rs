use std::io::Write;
use std::path::Path;

use consensus_core::optimal_control::{CrossValidation, PeriodicCandidate, ReportFlags};
use consensus_core::stability::SampleScreen;
use consensus_core::{
    consensus_distance, diameter, lifted_diameter, metric_norm_sq, reduce_state, Method, OptimizationReport,
    PiecewiseControl, ReducedSystem, SwitchingFunctionPath, Trajectory, UCCVerdict,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::problem::ProblemFile;

/// A control is reported MP-consistent when its residual is below this
/// fraction of `T max |m|`.
pub const MP_CONSISTENCY: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub problem: ProblemFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<Solution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_validation: Option<CrossValidation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucc: Option<UccReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mp_check: Option<MpCheck>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, problem: ProblemFile) -> Self {
        RunReport {
            tool: "consensus-opt".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            problem,
            solutions: Vec::new(),
            cross_validation: None,
            ucc: None,
            mp_check: None,
            timing: Timing { elapsed_seconds: 0.0 },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

/// One solver's answer, flattened from [`OptimizationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub method: Method,
    pub cost: f64,
    /// One-based subsystem labels, present for bang-bang controls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<usize>>,
    pub switch_times: Vec<f64>,
    pub control: PiecewiseControl,
    pub final_state: Vec<f64>,
    pub mp_residual: f64,
    pub mp_scale: f64,
    pub mp_consistent: bool,
    pub flags: ReportFlags,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicCandidate>,
    pub switching_functions: SwitchingFunctionPath,
}

impl From<&OptimizationReport> for Solution {
    fn from(r: &OptimizationReport) -> Self {
        let scale = r.mp_scale();
        Solution {
            method: r.method,
            cost: r.cost,
            sequence: r
                .control
                .vertex_sequence(1e-12)
                .map(|s| s.iter().map(|k| k + 1).collect()),
            switch_times: r.control.switch_times().to_vec(),
            control: r.control.clone(),
            final_state: r.trajectory.final_state().iter().copied().collect(),
            mp_residual: r.mp_residual,
            mp_scale: scale,
            mp_consistent: r.mp_residual <= MP_CONSISTENCY * scale,
            flags: r.flags.clone(),
            iterations: r.iterations,
            periodic: r.periodic.clone(),
            switching_functions: r.switching_functions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UccReport {
    /// Exact decision for three agents and two topologies.
    Decision { verdict: UCCVerdict },
    /// Necessary-condition screen for every other size.
    Screen {
        result: SampleScreen,
        hull_samples: usize,
        disclaimer: String,
    },
}

/// Maximum-principle check of a user-supplied control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpCheck {
    pub control: PiecewiseControl,
    pub cost: f64,
    pub mp_residual: f64,
    pub mp_scale: f64,
    pub mp_consistent: bool,
    /// For two subsystems: sign of `m_1 - m_2` on each control segment,
    /// `null` where it changes or vanishes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc_signs: Option<Vec<Option<f64>>>,
    pub switching_functions: SwitchingFunctionPath,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes to `path` when given, otherwise to standard output.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii output")
}

/// `t, x1..xn, V, diameter, z1..z(n-1), V_tilde, W_tilde`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory, reduced: &ReducedSystem) -> String {
    let n = reduced.basis.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(["V".to_string(), "diameter".to_string()]);
    header.extend((1..n).map(|i| format!("z{i}")));
    header.extend(["V_tilde".to_string(), "W_tilde".to_string()]);
    let mut w = csv_writer();
    w.write_record(&header).expect("in-memory write");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let z = reduce_state(x, &reduced.basis);
        let mut row = vec![fmt_float(*t)];
        row.extend(x.iter().map(|v| fmt_float(*v)));
        row.push(fmt_float(consensus_distance(x)));
        row.push(fmt_float(diameter(x)));
        row.extend(z.iter().map(|v| fmt_float(*v)));
        row.push(fmt_float(metric_norm_sq(&z, &reduced.metric)));
        row.push(fmt_float(lifted_diameter(&z, &reduced.basis)));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// `t, m1..mr`.
pub fn switching_csv(sw: &SwitchingFunctionPath) -> String {
    let r = sw.values.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=r).map(|i| format!("m{i}")));
    let mut w = csv_writer();
    w.write_record(&header).expect("in-memory write");
    for (t, m) in sw.times.iter().zip(&sw.values) {
        let mut row = vec![fmt_float(*t)];
        row.extend(m.iter().map(|v| fmt_float(*v)));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}
