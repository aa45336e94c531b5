//! Propagation of the bilinear consensus system `x' = (sum_i u_i A_i) x` and
//! of its adjoint `lambda' = -(sum_i u_i A_i)' lambda`.
//!
//! Piecewise-constant controls are propagated exactly: each control segment
//! is split into `samples_per_segment` equal sub-steps and the state is
//! advanced by the sub-step exponential. The adjoint reuses the transposes of
//! the same sub-step maps, so the discrete adjoint is the exact adjoint of
//! the discrete forward map.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::consensus::SwitchedSystem;
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::tolerances::Tolerances;

pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 32;

/// A simplex-valued control that is constant on `[t_{j-1}, t_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawControl", into = "RawControl")]
pub struct PiecewiseControl {
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawControl> for PiecewiseControl {
    type Error = Error;

    fn try_from(raw: RawControl) -> Result<Self> {
        PiecewiseControl::new(raw.breakpoints, raw.values)
    }
}

impl From<PiecewiseControl> for RawControl {
    fn from(c: PiecewiseControl) -> Self {
        RawControl {
            breakpoints: c.breakpoints,
            values: c.values,
        }
    }
}

pub fn check_simplex(u: &[f64], tol: f64) -> Result<()> {
    let sum: f64 = u.iter().sum();
    let ok = !u.is_empty()
        && u.iter().all(|v| v.is_finite() && *v >= -tol)
        && (sum - 1.0).abs() <= tol.max(f64::EPSILON * u.len() as f64);
    if ok {
        Ok(())
    } else {
        Err(Error::SimplexViolation { value: u.to_vec() })
    }
}

/// The `i`-th vertex of the `r`-simplex.
pub fn vertex(i: usize, r: usize) -> Vec<f64> {
    let mut e = vec![0.0; r];
    e[i] = 1.0;
    e
}

impl PiecewiseControl {
    /// `breakpoints` must start at 0 and increase strictly; `values[j]` is
    /// active on `[breakpoints[j], breakpoints[j + 1])`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(breakpoints, values, Tolerances::default().simplex)
    }

    pub fn with_tolerance(breakpoints: Vec<f64>, values: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidBreakpoints(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidBreakpoints(format!(
                "first breakpoint is {}, expected 0",
                breakpoints[0]
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidBreakpoints("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let r = values[0].len();
        for v in &values {
            if v.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    actual: v.len(),
                });
            }
            check_simplex(v, tol)?;
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(u: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Self::new(vec![0.0, horizon], vec![u])
    }

    /// Equal-width bins over `[0, horizon]`.
    pub fn from_bins(values: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let k = values.len();
        if k == 0 {
            return Err(Error::InvalidBreakpoints("no bins".into()));
        }
        let breakpoints = (0..=k).map(|j| horizon * j as f64 / k as f64).collect();
        Self::new(breakpoints, values)
    }

    /// Bang-bang control following `sequence` (zero-based subsystem indices),
    /// switching at the sorted `switch_times`. Segments of zero length are
    /// dropped and equal neighbours merged, so the result may have fewer
    /// switches than requested.
    pub fn bang_bang(sequence: &[usize], switch_times: &[f64], horizon: f64, r: usize) -> Result<Self> {
        check_horizon(horizon)?;
        if sequence.is_empty() || sequence.len() != switch_times.len() + 1 {
            return Err(Error::InvalidBreakpoints(format!(
                "{} arcs need {} switch times, got {}",
                sequence.len(),
                sequence.len().saturating_sub(1),
                switch_times.len()
            )));
        }
        if let Some(&bad) = sequence.iter().find(|&&i| i >= r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                actual: bad + 1,
            });
        }
        let mut edges = Vec::with_capacity(sequence.len() + 1);
        edges.push(0.0);
        for &t in switch_times {
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::InvalidBreakpoints(format!(
                    "switch time {t} outside [0, {horizon}]"
                )));
            }
            edges.push(t);
        }
        edges.push(horizon);
        if edges.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidBreakpoints("switch times not sorted".into()));
        }
        let mut breakpoints = vec![0.0];
        let mut arcs: Vec<usize> = Vec::new();
        for (j, &arc) in sequence.iter().enumerate() {
            let (a, b) = (edges[j], edges[j + 1]);
            if b - a <= 0.0 {
                continue;
            }
            if arcs.last() == Some(&arc) {
                *breakpoints.last_mut().unwrap() = b;
            } else {
                arcs.push(arc);
                breakpoints.push(b);
            }
        }
        let values = arcs.iter().map(|&i| vertex(i, r)).collect();
        Self::new(breakpoints, values)
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn inputs(&self) -> usize {
        self.values[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn num_segments(&self) -> usize {
        self.values.len()
    }

    /// Interior breakpoints.
    pub fn switch_times(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    /// `(start, end, value)` for every segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, &[f64])> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[0], w[1], v.as_slice()))
    }

    /// Control value at `t`, right-continuous; `t = T` maps to the last segment.
    pub fn value_at(&self, t: f64) -> &[f64] {
        let idx = self.breakpoints[1..]
            .iter()
            .position(|&b| t < b)
            .unwrap_or(self.values.len() - 1);
        &self.values[idx]
    }

    /// Vertex indices of the arcs if every value is a simplex vertex.
    pub fn vertex_sequence(&self, tol: f64) -> Option<Vec<usize>> {
        self.values
            .iter()
            .map(|v| {
                let (i, max) = v.iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
                );
                ((max - 1.0).abs() <= tol).then_some(i)
            })
            .collect()
    }

    pub fn is_bang_bang(&self, tol: f64) -> bool {
        self.vertex_sequence(tol).is_some()
    }

    /// Merges neighbouring segments carrying identical values.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = vec![0.0];
        let mut values: Vec<Vec<f64>> = Vec::new();
        for (_, end, v) in self.segments() {
            if values.last().map(|last| last.as_slice() == v).unwrap_or(false) {
                *breakpoints.last_mut().unwrap() = end;
            } else {
                values.push(v.to_vec());
                breakpoints.push(end);
            }
        }
        Self { breakpoints, values }
    }

    /// `int_0^T u_i(t) dt` for every input.
    pub fn integrals(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.inputs()];
        for (a, b, v) in self.segments() {
            for (s, x) in acc.iter_mut().zip(v) {
                *s += (b - a) * x;
            }
        }
        acc
    }
}

pub(crate) fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidHorizon(horizon))
    }
}

/// `sum_i u_i M_i` without structural post-processing.
pub fn combine(matrices: &[DMatrix<f64>], u: &[f64]) -> DMatrix<f64> {
    let n = matrices[0].nrows();
    let mut acc = DMatrix::zeros(n, n);
    for (m, &w) in matrices.iter().zip(u) {
        if w != 0.0 {
            acc += m * w;
        }
    }
    acc
}

/// The convex combination `sum_i u_i A_i`; its diagonal is re-centered so
/// that the rows sum exactly to zero.
pub fn system_matrix(sys: &SwitchedSystem, u: &[f64]) -> Result<DMatrix<f64>> {
    if u.len() != sys.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.len(),
            actual: u.len(),
        });
    }
    check_simplex(u, Tolerances::default().simplex)?;
    let mats: Vec<DMatrix<f64>> = sys.raw_matrices();
    let mut m = combine(&mats, u);
    let n = m.nrows();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
        m[(i, i)] = -off;
    }
    Ok(m)
}

/// Sampled states; every control breakpoint appears exactly once in `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Sub-steps per control segment; segment `j` spans samples
    /// `j * samples_per_segment ..= (j + 1) * samples_per_segment`.
    pub samples_per_segment: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Sampled costates on the same grid as the forward trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPath {
    pub times: Vec<f64>,
    pub costates: Vec<DVector<f64>>,
}

impl AdjointPath {
    /// `max_t |1' lambda(t)|`.
    pub fn max_abs_sum(&self) -> f64 {
        self.costates.iter().map(|l| l.sum().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.costates.iter().map(|l| l.amax()).fold(0.0, f64::max)
    }
}

/// Sub-step transition maps of a piecewise-constant control, shared by the
/// forward and backward sweeps.
#[derive(Debug, Clone)]
pub struct Flow {
    times: Vec<f64>,
    steps: Vec<DMatrix<f64>>,
    samples_per_segment: usize,
    dim: usize,
    /// Every step fixes `1`, so constant states are exact equilibria.
    consensus: bool,
}

impl Flow {
    pub fn for_system(sys: &SwitchedSystem, u: &PiecewiseControl, samples_per_segment: usize) -> Result<Self> {
        if u.inputs() != sys.len() {
            return Err(Error::DimensionMismatch {
                expected: sys.len(),
                actual: u.inputs(),
            });
        }
        let mats = u
            .values()
            .iter()
            .map(|v| system_matrix(sys, v))
            .collect::<Result<Vec<_>>>()?;
        let mut flow = Self::build(&mats, u, samples_per_segment)?;
        flow.consensus = true;
        Ok(flow)
    }

    /// Same as [`Flow::for_system`] for an arbitrary matrix family, e.g. the
    /// reduced matrices.
    pub fn for_matrices(matrices: &[DMatrix<f64>], u: &PiecewiseControl, samples_per_segment: usize) -> Result<Self> {
        if u.inputs() != matrices.len() {
            return Err(Error::DimensionMismatch {
                expected: matrices.len(),
                actual: u.inputs(),
            });
        }
        let mats: Vec<DMatrix<f64>> = u.values().iter().map(|v| combine(matrices, v)).collect();
        Self::build(&mats, u, samples_per_segment)
    }

    fn build(segment_matrices: &[DMatrix<f64>], u: &PiecewiseControl, samples_per_segment: usize) -> Result<Self> {
        let samples = samples_per_segment.max(1);
        let dim = segment_matrices[0].nrows();
        let mut times = vec![0.0];
        let mut steps = Vec::with_capacity(segment_matrices.len());
        for ((a, b, _), m) in u.segments().zip(segment_matrices) {
            let h = (b - a) / samples as f64;
            steps.push(expm(&(m * h))?);
            for k in 1..samples {
                times.push(a + h * k as f64);
            }
            times.push(b);
        }
        Ok(Self {
            times,
            steps,
            samples_per_segment: samples,
            dim,
            consensus: false,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn forward(&self, x0: &DVector<f64>) -> Result<Trajectory> {
        if x0.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x0.len(),
            });
        }
        if self.consensus && x0.iter().all(|&v| v == x0[0]) {
            return Ok(Trajectory {
                times: self.times.clone(),
                states: vec![x0.clone(); self.times.len()],
                samples_per_segment: self.samples_per_segment,
            });
        }
        let mut states = Vec::with_capacity(self.times.len());
        let mut x = x0.clone();
        states.push(x.clone());
        for step in &self.steps {
            for _ in 0..self.samples_per_segment {
                x = step * &x;
                states.push(x.clone());
            }
        }
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            samples_per_segment: self.samples_per_segment,
        })
    }

    /// Backward sweep from the terminal costate, without any zero-sum check.
    pub fn backward(&self, terminal: &DVector<f64>) -> Result<AdjointPath> {
        if terminal.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: terminal.len(),
            });
        }
        let total = self.times.len();
        let mut costates = vec![DVector::zeros(self.dim); total];
        let mut lam = terminal.clone();
        costates[total - 1] = lam.clone();
        let mut idx = total - 1;
        for step in self.steps.iter().rev() {
            let step_t = step.transpose();
            for _ in 0..self.samples_per_segment {
                lam = &step_t * &lam;
                idx -= 1;
                costates[idx] = lam.clone();
            }
        }
        Ok(AdjointPath {
            times: self.times.clone(),
            costates,
        })
    }
}

/// Exact propagation of `x' = (sum_i u_i A_i) x` under a piecewise-constant control.
pub fn propagate(
    sys: &SwitchedSystem,
    x0: &DVector<f64>,
    u: &PiecewiseControl,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    sys.check_state(x0)?;
    Flow::for_system(sys, u, samples_per_segment)?.forward(x0)
}

/// Backward propagation of the adjoint from `lambda(T) = lambda_t`.
///
/// Requires `1' lambda_t = 0`; the first integral `1' lambda(t) = 0` is then
/// checked at every sample.
pub fn propagate_adjoint(
    sys: &SwitchedSystem,
    u: &PiecewiseControl,
    lambda_t: &DVector<f64>,
    samples_per_segment: usize,
) -> Result<AdjointPath> {
    sys.check_state(lambda_t)?;
    let tol = Tolerances::default().adjoint_sum;
    let scale = lambda_t.amax().max(1.0);
    let sum = lambda_t.sum();
    if sum.abs() > tol * scale {
        return Err(Error::TerminalNotZeroSum { sum });
    }
    let path = Flow::for_system(sys, u, samples_per_segment)?.backward(lambda_t)?;
    let drift = path.max_abs_sum();
    if drift > tol * path.max_abs_entry().max(1.0) {
        return Err(Error::TerminalNotZeroSum { sum: drift });
    }
    Ok(path)
}

/// State at `T` only, one exponential per control segment.
pub fn final_state(matrices: &[DMatrix<f64>], x0: &DVector<f64>, u: &PiecewiseControl) -> Result<DVector<f64>> {
    let mut x = x0.clone();
    for (a, b, v) in u.segments() {
        let m = combine(matrices, v);
        x = expm(&(m * (b - a)))? * x;
    }
    Ok(x)
}

/// Classical fixed-step RK4 for `x' = M(t) x`.
pub fn propagate_general<F>(m_of_t: F, x0: &DVector<f64>, horizon: f64, step: f64) -> Result<Trajectory>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    check_horizon(horizon)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidOption(format!("step must be positive, got {step}")));
    }
    let n_steps = (horizon / step).ceil().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for k in 0..n_steps {
        let t = h * k as f64;
        let m0 = m_of_t(t);
        let mh = m_of_t(t + 0.5 * h);
        let m1 = m_of_t(t + h);
        let k1 = &m0 * &x;
        let k2 = &mh * (&x + &k1 * (0.5 * h));
        let k3 = &mh * (&x + &k2 * (0.5 * h));
        let k4 = &m1 * (&x + &k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        times.push(if k + 1 == n_steps { horizon } else { h * (k + 1) as f64 });
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        samples_per_segment: n_steps,
    })
}
