//! Best- and worst-case switching at a fixed horizon.
//!
//! For `x' = (sum_i u_i A_i) x`, `x(0) = x0`, the problems are
//! `min V(x(T))` and `max V(x(T))` over simplex-valued controls. Maximizing
//! `V` is handled as minimizing `s V` with `s = -1`; everything below works
//! with that signed cost, and the terminal costate is `lambda(T) = s P x(T)`.
//!
//! Switching functions are `m_i(t) = lambda(t)' A_i x(t)`. A control
//! satisfies the maximum principle when `u_i(t) = 0` wherever `m_i(t)`
//! strictly exceeds all other `m_j(t)`; [`evaluate_mp_residual`] measures the
//! violation of that rule as an integral.

mod bang_bang;
pub mod nelder_mead;
mod relaxed;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use bang_bang::{solve_bang_bang, BangBangOptions, PeriodicCandidate};
pub use relaxed::{relaxed_gradient, solve_relaxed, RelaxedOptions};

use crate::consensus::{consensus_distance, disagreement_vector, SwitchedSystem};
use crate::dynamics::{
    check_horizon, final_state, vertex, AdjointPath, Flow, PiecewiseControl, Trajectory, DEFAULT_SAMPLES_PER_SEGMENT,
};
use crate::error::{Error, Result};
use crate::reduction::{reduce_state, ReducedSystem};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[serde(alias = "min")]
    Minimize,
    #[serde(alias = "max")]
    Maximize,
}

impl Sense {
    /// `+1` for minimization, `-1` for maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// True if `a` is strictly better than `b` under this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        self.sign() * a < self.sign() * b
    }
}

#[derive(Debug, Clone)]
pub struct OCProblem {
    pub sys: SwitchedSystem,
    pub x0: DVector<f64>,
    pub horizon: f64,
    pub sense: Sense,
}

impl OCProblem {
    pub fn new(sys: SwitchedSystem, x0: DVector<f64>, horizon: f64, sense: Sense) -> Result<Self> {
        sys.check_state(&x0)?;
        check_horizon(horizon)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidOption("initial state has non-finite entries".into()));
        }
        Ok(Self {
            sys,
            x0,
            horizon,
            sense,
        })
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn inputs(&self) -> usize {
        self.sys.len()
    }

    /// `V(x(T))` under `u`, one exponential per control segment.
    pub fn cost(&self, u: &PiecewiseControl) -> Result<f64> {
        let mats = self.sys.raw_matrices();
        Ok(consensus_distance(&final_state(&mats, &self.x0, u)?))
    }

    /// `s V(x(T))`, the quantity every solver minimizes.
    pub fn signed_cost(&self, u: &PiecewiseControl) -> Result<f64> {
        Ok(self.sense.sign() * self.cost(u)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    BangBangGrid,
    RelaxedSweep,
    AnalyticN2,
    ConstantScan,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Another control attains the same cost.
    pub non_unique: bool,
    /// The cost does not depend on the control at all.
    pub every_control_optimal: bool,
    /// The bang-bang search improved right up to its switch cap.
    pub switch_cap_binding: bool,
}

/// `m_i(t)` on the trajectory grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingFunctionPath {
    pub times: Vec<f64>,
    /// `values[k][i] = m_i(times[k])`.
    pub values: Vec<Vec<f64>>,
    /// Sign `s` in `lambda(T) = s P x(T)`.
    pub terminal_sign: f64,
}

impl SwitchingFunctionPath {
    /// `m_i - m_j` at every sample.
    pub fn difference(&self, i: usize, j: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[i] - m[j]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Sign of `m_i - m_j` on each arc between consecutive `breakpoints`,
    /// or `None` for an arc where some interior sample vanishes or has the
    /// other sign.
    pub fn arc_signs(&self, i: usize, j: usize, breakpoints: &[f64]) -> Vec<Option<f64>> {
        let diff = self.difference(i, j);
        breakpoints
            .windows(2)
            .map(|w| {
                let pad = 1e-12 * (w[1] - w[0]).abs().max(1.0);
                let mut inside = self
                    .times
                    .iter()
                    .zip(&diff)
                    .filter(|(t, _)| **t > w[0] + pad && **t < w[1] - pad)
                    .map(|(_, v)| *v);
                let first = inside.next()?;
                let sign = first.signum();
                (first != 0.0 && inside.all(|v| v != 0.0 && v.signum() == sign)).then_some(sign)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub control: PiecewiseControl,
    /// `V(x(T))`, never the signed cost.
    pub cost: f64,
    pub trajectory: Trajectory,
    pub adjoint: AdjointPath,
    pub switching_functions: SwitchingFunctionPath,
    pub mp_residual: f64,
    pub method: Method,
    pub flags: ReportFlags,
    pub iterations: usize,
    /// Best control of the periodic-after-three-switches family, when searched.
    pub periodic: Option<PeriodicCandidate>,
}

impl OptimizationReport {
    /// `T * max |m_i|`, the natural scale of [`OptimizationReport::mp_residual`].
    pub fn mp_scale(&self) -> f64 {
        self.control.horizon() * self.switching_functions.max_abs()
    }
}

/// State, costate and switching functions along one control.
#[derive(Debug, Clone)]
pub struct MpAnalysis {
    pub trajectory: Trajectory,
    pub adjoint: AdjointPath,
    pub switching: SwitchingFunctionPath,
}

pub fn analyze_control(prob: &OCProblem, control: &PiecewiseControl, samples_per_segment: usize) -> Result<MpAnalysis> {
    check_control(prob, control)?;
    let flow = Flow::for_system(&prob.sys, control, samples_per_segment)?;
    let trajectory = flow.forward(&prob.x0)?;
    let s = prob.sense.sign();
    let lambda_t = disagreement_vector(trajectory.final_state()) * s;
    let adjoint = flow.backward(&lambda_t)?;
    let tol = Tolerances::default().adjoint_sum;
    let drift = adjoint.max_abs_sum();
    if drift > tol * adjoint.max_abs_entry().max(1.0) {
        return Err(Error::TerminalNotZeroSum { sum: drift });
    }
    let mats = prob.sys.raw_matrices();
    let values = trajectory
        .states
        .iter()
        .zip(&adjoint.costates)
        .map(|(x, lam)| mats.iter().map(|a| lam.dot(&(a * x))).collect())
        .collect();
    let switching = SwitchingFunctionPath {
        times: trajectory.times.clone(),
        values,
        terminal_sign: s,
    };
    Ok(MpAnalysis {
        trajectory,
        adjoint,
        switching,
    })
}

/// Adjoint with `lambda(T) = s P x(T)` and the switching functions along `control`.
pub fn compute_switching_functions(
    prob: &OCProblem,
    control: &PiecewiseControl,
) -> Result<(AdjointPath, SwitchingFunctionPath)> {
    let a = analyze_control(prob, control, DEFAULT_SAMPLES_PER_SEGMENT)?;
    Ok((a.adjoint, a.switching))
}

fn check_control(prob: &OCProblem, control: &PiecewiseControl) -> Result<()> {
    if control.inputs() != prob.inputs() {
        return Err(Error::DimensionMismatch {
            expected: prob.inputs(),
            actual: control.inputs(),
        });
    }
    let h = control.horizon();
    if (h - prob.horizon).abs() > 1e-12 * prob.horizon.max(1.0) {
        return Err(Error::HorizonMismatch {
            control_horizon: h,
            horizon: prob.horizon,
        });
    }
    Ok(())
}

/// `int_0^T sum_i u_i(t) max(0, gap_i(t) - eps) dt` by the trapezoid rule on
/// the switching-function grid, with `eps = 1e-9 max |m|`.
///
/// `gap_i = m_i - min_j m_j` when the switching functions are those of the
/// minimization `sense` (terminal sign equal to `sense.sign()`), and
/// `max_j m_j - m_i` otherwise, so both costate conventions give the same
/// answer.
pub fn evaluate_mp_residual(control: &PiecewiseControl, switching: &SwitchingFunctionPath, sense: Sense) -> f64 {
    let eps = 1e-9 * switching.max_abs();
    let flip = sense.sign() * switching.terminal_sign < 0.0;
    let penalty = |m: &[f64], u: &[f64]| -> f64 {
        let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        m.iter()
            .zip(u)
            .map(|(&mi, &ui)| {
                let gap = if flip { hi - mi } else { mi - lo };
                ui * (gap - eps).max(0.0)
            })
            .sum()
    };
    let t = &switching.times;
    let mut total = 0.0;
    for k in 0..t.len().saturating_sub(1) {
        let dt = t[k + 1] - t[k];
        if dt <= 0.0 {
            continue;
        }
        let u = control.value_at(0.5 * (t[k] + t[k + 1]));
        total += 0.5 * dt * (penalty(&switching.values[k], u) + penalty(&switching.values[k + 1], u));
    }
    total
}

/// Switching functions of the reduced problem: `mu' = -(sum u_i bar_A_i)' mu`,
/// `mu(T) = s M z(T)`, `bar_m_i = mu' bar_A_i z`. They coincide with the
/// full-order `m_i`.
pub fn compute_reduced_mp(
    prob: &OCProblem,
    control: &PiecewiseControl,
    reduced: &ReducedSystem,
    samples_per_segment: usize,
) -> Result<SwitchingFunctionPath> {
    check_control(prob, control)?;
    if reduced.basis.dim() != prob.dim() || reduced.bar_matrices.len() != prob.inputs() {
        return Err(Error::DimensionMismatch {
            expected: prob.dim(),
            actual: reduced.basis.dim(),
        });
    }
    let z0 = reduce_state(&prob.x0, &reduced.basis);
    let flow = reduced.flow(control, samples_per_segment)?;
    let traj = flow.forward(&z0)?;
    let s = prob.sense.sign();
    let mu_t = &reduced.metric * traj.final_state() * s;
    let costate = flow.backward(&mu_t)?;
    let values = traj
        .states
        .iter()
        .zip(&costate.costates)
        .map(|(z, mu)| reduced.bar_matrices.iter().map(|a| mu.dot(&(a * z))).collect())
        .collect();
    Ok(SwitchingFunctionPath {
        times: traj.times,
        values,
        terminal_sign: s,
    })
}

pub(crate) fn build_report(
    prob: &OCProblem,
    control: PiecewiseControl,
    method: Method,
    samples_per_segment: usize,
) -> Result<OptimizationReport> {
    let a = analyze_control(prob, &control, samples_per_segment)?;
    // from a consensus state V(x(t)) vanishes identically; only rounding remains
    let consensus = at_consensus(&prob.x0);
    let cost = if consensus {
        0.0
    } else {
        consensus_distance(a.trajectory.final_state())
    };
    let mp_residual = evaluate_mp_residual(&control, &a.switching, prob.sense);
    Ok(OptimizationReport {
        control,
        cost,
        trajectory: a.trajectory,
        adjoint: a.adjoint,
        switching_functions: a.switching,
        mp_residual,
        method,
        flags: ReportFlags {
            every_control_optimal: consensus,
            non_unique: consensus,
            ..ReportFlags::default()
        },
        iterations: 0,
        periodic: None,
    })
}

pub(crate) fn at_consensus(x0: &DVector<f64>) -> bool {
    let scale = x0.amax().max(f64::MIN_POSITIVE);
    disagreement_vector(x0).amax() <= 1e-14 * scale
}

/// Two agents: `V(x(T)) = V(x0) exp(2 sum_i tr(A_i) int u_i)`, so the best
/// control is the constant vertex with the smallest (largest, when
/// maximizing) trace.
pub fn solve_analytic_n2(prob: &OCProblem) -> Result<OptimizationReport> {
    if prob.dim() != 2 {
        return Err(Error::DimensionNotTwo(prob.dim()));
    }
    let traces: Vec<f64> = prob.sys.matrices().iter().map(|a| a.trace()).collect();
    let s = prob.sense.sign();
    let (k, best) = traces.iter().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (i, &t)| if s * t < acc.1 { (i, s * t) } else { acc },
    );
    let scale = traces.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(f64::MIN_POSITIVE);
    let ties = traces
        .iter()
        .filter(|&&t| (s * t - best).abs() <= 1e-12 * scale)
        .count();

    let control = PiecewiseControl::constant(vertex(k, prob.inputs()), prob.horizon)?;
    let mut report = build_report(prob, control, Method::AnalyticN2, DEFAULT_SAMPLES_PER_SEGMENT)?;
    let consensus = at_consensus(&prob.x0);
    report.cost = if consensus {
        0.0
    } else {
        consensus_distance(&prob.x0) * (2.0 * traces[k] * prob.horizon).exp()
    };
    report.flags.every_control_optimal = consensus || traces.iter().all(|&t| (t - traces[0]).abs() <= 1e-12 * scale);
    report.flags.non_unique = ties > 1 || report.flags.every_control_optimal;
    Ok(report)
}

/// Constant controls `u = [alpha, 1 - alpha]`: uniform scan over `alpha`,
/// then golden-section refinement around the best grid point.
pub fn constant_control_scan(prob: &OCProblem, grid: usize) -> Result<OptimizationReport> {
    if prob.inputs() != 2 {
        return Err(Error::RequiresTwoSubsystems(prob.inputs()));
    }
    let grid = grid.max(2);
    let eval = |alpha: f64| -> Result<f64> {
        let u = PiecewiseControl::constant(vec![alpha, 1.0 - alpha], prob.horizon)?;
        prob.signed_cost(&u)
    };
    let mut values = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        values.push(eval(k as f64 / grid as f64)?);
    }
    let k_best = (0..=grid).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    let lo = k_best.saturating_sub(1) as f64 / grid as f64;
    let hi = (k_best + 1).min(grid) as f64 / grid as f64;
    let (mut alpha, refined) = golden_section(|a| eval(a).unwrap_or(f64::INFINITY), lo, hi, 1e-12);
    if values[k_best] <= refined {
        alpha = k_best as f64 / grid as f64;
    }
    let control = PiecewiseControl::constant(vec![alpha, 1.0 - alpha], prob.horizon)?;
    let mut report = build_report(prob, control, Method::ConstantScan, DEFAULT_SAMPLES_PER_SEGMENT)?;
    report.iterations = grid + 1;
    Ok(report)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Outcome of comparing the bang-bang and relaxed solvers on one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub bang_bang_cost: f64,
    pub relaxed_cost: f64,
    /// Improvement of the relaxed cost over the bang-bang one, relative to
    /// the bang-bang cost, positive when the relaxed control is better.
    pub relative_gain: f64,
    /// Relaxed beats bang-bang by more than `1e-4` relative: the optimum is
    /// likely singular.
    pub singular: bool,
}

pub const SINGULAR_GAIN: f64 = 1e-4;

pub fn cross_validate(sense: Sense, bang_bang: &OptimizationReport, relaxed: &OptimizationReport) -> CrossValidation {
    let gain = sense.sign() * (bang_bang.cost - relaxed.cost) / bang_bang.cost.abs().max(f64::MIN_POSITIVE);
    CrossValidation {
        bang_bang_cost: bang_bang.cost,
        relaxed_cost: relaxed.cost,
        relative_gain: gain,
        singular: gain > SINGULAR_GAIN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::ConsensusMatrix;
    use crate::reduction::{default_basis, reduce};

    fn pair_problem(sense: Sense, x0: [f64; 3], horizon: f64) -> OCProblem {
        let a1 =
            ConsensusMatrix::from_rows(&[vec![-3.0, 3.0, 0.0], vec![2.0, -2.0, 0.0], vec![0.0, 0.01, -0.01]]).unwrap();
        let a2 =
            ConsensusMatrix::from_rows(&[vec![-2.0, 2.0, 0.0], vec![1.0, -1.0, 0.0], vec![0.0, 0.1, -0.1]]).unwrap();
        let sys = SwitchedSystem::new(vec![a1, a2]).unwrap();
        OCProblem::new(sys, DVector::from_column_slice(&x0), horizon, sense).unwrap()
    }

    fn two_agents(a: [f64; 2], b: [f64; 2], x0: [f64; 2], sense: Sense) -> OCProblem {
        let m1 = ConsensusMatrix::from_rows(&[vec![-a[0], a[0]], vec![a[1], -a[1]]]).unwrap();
        let m2 = ConsensusMatrix::from_rows(&[vec![-b[0], b[0]], vec![b[1], -b[1]]]).unwrap();
        OCProblem::new(
            SwitchedSystem::new(vec![m1, m2]).unwrap(),
            DVector::from_column_slice(&x0),
            1.0,
            sense,
        )
        .unwrap()
    }

    #[test]
    fn reported_best_control_is_mp_consistent() {
        let prob = pair_problem(Sense::Minimize, [1.0, 2.0, 2.0], 0.5);
        let u = PiecewiseControl::bang_bang(&[1, 0], &[0.264834], 0.5, 2).unwrap();
        let r = build_report(&prob, u, Method::BangBangGrid, 32).unwrap();
        assert!((r.cost - 0.103011).abs() < 1e-5);
        assert!(
            r.mp_residual < 1e-6 * r.mp_scale(),
            "{} vs {}",
            r.mp_residual,
            r.mp_scale()
        );

        let swapped = PiecewiseControl::bang_bang(&[0, 1], &[0.264834], 0.5, 2).unwrap();
        let w = build_report(&prob, swapped, Method::BangBangGrid, 32).unwrap();
        assert!(w.mp_residual > 0.01 * w.mp_scale());
    }

    #[test]
    fn residual_is_convention_independent() {
        let prob = pair_problem(Sense::Maximize, [1.0, 2.0, 1.0], 1.0);
        let u = PiecewiseControl::bang_bang(&[1, 0], &[0.346429], 1.0, 2).unwrap();
        let (_, sw) = compute_switching_functions(&prob, &u).unwrap();
        let flipped = SwitchingFunctionPath {
            times: sw.times.clone(),
            values: sw.values.iter().map(|m| m.iter().map(|v| -v).collect()).collect(),
            terminal_sign: -sw.terminal_sign,
        };
        let a = evaluate_mp_residual(&u, &sw, Sense::Maximize);
        let b = evaluate_mp_residual(&u, &flipped, Sense::Maximize);
        assert_eq!(a, b);
        assert!(a < 1e-6 * 1.0 * sw.max_abs());
    }

    #[test]
    fn reduced_switching_functions_match() {
        let prob = pair_problem(Sense::Minimize, [1.0, 2.0, 2.0], 0.5);
        let u = PiecewiseControl::bang_bang(&[1, 0], &[0.264834], 0.5, 2).unwrap();
        let (_, full) = compute_switching_functions(&prob, &u).unwrap();
        let red = reduce(&prob.sys, &default_basis(3)).unwrap();
        let bar = compute_reduced_mp(&prob, &u, &red, DEFAULT_SAMPLES_PER_SEGMENT).unwrap();
        assert_eq!(bar.values.len(), full.values.len());
        let scale = full.max_abs();
        for (a, b) in full.values.iter().zip(&bar.values) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn reduced_mp_vanishes_at_consensus() {
        let prob = pair_problem(Sense::Minimize, [3.0, 3.0, 3.0], 0.5);
        let u = PiecewiseControl::constant(vec![0.5, 0.5], 0.5).unwrap();
        let red = reduce(&prob.sys, &default_basis(3)).unwrap();
        let bar = compute_reduced_mp(&prob, &u, &red, 8).unwrap();
        assert!(bar.max_abs() == 0.0);
    }

    #[test]
    fn analytic_two_agents() {
        let prob = two_agents([1.0, 2.0], [0.5, 0.5], [0.0, 1.0], Sense::Minimize);
        let r = solve_analytic_n2(&prob).unwrap();
        assert_eq!(r.control.values(), &[vec![1.0, 0.0]]);
        assert!((r.cost - 0.5 * (-6.0f64).exp()).abs() < 1e-15);
        assert!((r.cost - consensus_distance(r.trajectory.final_state())).abs() < 1e-10);
        assert_eq!(r.mp_residual, 0.0);
        assert!(!r.flags.non_unique);

        let worst = solve_analytic_n2(&OCProblem {
            sense: Sense::Maximize,
            ..prob.clone()
        })
        .unwrap();
        assert_eq!(worst.control.values(), &[vec![0.0, 1.0]]);

        let tie = two_agents([1.0, 2.0], [2.5, 0.5], [0.0, 1.0], Sense::Minimize);
        let r = solve_analytic_n2(&tie).unwrap();
        assert!(r.flags.non_unique && r.flags.every_control_optimal);
        assert_eq!(r.control.values(), &[vec![1.0, 0.0]]);

        let cons = two_agents([1.0, 2.0], [0.5, 0.5], [4.0, 4.0], Sense::Minimize);
        let r = solve_analytic_n2(&cons).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(r.flags.every_control_optimal);

        assert!(matches!(
            solve_analytic_n2(&pair_problem(Sense::Minimize, [1.0, 2.0, 2.0], 0.5)),
            Err(Error::DimensionNotTwo(3))
        ));
    }

    #[test]
    fn two_agent_switching_functions_are_constant() {
        let prob = two_agents([1.0, 2.0], [0.5, 0.5], [0.0, 1.0], Sense::Minimize);
        let u = PiecewiseControl::bang_bang(&[1, 0, 1], &[0.3, 0.7], 1.0, 2).unwrap();
        let a = analyze_control(&prob, &u, 16).unwrap();
        let xt = a.trajectory.final_state();
        let d2 = (xt[0] - xt[1]).powi(2);
        for (i, tr) in [-3.0, -1.0].iter().enumerate() {
            let want = tr * d2 / 2.0;
            for m in &a.switching.values {
                assert!((m[i] - want).abs() <= 1e-9 * want.abs());
            }
        }
        for lam in &a.adjoint.costates {
            assert!((lam[0] + lam[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_scan_endpoints_and_comparison() {
        let prob = pair_problem(Sense::Minimize, [1.0, 2.0, 2.0], 0.5);
        let r = constant_control_scan(&prob, 50).unwrap();
        assert_eq!(r.method, Method::ConstantScan);
        // interior optimum beats both vertices but not the switched control
        assert!(r.cost < 0.112562 && r.cost > 0.103011);
        let bad = OCProblem::new(
            SwitchedSystem::new(vec![ConsensusMatrix::zeros(3)]).unwrap(),
            DVector::from_column_slice(&[1.0, 2.0, 3.0]),
            1.0,
            Sense::Minimize,
        )
        .unwrap();
        assert!(matches!(
            constant_control_scan(&bad, 10),
            Err(Error::RequiresTwoSubsystems(1))
        ));
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let prob = pair_problem(Sense::Minimize, [1.0, 2.0, 2.0], 0.5);
        let u = PiecewiseControl::constant(vec![1.0, 0.0], 0.7).unwrap();
        assert!(matches!(
            compute_switching_functions(&prob, &u),
            Err(Error::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn sense_serde_names() {
        let s: Sense = serde_json::from_str("\"max\"").unwrap();
        assert_eq!(s, Sense::Maximize);
        assert_eq!(serde_json::to_string(&Sense::Minimize).unwrap(), "\"minimize\"");
    }
}
