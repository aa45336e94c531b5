//! Regression harness over the reference problems.
//!
//! Every fixture recomputes its reference quantities from scratch and
//! compares them against the stored values. Tolerances are multiplied by a
//! common scale, so `scale = 0` demands exact agreement.

use std::fmt::Write as _;
use std::time::Instant;

use consensus_core::dynamics::{final_state, vertex};
use consensus_core::fixtures::{self, BangBangSolution};
use consensus_core::optimal_control::cross_validate;
use consensus_core::stability::lyapunov_residual;
use consensus_core::{
    consensus_distance, constant_control_scan, cqlf_search, default_basis, reduce, solve_analytic_n2, solve_bang_bang,
    solve_relaxed, ucc_decide_n3_r2, BangBangOptions, ConsensusMatrix, CqlfOutcome, Method, OCProblem,
    PiecewiseControl, RelaxedOptions, Sense, SwitchedSystem, UCCDecision,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FIXTURES: [&str; 6] = ["example1", "example2", "example3", "cqlf", "example7", "example8"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|actual - expected| <= tolerance`
    Within,
    /// `actual >= expected - tolerance`
    AtLeast,
    /// A yes/no property; `actual` is 1 when it holds.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub fixture: String,
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn diff(&self) -> f64 {
        self.actual - self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub checks: Vec<Check>,
    pub tolerance_scale: f64,
    pub elapsed_seconds: f64,
}

impl HarnessReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<9} {:<48} {:>16} {:>16} {:>10} {:>9}  result",
            "fixture", "quantity", "expected", "actual", "diff", "tol"
        );
        for c in &self.checks {
            let (expected, actual, diff) = match c.comparison {
                Comparison::Holds => (
                    "yes".to_string(),
                    if c.pass { "yes" } else { "no" }.to_string(),
                    String::new(),
                ),
                _ => (
                    format!("{:.9}", c.expected),
                    format!("{:.9}", c.actual),
                    format!("{:.2e}", c.diff()),
                ),
            };
            let tol = match c.comparison {
                Comparison::Holds => String::new(),
                Comparison::AtLeast => format!(">-{:.0e}", c.tolerance),
                Comparison::Within => format!("{:.0e}", c.tolerance),
            };
            let _ = writeln!(
                out,
                "{:<9} {:<48} {:>16} {:>16} {:>10} {:>9}  {}",
                c.fixture,
                c.quantity,
                expected,
                actual,
                diff,
                tol,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} checks, {} failed, {:.2} s",
            self.checks.len(),
            failed,
            self.elapsed_seconds
        );
        out
    }
}

struct Recorder<'a> {
    fixture: &'a str,
    scale: f64,
    checks: Vec<Check>,
}

impl Recorder<'_> {
    fn within(&mut self, quantity: impl Into<String>, expected: f64, actual: f64, tolerance: f64) {
        let pass = (actual - expected).abs() <= tolerance * self.scale;
        self.push(quantity, expected, actual, tolerance, Comparison::Within, pass);
    }

    fn at_least(&mut self, quantity: impl Into<String>, expected: f64, actual: f64, tolerance: f64) {
        let pass = actual >= expected - tolerance * self.scale;
        self.push(quantity, expected, actual, tolerance, Comparison::AtLeast, pass);
    }

    fn holds(&mut self, quantity: impl Into<String>, pass: bool) {
        self.push(
            quantity,
            1.0,
            if pass { 1.0 } else { 0.0 },
            0.0,
            Comparison::Holds,
            pass,
        );
    }

    fn push(
        &mut self,
        quantity: impl Into<String>,
        expected: f64,
        actual: f64,
        tolerance: f64,
        comparison: Comparison,
        pass: bool,
    ) {
        self.checks.push(Check {
            fixture: self.fixture.to_string(),
            quantity: quantity.into(),
            expected,
            actual,
            tolerance,
            comparison,
            pass,
        });
    }
}

/// Runs the named fixtures (all of them when `only` is empty) in the order
/// of [`FIXTURES`].
pub fn run(only: &[String], scale: f64) -> Result<HarnessReport, CliError> {
    if let Some(bad) = only.iter().find(|n| !FIXTURES.contains(&n.as_str())) {
        return Err(CliError::Parse(format!(
            "unknown fixture `{bad}`; available: {}",
            FIXTURES.join(", ")
        )));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(CliError::Validation(format!(
            "tolerance scale must be a nonnegative number, got {scale}"
        )));
    }
    let start = Instant::now();
    let mut checks = Vec::new();
    for name in FIXTURES {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let mut rec = Recorder {
            fixture: name,
            scale,
            checks: Vec::new(),
        };
        match name {
            "example1" => two_agents(&mut rec)?,
            "example2" => best_case_three(&mut rec)?,
            "example3" => best_case_four(&mut rec)?,
            "cqlf" => quadratic_certificate(&mut rec)?,
            "example7" => worst_case_three(&mut rec)?,
            "example8" => singular_worst_case(&mut rec)?,
            _ => unreachable!(),
        }
        checks.extend(rec.checks);
    }
    Ok(HarnessReport {
        checks,
        tolerance_scale: scale,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn cost_of(prob: &OCProblem, u: &PiecewiseControl) -> Result<(DVector<f64>, f64), CliError> {
    let x = final_state(&prob.sys.raw_matrices(), &prob.x0, u)?;
    let v = consensus_distance(&x);
    Ok((x, v))
}

fn baseline(prob: &OCProblem, k: usize) -> Result<f64, CliError> {
    let u = PiecewiseControl::constant(vertex(k, prob.inputs()), prob.horizon)?;
    Ok(cost_of(prob, &u)?.1)
}

fn labels(seq: &[usize]) -> String {
    let s: Vec<String> = seq.iter().map(|k| format!("A{}", k + 1)).collect();
    s.join(",")
}

fn signs(s: &[f64]) -> String {
    s.iter().map(|v| if *v > 0.0 { '+' } else { '-' }).collect()
}

/// Reference control evaluated at the reference times.
fn reference(rec: &mut Recorder, prob: &OCProblem, sol: &BangBangSolution) -> Result<(), CliError> {
    let (x, v) = cost_of(prob, &sol.control(prob))?;
    for (i, (a, e)) in x.iter().zip(&sol.final_state).enumerate() {
        rec.within(format!("x{}(T), reference control", i + 1), *e, *a, 1e-5);
    }
    rec.within("V(x(T)), reference control", sol.cost, v, 1e-5);
    Ok(())
}

/// Sign of `m_1 - m_2` on the reference arcs. Under `lambda(T) = s P x(T)`
/// the maximum principle selects the subsystem with the smaller `m_i`, so
/// the first subsystem is active exactly where the sign is negative.
fn sign_pattern(rec: &mut Recorder, prob: &OCProblem, sol: &BangBangSolution) -> Result<(), CliError> {
    let expected: Vec<f64> = sol.sequence.iter().map(|&k| if k == 0 { -1.0 } else { 1.0 }).collect();
    let analysis = consensus_core::optimal_control::analyze_control(prob, &sol.control(prob), 64)?;
    let got = analysis.switching.arc_signs(0, 1, &sol.arc_edges(prob.horizon));
    let pass = got.len() == expected.len() && got.iter().zip(&expected).all(|(g, e)| *g == Some(*e));
    rec.holds(
        format!("sign of m1-m2 on arcs is {} at every sample", signs(&expected)),
        pass,
    );
    Ok(())
}

fn two_agents(rec: &mut Recorder) -> Result<(), CliError> {
    // tr A1 = -3 < tr A2 = -1, so e^1 is the unique best control
    let sys = SwitchedSystem::new(vec![
        ConsensusMatrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]])?,
        ConsensusMatrix::from_rows(&[vec![-0.5, 0.5], vec![0.5, -0.5]])?,
    ])?;
    let x0 = DVector::from_vec(vec![0.0, 1.0]);
    let prob = OCProblem::new(sys.clone(), x0, 1.0, Sense::Minimize)?;
    let report = solve_analytic_n2(&prob)?;
    rec.within(
        "V(x(T)) = V(x0) exp(2 tr(A1) T)",
        0.5 * (-6.0f64).exp(),
        report.cost,
        1e-12,
    );
    rec.holds(
        "optimal control is the constant e^1",
        report.method == Method::AnalyticN2 && report.control.vertex_sequence(1e-12) == Some(vec![0]),
    );
    let bb = solve_bang_bang(&prob, &BangBangOptions::default())?;
    rec.within("bang-bang search agrees", report.cost, bb.cost, 1e-12);

    let worst = OCProblem::new(sys.clone(), prob.x0.clone(), 1.0, Sense::Maximize)?;
    let report = solve_analytic_n2(&worst)?;
    rec.within(
        "worst case V(x0) exp(2 tr(A2) T)",
        0.5 * (-2.0f64).exp(),
        report.cost,
        1e-12,
    );

    let at_consensus = OCProblem::new(sys, DVector::from_vec(vec![0.7, 0.7]), 1.0, Sense::Minimize)?;
    let report = solve_analytic_n2(&at_consensus)?;
    rec.within("consensus start has cost 0", 0.0, report.cost, 0.0);
    rec.holds(
        "consensus start makes every control optimal",
        report.flags.every_control_optimal,
    );
    Ok(())
}

fn best_case_three(rec: &mut Recorder) -> Result<(), CliError> {
    let prob = fixtures::best_case_three();
    let sol = fixtures::best_case_three_solution();
    reference(rec, &prob, &sol)?;
    for (k, b) in fixtures::BEST_CASE_THREE_BASELINES.iter().enumerate() {
        rec.within(format!("V(x(T)) under A{} alone", k + 1), *b, baseline(&prob, k)?, 1e-5);
    }
    let bb = solve_bang_bang(&prob, &BangBangOptions::default())?;
    rec.holds(
        format!("solver sequence is {}", labels(&sol.sequence)),
        bb.control.vertex_sequence(1e-12).as_deref() == Some(&sol.sequence[..]),
    );
    let tau = bb.control.switch_times().first().copied().unwrap_or(f64::NAN);
    rec.within("solver switch time", sol.switch_times[0], tau, 1e-3);
    rec.within("solver V(x(T))", sol.cost, bb.cost, 1e-4);
    rec.holds(
        "solver control satisfies the maximum principle",
        bb.mp_residual < 1e-4 * bb.mp_scale(),
    );
    sign_pattern(rec, &prob, &sol)
}

fn best_case_four(rec: &mut Recorder) -> Result<(), CliError> {
    let prob = fixtures::best_case_four();
    let sol = fixtures::best_case_four_solution();
    reference(rec, &prob, &sol)?;
    let bb = solve_bang_bang(&prob, &BangBangOptions::default())?;
    rec.holds(
        format!("solver sequence is {}", labels(&sol.sequence)),
        bb.control.vertex_sequence(1e-12).as_deref() == Some(&sol.sequence[..]),
    );
    let times = bb.control.switch_times();
    for (k, t) in sol.switch_times.iter().enumerate() {
        let got = times.get(k).copied().unwrap_or(f64::NAN);
        rec.within(format!("solver switch time {}", k + 1), *t, got, 2e-3);
    }
    rec.within("solver V(x(T))", sol.cost, bb.cost, 1e-4);
    rec.holds(
        "solver control satisfies the maximum principle",
        bb.mp_residual < 1e-4 * bb.mp_scale(),
    );
    sign_pattern(rec, &prob, &sol)
}

fn quadratic_certificate(rec: &mut Recorder) -> Result<(), CliError> {
    let sys = SwitchedSystem::new(fixtures::three_agent_pair())?;
    let red = reduce(&sys, &default_basis(3))?;
    let want = fixtures::three_agent_pair_reduced();
    for k in 0..2 {
        let diff = (&red.bar_matrices[k] - &want[k]).amax();
        rec.within(format!("reduced A{} entries (max deviation)", k + 1), 0.0, diff, 0.0);
    }
    let m3 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 3.0;
    rec.within(
        "metric M for n = 3 (max deviation)",
        0.0,
        (&red.metric - m3).amax(),
        0.0,
    );
    let two = SwitchedSystem::new(vec![ConsensusMatrix::zeros(2)])?;
    rec.within(
        "metric M for n = 2",
        0.5,
        reduce(&two, &default_basis(2))?.metric[(0, 0)],
        0.0,
    );

    let (y, q) = fixtures::three_agent_cqlf();
    for k in 0..2 {
        let got = lyapunov_residual(&y, &red.bar_matrices[k]);
        rec.within(
            format!("Q{} = -(Y Z{k1} + Z{k1}' Y) (max deviation)", k + 1, k1 = k + 1),
            0.0,
            (&got - &q[k]).amax(),
            1e-10,
        );
        let min_eig = got.symmetric_eigen().eigenvalues.min();
        rec.holds(format!("Q{} is positive definite", k + 1), min_eig > 1e-10);
    }
    let found = matches!(
        cqlf_search(&red.bar_matrices[0], &red.bar_matrices[1])?,
        CqlfOutcome::Found(_)
    );
    rec.holds("certificate search finds a common Lyapunov matrix", found);
    let verdict = ucc_decide_n3_r2(sys.matrix(0), sys.matrix(1))?;
    rec.holds(
        "pair converges to consensus under every switching",
        verdict.decision == UCCDecision::UCC,
    );
    Ok(())
}

fn worst_case_three(rec: &mut Recorder) -> Result<(), CliError> {
    let prob = fixtures::worst_case_three();
    let sol = fixtures::worst_case_three_solution();
    reference(rec, &prob, &sol)?;
    for (k, b) in fixtures::WORST_CASE_THREE_BASELINES.iter().enumerate() {
        rec.within(format!("V(x(T)) under A{} alone", k + 1), *b, baseline(&prob, k)?, 1e-5);
    }
    let bb = solve_bang_bang(&prob, &BangBangOptions::default())?;
    rec.holds(
        format!("solver sequence is {}", labels(&sol.sequence)),
        bb.control.vertex_sequence(1e-12).as_deref() == Some(&sol.sequence[..]),
    );
    let tau = bb.control.switch_times().first().copied().unwrap_or(f64::NAN);
    rec.within("solver switch time", sol.switch_times[0], tau, 1e-3);
    rec.within("solver V(x(T))", sol.cost, bb.cost, 1e-4);
    rec.holds(
        "solver control satisfies the maximum principle",
        bb.mp_residual < 1e-4 * bb.mp_scale(),
    );
    sign_pattern(rec, &prob, &sol)
}

fn singular_worst_case(rec: &mut Recorder) -> Result<(), CliError> {
    let prob = fixtures::singular_worst_case();
    let (value, times) = fixtures::SINGULAR_BEST_BANG_BANG;
    let bb = solve_bang_bang(&prob, &BangBangOptions::default().with_max_switches(2))?;
    rec.within("best bang-bang V(x(T)), at most 2 switches", value, bb.cost, 1e-4);
    let sw = bb.control.switch_times();
    let (t1, t2) = match sw {
        [a, b] => (*a, b - a),
        _ => (f64::NAN, f64::NAN),
    };
    rec.within("first switch time", times[0], t1, 5e-3);
    rec.within("middle arc length", times[1], t2, 5e-3);

    let relaxed = solve_relaxed(&prob, &RelaxedOptions::default())?;
    rec.at_least(
        "relaxed V(x(T))",
        fixtures::singular_worst_case_value(),
        relaxed.cost,
        1e-3,
    );
    let scan = constant_control_scan(&prob, 100)?;
    rec.within("best constant weight on A1", 0.5, scan.control.values()[0][0], 1e-3);
    rec.within(
        "best constant V(x(T)) = 2/e",
        fixtures::singular_worst_case_value(),
        scan.cost,
        1e-5,
    );
    let cv = cross_validate(prob.sense, &bb, &relaxed);
    rec.holds(
        "singular signature: relaxed beats bang-bang",
        cv.singular && relaxed.cost > bb.cost,
    );
    Ok(())
}
