//! Reference problems and their known solutions, shared by tests and the
//! regression harness.

use nalgebra::{DMatrix, DVector};

use crate::consensus::{ConsensusMatrix, SwitchedSystem};
use crate::dynamics::PiecewiseControl;
use crate::optimal_control::{OCProblem, Sense};

fn matrix(rows: &[&[f64]]) -> ConsensusMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    ConsensusMatrix::from_rows(&rows).expect("fixture matrices are consensus matrices")
}

fn problem(mats: Vec<ConsensusMatrix>, x0: &[f64], horizon: f64, sense: Sense) -> OCProblem {
    let sys = SwitchedSystem::new(mats).expect("fixture system is consistent");
    OCProblem::new(sys, DVector::from_column_slice(x0), horizon, sense).expect("fixture problem is consistent")
}

/// A reference bang-bang answer: `sequence[j]` (zero-based) is active
/// between consecutive entries of `[0, switch_times.., T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BangBangSolution {
    pub sequence: Vec<usize>,
    pub switch_times: Vec<f64>,
    pub final_state: Vec<f64>,
    pub cost: f64,
}

impl BangBangSolution {
    pub fn control(&self, prob: &OCProblem) -> PiecewiseControl {
        PiecewiseControl::bang_bang(&self.sequence, &self.switch_times, prob.horizon, prob.inputs())
            .expect("reference switch times lie inside the horizon")
    }

    /// `[0, switch_times.., T]`.
    pub fn arc_edges(&self, horizon: f64) -> Vec<f64> {
        let mut edges = vec![0.0];
        edges.extend(&self.switch_times);
        edges.push(horizon);
        edges
    }
}

/// Three agents, two topologies.
pub fn three_agent_pair() -> Vec<ConsensusMatrix> {
    vec![
        matrix(&[&[-3.0, 3.0, 0.0], &[2.0, -2.0, 0.0], &[0.0, 0.01, -0.01]]),
        matrix(&[&[-2.0, 2.0, 0.0], &[1.0, -1.0, 0.0], &[0.0, 0.1, -0.1]]),
    ]
}

/// Best case for [`three_agent_pair`], `T = 0.5`, `x0 = [1, 2, 2]`.
pub fn best_case_three() -> OCProblem {
    problem(three_agent_pair(), &[1.0, 2.0, 2.0], 0.5, Sense::Minimize)
}

pub fn best_case_three_solution() -> BangBangSolution {
    BangBangSolution {
        sequence: vec![1, 0],
        switch_times: vec![0.264834],
        final_state: vec![1.552900, 1.692310, 1.996691],
        cost: 0.103011,
    }
}

/// `V(x(T))` under each subsystem alone, for [`best_case_three`].
pub const BEST_CASE_THREE_BASELINES: [f64; 2] = [0.113772, 0.112562];

/// Four agents whose topologies are each disconnected.
pub fn four_agent_pair() -> Vec<ConsensusMatrix> {
    vec![
        matrix(&[
            &[-1.0, 1.0, 0.0, 0.0],
            &[1.0, -1.0, 0.0, 0.0],
            &[0.0, 0.0, -2.0, 2.0],
            &[0.0, 0.0, 1.0, -1.0],
        ]),
        matrix(&[
            &[-1.0, 0.0, 0.0, 1.0],
            &[0.0, -1.0, 1.0, 0.0],
            &[0.0, 2.0, -2.0, 0.0],
            &[1.0, 0.0, 0.0, -1.0],
        ]),
    ]
}

/// Best case for [`four_agent_pair`], `T = 2`, `x0 = [1, -1.9, 0.9, -2]`.
pub fn best_case_four() -> OCProblem {
    problem(four_agent_pair(), &[1.0, -1.9, 0.9, -2.0], 2.0, Sense::Minimize)
}

pub fn best_case_four_solution() -> BangBangSolution {
    BangBangSolution {
        sequence: vec![1, 0, 1],
        switch_times: vec![0.102230, 1.116872],
        final_state: vec![-0.614905, -0.721797, -0.744670, -0.740963],
        cost: 0.011265,
    }
}

/// Worst case for [`three_agent_pair`], `T = 1`, `x0 = [1, 2, 1]`.
pub fn worst_case_three() -> OCProblem {
    problem(three_agent_pair(), &[1.0, 2.0, 1.0], 1.0, Sense::Maximize)
}

pub fn worst_case_three_solution() -> BangBangSolution {
    BangBangSolution {
        sequence: vec![1, 0],
        switch_times: vec![0.346429],
        final_state: vec![1.635003, 1.648475, 1.034004],
        cost: 0.246319,
    }
}

pub const WORST_CASE_THREE_BASELINES: [f64; 2] = [0.234114, 0.229467];

/// A chain and its reverse; the worst case at `T = 1` from `[2, 1, 0]` is
/// attained by the constant control `u = [1/2, 1/2]` and by no bang-bang
/// control.
pub fn chain_pair() -> Vec<ConsensusMatrix> {
    vec![
        matrix(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[0.0, 0.0, 0.0]]),
        matrix(&[&[0.0, 0.0, 0.0], &[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]]),
    ]
}

pub fn singular_worst_case() -> OCProblem {
    problem(chain_pair(), &[2.0, 1.0, 0.0], 1.0, Sense::Maximize)
}

/// Worst case with the singular control: `2 / e`.
pub fn singular_worst_case_value() -> f64 {
    2.0 * (-1.0f64).exp()
}

/// Best bang-bang control with at most two switches for
/// [`singular_worst_case`]: cost and the two switch times.
pub const SINGULAR_BEST_BANG_BANG: (f64, [f64; 2]) = (0.72918, [0.2570, 0.4615]);

/// Reduced matrices of [`chain_pair`] in the difference basis.
pub fn chain_pair_reduced() -> [DMatrix<f64>; 2] {
    [
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0]),
    ]
}

/// Reduced matrices of [`three_agent_pair`] in the difference basis.
pub fn three_agent_pair_reduced() -> [DMatrix<f64>; 2] {
    [
        DMatrix::from_row_slice(2, 2, &[-5.0, 0.0, 2.0, -0.01]),
        DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 1.0, -0.1]),
    ]
}

/// Quadratic Lyapunov matrix common to [`three_agent_pair_reduced`], with
/// `-(Y Z_i + Z_i' Y)` for both matrices.
pub fn three_agent_cqlf() -> (DMatrix<f64>, [DMatrix<f64>; 2]) {
    (
        DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 4.0]),
        [
            DMatrix::from_row_slice(2, 2, &[1000.0, -8.0, -8.0, 0.08]),
            DMatrix::from_row_slice(2, 2, &[600.0, -4.0, -4.0, 0.8]),
        ],
    )
}
