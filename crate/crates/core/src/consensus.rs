//! Consensus matrices and the distance-to-consensus functionals.
//!
//! A consensus matrix is Metzler (nonnegative off-diagonal entries) with zero
//! row sums, so every multiple of `1_n` is an equilibrium of `x' = A x`. The
//! quantities defined here measure how far a state is from that line:
//!
//! * `V(x) = sum_i (x_i - Ave(x))^2 = x' P x` with `P = I - (1/n) 1 1'`,
//! * the disagreement vector `delta(x) = P x`, so that `V = delta' delta`,
//! * the diameter `max_i x_i - min_i x_i`, which never increases along a
//!   consensus flow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// A validated consensus matrix: Metzler with rows summing exactly to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConsensusMatrix {
    entries: DMatrix<f64>,
}

impl ConsensusMatrix {
    /// Validates `raw` with the default tolerances.
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(raw, &Tolerances::default())
    }

    /// Checks the Metzler and zero-row-sum conditions, then re-centers each
    /// diagonal entry so that `A 1 = 0` holds exactly.
    ///
    /// Off-diagonal entries in `[-tol, 0)` are treated as rounding noise and
    /// clamped to zero.
    pub fn with_tolerances(raw: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if let Some(first) = diagnose(&raw, tol).into_iter().next() {
            return Err(first);
        }
        let rows = raw.nrows();
        let cols = raw.ncols();
        let mut entries = raw;
        for i in 0..rows {
            let mut off = 0.0;
            for j in 0..cols {
                if i != j {
                    if entries[(i, j)] < 0.0 {
                        entries[(i, j)] = 0.0;
                    }
                    off += entries[(i, j)];
                }
            }
            entries[(i, i)] = -off;
        }
        Ok(Self { entries })
    }

    /// Builds a matrix from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.entries)
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConsensusMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<ConsensusMatrix> for Vec<Vec<f64>> {
    fn from(m: ConsensusMatrix) -> Self {
        m.to_rows()
    }
}

/// Every reason `raw` fails to be a consensus matrix; empty when it is one.
///
/// Shape and finiteness problems are reported alone, since the remaining
/// checks are meaningless without them.
pub fn diagnose(raw: &DMatrix<f64>, tol: &Tolerances) -> Vec<Error> {
    let (rows, cols) = raw.shape();
    if rows != cols {
        return vec![Error::NotSquare { rows, cols }];
    }
    if rows == 0 {
        return vec![Error::Empty];
    }
    let non_finite: Vec<Error> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|&(i, j)| !raw[(i, j)].is_finite())
        .map(|(row, col)| Error::NonFinite { row, col })
        .collect();
    if !non_finite.is_empty() {
        return non_finite;
    }
    let row_tol = tol.row_sum_for(raw.amax());
    let mut found = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if i != j && raw[(i, j)] < -row_tol {
                found.push(Error::NegativeOffDiagonal {
                    row: i,
                    col: j,
                    value: raw[(i, j)],
                });
            }
        }
    }
    for i in 0..rows {
        let sum: f64 = raw.row(i).iter().sum();
        if sum.abs() > row_tol {
            found.push(Error::RowSumViolation {
                row: i,
                sum,
                tolerance: row_tol,
            });
        }
    }
    found
}

/// An ordered family `A_1, ..., A_r` of consensus matrices of a common size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ConsensusMatrix>", into = "Vec<ConsensusMatrix>")]
pub struct SwitchedSystem {
    matrices: Vec<ConsensusMatrix>,
}

impl SwitchedSystem {
    pub fn new(matrices: Vec<ConsensusMatrix>) -> Result<Self> {
        let first = matrices.first().ok_or(Error::NoSubsystems)?;
        let n = first.dim();
        if let Some(bad) = matrices.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.dim(),
            });
        }
        Ok(Self { matrices })
    }

    /// Number of agents.
    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Number of subsystems.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrices(&self) -> &[ConsensusMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &ConsensusMatrix {
        &self.matrices[i]
    }

    pub fn raw_matrices(&self) -> Vec<DMatrix<f64>> {
        self.matrices.iter().map(|m| m.as_matrix().clone()).collect()
    }

    pub fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<ConsensusMatrix>> for SwitchedSystem {
    type Error = Error;

    fn try_from(m: Vec<ConsensusMatrix>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<SwitchedSystem> for Vec<ConsensusMatrix> {
    fn from(s: SwitchedSystem) -> Self {
        s.matrices
    }
}

/// `Ave(x) = (1/n) 1' x`.
pub fn average(x: &DVector<f64>) -> f64 {
    x.mean()
}

/// `V(x) = sum_i (x_i - Ave(x))^2`.
pub fn consensus_distance(x: &DVector<f64>) -> f64 {
    let ave = average(x);
    x.iter().map(|v| (v - ave) * (v - ave)).sum()
}

/// `delta(x) = x - Ave(x) 1 = P x`.
pub fn disagreement_vector(x: &DVector<f64>) -> DVector<f64> {
    let ave = average(x);
    let d = x.map(|v| v - ave);
    // second pass: the first leaves a sum of order eps |x|, not eps |d|
    let drift = average(&d);
    d.map(|v| v - drift)
}

/// `max_i x_i - min_i x_i`.
pub fn diameter(x: &DVector<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.max() - x.min()
}

/// `P = I - (1/n) 1 1'`.
pub fn projection_matrix(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

/// Permutation matrix `G` with `(G x)_i = x_{perm[i]}` (zero-based).
pub fn permutation_matrix(perm: &[usize]) -> Result<DMatrix<f64>> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    let mut g = DMatrix::zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        g[(i, p)] = 1.0;
    }
    Ok(g)
}

/// Relabels the agents: every `A_i` becomes `G A_i G'`.
pub fn permute_system(sys: &SwitchedSystem, perm: &[usize]) -> Result<SwitchedSystem> {
    if perm.len() != sys.dim() {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    let g = permutation_matrix(perm)?;
    let matrices = sys
        .matrices()
        .iter()
        .map(|a| ConsensusMatrix::new(&g * a.as_matrix() * g.transpose()))
        .collect::<Result<Vec<_>>>()?;
    SwitchedSystem::new(matrices)
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Empty);
    }
    let ncols = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair_a1() -> Vec<Vec<f64>> {
        vec![vec![-3.0, 3.0, 0.0], vec![2.0, -2.0, 0.0], vec![0.0, 0.01, -0.01]]
    }

    #[test]
    fn accepts_metzler_zero_row_sum() {
        let a = ConsensusMatrix::from_rows(&pair_a1()).unwrap();
        assert_eq!(a.dim(), 3);
        let ones = DVector::from_element(3, 1.0);
        assert_eq!(a.as_matrix() * ones, DVector::zeros(3));
    }

    #[test]
    fn accepts_zero_matrix() {
        let a = ConsensusMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(a.trace(), 0.0);
    }

    #[test]
    fn rejects_negative_off_diagonal() {
        let raw = vec![vec![-1.0, -0.5, 1.5], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        let err = ConsensusMatrix::from_rows(&raw).unwrap_err();
        assert_eq!(
            err,
            Error::NegativeOffDiagonal {
                row: 0,
                col: 1,
                value: -0.5
            }
        );
        assert!(err.to_string().contains("(1, 2)"));
    }

    #[test]
    fn rejects_row_sum_violation() {
        let raw = vec![vec![-1.0, 1.0], vec![1.0, -0.5]];
        assert!(matches!(
            ConsensusMatrix::from_rows(&raw),
            Err(Error::RowSumViolation { row: 1, .. })
        ));
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let m = DMatrix::zeros(2, 3);
        assert!(matches!(ConsensusMatrix::new(m), Err(Error::NotSquare { .. })));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(ConsensusMatrix::new(m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn recenters_diagonal_exactly() {
        // row sums of order 1e-13 pass the check and are removed
        let raw = vec![
            vec![-0.1 - 0.2 + 1e-13, 0.1, 0.2],
            vec![0.3, -0.3, 0.0],
            vec![0.0, 0.7, -0.7],
        ];
        let a = ConsensusMatrix::from_rows(&raw).unwrap();
        let m = a.as_matrix();
        assert_eq!(m[(0, 0)], -(0.1 + 0.2));
        for i in 0..3 {
            assert!(m.row(i).sum().abs() <= 1e-16);
        }
    }

    #[test]
    fn distance_examples() {
        let x = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        assert_relative_eq!(consensus_distance(&x), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(average(&x), 5.0 / 3.0, epsilon = 1e-15);
        let d = disagreement_vector(&x);
        assert_relative_eq!(d[0], -2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(d[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(diameter(&x), 1.0);

        let c = DVector::from_element(4, 2.5);
        assert_eq!(consensus_distance(&c), 0.0);
        assert_eq!(diameter(&c), 0.0);
        assert_eq!(average(&c), 2.5);

        let y = DVector::from_vec(vec![1.0, -1.9, 0.9, -2.0]);
        assert_relative_eq!(average(&y), -0.5, epsilon = 1e-15);
        assert_relative_eq!(diameter(&y), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn reported_final_state_distance() {
        let x = DVector::from_vec(vec![1.552900, 1.692310, 1.996691]);
        assert!((consensus_distance(&x) - 0.103011).abs() < 1e-5);
    }

    #[test]
    fn projection_is_idempotent_and_symmetric() {
        for n in 1..8 {
            let p = projection_matrix(n);
            assert!((&p * &p - &p).amax() < 1e-12);
            assert!((&p - p.transpose()).amax() == 0.0);
            let ones = DVector::from_element(n, 1.0);
            assert!((&p * ones).amax() < 1e-15);
        }
    }

    #[test]
    fn permutation_swapping_agents_two_and_four() {
        let a1 = ConsensusMatrix::from_rows(&[
            vec![-1.0, 1.0, 0.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, -2.0, 2.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap();
        let a2 = ConsensusMatrix::from_rows(&[
            vec![-1.0, 0.0, 0.0, 1.0],
            vec![0.0, -1.0, 1.0, 0.0],
            vec![0.0, 2.0, -2.0, 0.0],
            vec![1.0, 0.0, 0.0, -1.0],
        ])
        .unwrap();
        let sys = SwitchedSystem::new(vec![a2]).unwrap();
        let permuted = permute_system(&sys, &[0, 3, 2, 1]).unwrap();
        assert_eq!(permuted.matrix(0), &a1);

        let same = permute_system(&sys, &[0, 1, 2, 3]).unwrap();
        assert_eq!(same, sys);
    }

    #[test]
    fn invalid_permutations() {
        let sys = SwitchedSystem::new(vec![ConsensusMatrix::zeros(3)]).unwrap();
        assert!(permute_system(&sys, &[0, 0, 1]).is_err());
        assert!(permute_system(&sys, &[0, 1]).is_err());
        assert!(permute_system(&sys, &[0, 1, 3]).is_err());
    }

    #[test]
    fn system_rejects_mixed_dimensions() {
        let err = SwitchedSystem::new(vec![ConsensusMatrix::zeros(2), ConsensusMatrix::zeros(3)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        assert_eq!(SwitchedSystem::new(vec![]), Err(Error::NoSubsystems));
    }
}
