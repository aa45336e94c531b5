//! Quotient of the consensus dynamics by the consensus line.
//!
//! With an invertible `S` whose first row is `1'` and whose other rows sum to
//! zero, `y = S x` satisfies `y' = (sum_i u_i S A_i S^-1) y` and the first
//! column of every `S A_i S^-1` vanishes. Dropping `y_1` leaves the
//! `(n-1)`-dimensional system `z' = (sum_i u_i bar_A_i) z` with `z = R S x`,
//! and `V(x) = z' M z` for a positive-definite metric `M`.
//!
//! Any `n x (n-1)` matrix `L` with `S L = [0; I]` up to multiples of `1` in
//! its columns maps `z` back to a disagreement-equivalent state. The default
//! difference basis admits the 0/1 lift `L_ik = [i < k]`, which keeps the
//! reduced matrices free of the `1/n` rounding present in `S^-1`.

use nalgebra::{DMatrix, DVector};

use crate::consensus::SwitchedSystem;
use crate::dynamics::{Flow, PiecewiseControl, Trajectory};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBasis {
    /// Rows are `s^1', ..., s^n'`.
    pub s: DMatrix<f64>,
    pub s_inv: DMatrix<f64>,
    /// `n x (n-1)` lift from reduced to full coordinates, equal to the last
    /// `n-1` columns of `S^-1` modulo multiples of `1` per column.
    pub lift: DMatrix<f64>,
}

/// Difference basis: `s^1 = 1`, `s^k = e^{k-1} - e^k` for `k = 2..n`.
pub fn default_basis(n: usize) -> ReductionBasis {
    assert!(n >= 2, "reduction needs at least two agents");
    let mut s = DMatrix::zeros(n, n);
    for j in 0..n {
        s[(0, j)] = 1.0;
    }
    for k in 1..n {
        s[(k, k - 1)] = 1.0;
        s[(k, k)] = -1.0;
    }
    // closed form of S^-1: first column 1/n, column k has (n-k)/n above row k
    // and -k/n from row k on (zero-based k = 1..n-1)
    let nf = n as f64;
    let s_inv = DMatrix::from_fn(n, n, |i, k| {
        if k == 0 {
            1.0 / nf
        } else if i < k {
            (n - k) as f64 / nf
        } else {
            -(k as f64) / nf
        }
    });
    let lift = DMatrix::from_fn(n, n - 1, |i, k| if i <= k { 1.0 } else { 0.0 });
    ReductionBasis { s, s_inv, lift }
}

impl ReductionBasis {
    /// Alternate basis hook. Only invertibility is checked here; [`reduce`]
    /// rejects bases that do not annihilate the consensus direction.
    pub fn from_matrix(s: DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if !s.is_square() || n < 2 {
            return Err(Error::InvalidBasis(format!(
                "basis must be square with n >= 2, got {:?}",
                s.shape()
            )));
        }
        let s_inv = s
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::InvalidBasis("basis matrix is singular".into()))?;
        let err = (&s * &s_inv - DMatrix::<f64>::identity(n, n)).amax();
        if err > 1e-10 {
            return Err(Error::InvalidBasis(format!(
                "ill-conditioned basis, |S S^-1 - I| = {err}"
            )));
        }
        let lift = s_inv.columns(1, n - 1).into_owned();
        Ok(Self { s, s_inv, lift })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// `S A S^-1`.
    pub fn transform(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.s * a * &self.s_inv
    }
}

/// `R`: the `(n-1) x n` selector dropping the first coordinate.
pub fn selector(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n - 1, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub bar_matrices: Vec<DMatrix<f64>>,
    /// `M = R (S^-1)' P S^-1 R'`.
    pub metric: DMatrix<f64>,
    pub basis: ReductionBasis,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn selector(&self) -> DMatrix<f64> {
        selector(self.basis.dim())
    }

    /// Exact propagation of `z' = (sum_i u_i bar_A_i) z`.
    pub fn propagate(&self, z0: &DVector<f64>, u: &PiecewiseControl, samples_per_segment: usize) -> Result<Trajectory> {
        Flow::for_matrices(&self.bar_matrices, u, samples_per_segment)?.forward(z0)
    }

    pub fn flow(&self, u: &PiecewiseControl, samples_per_segment: usize) -> Result<Flow> {
        Flow::for_matrices(&self.bar_matrices, u, samples_per_segment)
    }
}

/// Builds the reduced matrices and the metric.
pub fn reduce(sys: &SwitchedSystem, basis: &ReductionBasis) -> Result<ReducedSystem> {
    reduce_with(sys, basis, &Tolerances::default())
}

pub fn reduce_with(sys: &SwitchedSystem, basis: &ReductionBasis, tol: &Tolerances) -> Result<ReducedSystem> {
    let n = sys.dim();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: basis.dim(),
        });
    }
    let mut bar_matrices = Vec::with_capacity(sys.len());
    for a in sys.matrices() {
        let a = a.as_matrix();
        let full = basis.transform(a);
        let residual = full.column(0).amax();
        let scale = a.norm().max(1.0);
        if residual > tol.first_column * scale {
            return Err(Error::BasisNotAdapted { residual });
        }
        // A L first, then the difference rows of S
        let al = a * &basis.lift;
        let sal = &basis.s * al;
        bar_matrices.push(sal.rows(1, n - 1).into_owned());
    }
    let metric = metric_of_lift(&basis.lift);
    Ok(ReducedSystem {
        bar_matrices,
        metric,
        basis: basis.clone(),
    })
}

// L' P L = (n L'L - (L'1)(1'L)) / n, rounded once per entry
fn metric_of_lift(lift: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lift.nrows() as f64;
    let gram = lift.transpose() * lift;
    let col_sums: Vec<f64> = lift.column_iter().map(|c| c.sum()).collect();
    DMatrix::from_fn(lift.ncols(), lift.ncols(), |k, l| {
        (n * gram[(k, l)] - col_sums[k] * col_sums[l]) / n
    })
}

/// `z = R S x`.
pub fn reduce_state(x: &DVector<f64>, basis: &ReductionBasis) -> DVector<f64> {
    let y = &basis.s * x;
    y.rows(1, y.len() - 1).into_owned()
}

/// `z' M z`.
pub fn metric_norm_sq(z: &DVector<f64>, metric: &DMatrix<f64>) -> f64 {
    (z.transpose() * metric * z)[(0, 0)]
}

/// `max_i (Q z)_i - min_i (Q z)_i`, equal to the diameter of any state whose
/// reduced coordinates are `z`.
pub fn lifted_diameter(z: &DVector<f64>, basis: &ReductionBasis) -> f64 {
    let q = &basis.lift * z;
    q.max() - q.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{consensus_distance, diameter, ConsensusMatrix};

    fn sys_of(rows: &[&[Vec<f64>]]) -> SwitchedSystem {
        SwitchedSystem::new(rows.iter().map(|r| ConsensusMatrix::from_rows(r).unwrap()).collect()).unwrap()
    }

    #[test]
    fn default_basis_small_cases() {
        let b2 = default_basis(2);
        assert_eq!(b2.s, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        let b3 = default_basis(3);
        assert_eq!(
            b3.s,
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0])
        );
        for n in 2..9 {
            let b = default_basis(n);
            for k in 1..n {
                assert_eq!(b.s.row(k).sum(), 0.0);
            }
            let err = (&b.s * &b.s_inv - DMatrix::<f64>::identity(n, n)).amax();
            assert!(err < 1e-14);
            // lift differs from S^-1 columns by multiples of 1
            let q = b.s_inv.columns(1, n - 1);
            for k in 0..n - 1 {
                let d = &b.lift.column(k) - &q.column(k);
                assert!((d.max() - d.min()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_agent_reduction_is_the_trace() {
        let a = vec![vec![-0.7, 0.7], vec![1.9, -1.9]];
        let red = reduce(&sys_of(&[&a]), &default_basis(2)).unwrap();
        assert!((red.bar_matrices[0][(0, 0)] + 2.6).abs() < 1e-15);
        assert_eq!(red.metric, DMatrix::from_element(1, 1, 0.5));
    }

    #[test]
    fn three_agent_metric() {
        let red = reduce(
            &sys_of(&[&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]]),
            &default_basis(3),
        )
        .unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(red.metric, want);
        let eig = red.metric.clone().symmetric_eigen().eigenvalues;
        assert!((eig.min() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn three_agent_entry_formulas() {
        let (a12, a13, a21, a23, a31, a32) = (0.3, 1.1, 0.25, 2.0, 0.6, 0.45);
        let a = vec![
            vec![-a12 - a13, a12, a13],
            vec![a21, -a21 - a23, a23],
            vec![a31, a32, -a31 - a32],
        ];
        let red = reduce(&sys_of(&[&a]), &default_basis(3)).unwrap();
        let bar = &red.bar_matrices[0];
        let want = [-(a12 + a13 + a21), a23 - a13, a21 - a31, -(a23 + a31 + a32)];
        for (got, want) in bar.transpose().iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn reduced_state_examples() {
        let b = default_basis(3);
        let z = reduce_state(&DVector::from_vec(vec![2.0, 1.0, 0.0]), &b);
        assert_eq!(z, DVector::from_vec(vec![1.0, 1.0]));
        let z = reduce_state(&DVector::from_vec(vec![1.0, 2.0, 2.0]), &b);
        assert_eq!(z, DVector::from_vec(vec![-1.0, 0.0]));
        let z = reduce_state(&DVector::from_element(3, 4.2), &b);
        assert_eq!(z, DVector::zeros(2));
    }

    #[test]
    fn metric_norm_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(metric_norm_sq(&DVector::zeros(2), &m), 0.0);
        let z = DVector::from_element(2, (-0.5f64).exp());
        assert!((metric_norm_sq(&z, &m) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((metric_norm_sq(&z, &m) - 0.73576).abs() < 1e-5);
    }

    #[test]
    fn lifted_diameter_examples() {
        let b = default_basis(3);
        assert_eq!(lifted_diameter(&DVector::zeros(2), &b), 0.0);
        let x = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        assert_eq!(lifted_diameter(&reduce_state(&x, &b), &b), 1.0);
        let x = DVector::from_vec(vec![0.3, -2.0, 5.5, 1.0]);
        let b4 = default_basis(4);
        assert!((lifted_diameter(&reduce_state(&x, &b4), &b4) - diameter(&x)).abs() < 1e-14);
        assert!(
            (metric_norm_sq(
                &reduce_state(&x, &b4),
                &reduce(
                    &sys_of(&[&[vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]]]),
                    &b4
                )
                .unwrap()
                .metric
            ) - consensus_distance(&x))
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn rejects_unadapted_basis() {
        let a = vec![vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]];
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let basis = ReductionBasis::from_matrix(s).unwrap();
        assert!(matches!(
            reduce(&sys_of(&[&a]), &basis),
            Err(Error::BasisNotAdapted { .. })
        ));
        assert!(ReductionBasis::from_matrix(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn custom_adapted_basis_agrees_with_default() {
        let a = vec![vec![-1.0, 1.0, 0.0], vec![0.5, -2.5, 2.0], vec![1.0, 0.0, -1.0]];
        let sys = sys_of(&[&a]);
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 1.0, 1.0, -2.0]);
        let custom = reduce(&sys, &ReductionBasis::from_matrix(s).unwrap()).unwrap();
        let default = reduce(&sys, &default_basis(3)).unwrap();
        let ev = |m: &DMatrix<f64>| {
            let mut e: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        for (x, y) in ev(&custom.bar_matrices[0]).iter().zip(ev(&default.bar_matrices[0])) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
