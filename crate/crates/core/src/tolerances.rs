use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every accept/reject decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Row-sum tolerance, scaled by `max(1, max |a_ij|)`.
    pub row_sum: f64,
    /// Smallest eigenvalue accepted as positive definite.
    pub pd: f64,
    /// Singular values below `rank * sigma_max` count as zero.
    pub rank: f64,
    /// Control values must lie this close to the simplex.
    pub simplex: f64,
    /// Admissible `|1' lambda|` on a costate path.
    pub adjoint_sum: f64,
    /// First-column check of `S A S^-1`, scaled by the matrix norm.
    pub first_column: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            row_sum: 1e-12,
            pd: 1e-10,
            rank: 1e-9,
            simplex: 1e-12,
            adjoint_sum: 1e-9,
            first_column: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn row_sum_for(&self, max_abs_entry: f64) -> f64 {
        self.row_sum * max_abs_entry.max(1.0)
    }
}
