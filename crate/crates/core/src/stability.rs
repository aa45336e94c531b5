//! Uniform convergence to consensus (UCC) under arbitrary switching.
//!
//! A consensus matrix has a rooted-out branching iff its rank is `n - 1`.
//! For three agents and two topologies the switched system is UCC iff every
//! matrix of `co[A_1, A_2]` has one, which in the difference basis reads
//! `det(alpha bar_A_1 + (1 - alpha) bar_A_2) > 0` on `[0, 1]` (a quadratic
//! in `alpha`). A common quadratic Lyapunov function of the reduced pair is
//! then produced as an exhibit; for 2x2 Hurwitz pairs one exists iff
//! `co[Z_1, Z_2]` and `co[Z_1, Z_2^-1]` are Hurwitz.
//!
//! Graph convention: edge `i -> j` iff `a_ji > threshold`, weighted by
//! `a_ji`, i.e. agent `j` listens to agent `i`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::consensus::{disagreement_vector, ConsensusMatrix, SwitchedSystem};
use crate::dynamics::system_matrix;
use crate::error::{Error, Result};
use crate::optimal_control::nelder_mead::{minimize, NelderMeadOptions};
use crate::reduction::{default_basis, reduce};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

pub fn digraph_of(a: &ConsensusMatrix, threshold: f64) -> WeightedDigraph {
    let m = a.as_matrix();
    let n = a.dim();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(j, i)] > threshold {
                edges.push(Edge {
                    from: i,
                    to: j,
                    weight: m[(j, i)],
                });
            }
        }
    }
    WeightedDigraph { n, edges }
}

impl WeightedDigraph {
    fn reachable_from(&self, root: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        let mut seen = vec![false; self.n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Nodes from which every node is reachable.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&r| self.reachable_from(r).iter().all(|&s| s))
            .collect()
    }

    /// Combinatorial test by breadth-first search.
    pub fn has_rooted_out_branching(&self) -> bool {
        !self.roots().is_empty()
    }
}

/// Numerical rank of a consensus matrix against `rank_tol * sigma_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub branching: bool,
    /// Some singular value lies within a factor 10 of the threshold.
    pub marginal: bool,
}

pub fn rank_test(a: &DMatrix<f64>, rank_tol: f64) -> RankTest {
    let n = a.nrows();
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let smax = sv.first().copied().unwrap_or(0.0);
    let thr = rank_tol * smax;
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > thr).count()
    };
    let marginal = smax > 0.0 && sv.iter().any(|&s| s > thr / 10.0 && s <= thr * 10.0);
    RankTest {
        rank,
        singular_values: sv,
        branching: n >= 1 && rank + 1 == n,
        marginal,
    }
}

pub fn has_rooted_out_branching(a: &ConsensusMatrix) -> bool {
    rank_test(a.as_matrix(), Tolerances::default().rank).branching
}

/// `c0 + c1 alpha + c2 alpha^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub fn eval(&self, a: f64) -> f64 {
        self.c0 + a * (self.c1 + a * self.c2)
    }

    /// Minimizer and minimum over `[0, 1]`: endpoints and the vertex.
    pub fn min_on_unit(&self) -> (f64, f64) {
        let mut best = (0.0, self.c0);
        let one = self.eval(1.0);
        if one < best.1 {
            best = (1.0, one);
        }
        if self.c2 > 0.0 {
            let v = -self.c1 / (2.0 * self.c2);
            if v > 0.0 && v < 1.0 {
                let val = self.eval(v);
                if val < best.1 {
                    best = (v, val);
                }
            }
        }
        best
    }
}

/// `det(alpha Z1 + (1 - alpha) Z2)` for 2x2 matrices, as a polynomial.
pub fn det_polynomial(z1: &DMatrix<f64>, z2: &DMatrix<f64>) -> Quadratic {
    let d = z1 - z2;
    let y = z2;
    Quadratic {
        c0: y[(0, 0)] * y[(1, 1)] - y[(0, 1)] * y[(1, 0)],
        c1: y[(0, 0)] * d[(1, 1)] + d[(0, 0)] * y[(1, 1)] - y[(0, 1)] * d[(1, 0)] - d[(0, 1)] * y[(1, 0)],
        c2: d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HullCheck {
    AllBranching,
    /// Hull weight on `A_1` whose combination has no rooted-out branching.
    FailureAt(f64),
}

fn check_square_2(z: &DMatrix<f64>) -> Result<()> {
    if z.shape() != (2, 2) {
        return Err(Error::DimensionNotTwo(z.nrows()));
    }
    Ok(())
}

fn reduced_pair(a1: &ConsensusMatrix, a2: &ConsensusMatrix) -> Result<[DMatrix<f64>; 2]> {
    if a1.dim() != 3 {
        return Err(Error::DimensionNotThree(a1.dim()));
    }
    if a2.dim() != 3 {
        return Err(Error::DimensionNotThree(a2.dim()));
    }
    let sys = SwitchedSystem::new(vec![a1.clone(), a2.clone()])?;
    let red = reduce(&sys, &default_basis(3))?;
    Ok([red.bar_matrices[0].clone(), red.bar_matrices[1].clone()])
}

// Determinants below this are rank deficiencies: rank_tol relative to the
// squared scale of the hull.
fn det_threshold(z1: &DMatrix<f64>, z2: &DMatrix<f64>, tol: &Tolerances) -> f64 {
    let scale = z1.norm().max(z2.norm());
    tol.rank * scale * scale
}

/// Exact decision of rank 2 over `co[A_1, A_2]` for three agents.
pub fn hull_branching_check_n3(a1: &ConsensusMatrix, a2: &ConsensusMatrix) -> Result<HullCheck> {
    let [z1, z2] = reduced_pair(a1, a2)?;
    let poly = det_polynomial(&z1, &z2);
    let (alpha, min) = poly.min_on_unit();
    let thr = det_threshold(&z1, &z2, &Tolerances::default());
    Ok(if min > thr && min > 0.0 {
        HullCheck::AllBranching
    } else {
        HullCheck::FailureAt(alpha)
    })
}

/// Where the segment `alpha Z1 + (1 - alpha) Z2` first fails to be
/// Hurwitz (trace at the endpoints, determinant anywhere on `[0, 1]`).
pub fn hurwitz_segment_failure(z1: &DMatrix<f64>, z2: &DMatrix<f64>) -> Option<f64> {
    let t2 = z2.trace();
    let t1 = z1.trace();
    if t2 >= 0.0 {
        return Some(0.0);
    }
    if t1 >= 0.0 {
        return Some(1.0);
    }
    let (alpha, min) = det_polynomial(z1, z2).min_on_unit();
    (min <= 0.0).then_some(alpha)
}

/// Every matrix of `co[Z1, Z2]` is Hurwitz.
pub fn hurwitz_segment_2x2(z1: &DMatrix<f64>, z2: &DMatrix<f64>) -> bool {
    hurwitz_segment_failure(z1, z2).is_none()
}

/// `-(Y Z + Z' Y)`.
pub fn lyapunov_residual(y: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    -(y * z + z.transpose() * y)
}

fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCertificate {
    /// Row-major 2x2 `Y`.
    pub y: [[f64; 2]; 2],
    /// Smallest eigenvalue of `-(Y Z_i + Z_i' Y)` per matrix.
    pub residuals: Vec<f64>,
    pub y_min_eigenvalue: f64,
}

impl QuadraticCertificate {
    pub fn evaluate(y: &DMatrix<f64>, zs: &[DMatrix<f64>]) -> Self {
        QuadraticCertificate {
            y: [[y[(0, 0)], y[(0, 1)]], [y[(1, 0)], y[(1, 1)]]],
            residuals: zs.iter().map(|z| min_eig_sym(&lyapunov_residual(y, z))).collect(),
            y_min_eigenvalue: min_eig_sym(y),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.y[0][0], self.y[0][1], self.y[1][0], self.y[1][1]])
    }

    pub fn is_valid(&self, tol_pd: f64) -> bool {
        self.y_min_eigenvalue > tol_pd && self.residuals.iter().all(|&r| r > tol_pd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    /// `co[Z1, Z2]`
    Direct,
    /// `co[Z1, Z2^-1]`
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CqlfOutcome {
    Found(QuadraticCertificate),
    /// A segment condition fails, so no common quadratic function exists.
    NotFound {
        alpha: f64,
        segment: Segment,
    },
    /// The segment conditions hold but the search did not reach a valid
    /// exhibit; existence is still guaranteed.
    SearchStalled(QuadraticCertificate),
}

fn check_hurwitz(z: &DMatrix<f64>, index: usize) -> Result<()> {
    let trace = z.trace();
    let det = z.determinant();
    if trace < 0.0 && det > 0.0 {
        Ok(())
    } else {
        Err(Error::NotHurwitz { index, trace, det })
    }
}

fn y_of(p: &[f64]) -> DMatrix<f64> {
    // y1 = 1, y2 = e^p0 > 0, y3 = tanh(p1) sqrt(y2) keeps Y positive definite
    let y2 = p[0].exp();
    let y3 = p[1].tanh() * y2.sqrt();
    DMatrix::from_row_slice(2, 2, &[1.0, y3, y3, y2])
}

/// Searches `Y = [[1, y3], [y3, y2]]` with `-(Y Z_i + Z_i' Y)` positive
/// definite for both matrices: a log-spaced diagonal sweep over `y2`, then a
/// Nelder–Mead ascent of the normalized smallest residual.
pub fn cqlf_search(z1: &DMatrix<f64>, z2: &DMatrix<f64>) -> Result<CqlfOutcome> {
    cqlf_search_with(z1, z2, &Tolerances::default())
}

pub fn cqlf_search_with(z1: &DMatrix<f64>, z2: &DMatrix<f64>, tol: &Tolerances) -> Result<CqlfOutcome> {
    check_square_2(z1)?;
    check_square_2(z2)?;
    check_hurwitz(z1, 0)?;
    check_hurwitz(z2, 1)?;
    if let Some(alpha) = hurwitz_segment_failure(z1, z2) {
        return Ok(CqlfOutcome::NotFound {
            alpha,
            segment: Segment::Direct,
        });
    }
    let z2_inv = z2.clone().try_inverse().expect("Hurwitz matrices are invertible");
    if let Some(alpha) = hurwitz_segment_failure(z1, &z2_inv) {
        return Ok(CqlfOutcome::NotFound {
            alpha,
            segment: Segment::Inverse,
        });
    }

    let zs = [z1.clone(), z2.clone()];
    let score = |p: &[f64]| -> f64 {
        let y = y_of(p);
        let worst = zs
            .iter()
            .map(|z| min_eig_sym(&lyapunov_residual(&y, z)))
            .fold(f64::INFINITY, f64::min);
        worst / y.norm()
    };
    let mut best_p = [0.0, 0.0];
    let mut best = score(&best_p);
    for k in -160..=160 {
        let p = [k as f64 * 0.1 * std::f64::consts::LN_10, 0.0];
        let v = score(&p);
        if v > best {
            best = v;
            best_p = p;
        }
    }
    let done = |p: &[f64]| QuadraticCertificate::evaluate(&y_of(p), &zs).is_valid(tol.pd);
    if !done(&best_p) {
        let res = minimize(
            |p| -score(p),
            &best_p,
            &NelderMeadOptions {
                max_iters: 2000,
                diameter_tol: 1e-12,
                initial_step: 0.5,
            },
        );
        if -res.value > best {
            best_p = [res.x[0], res.x[1]];
        }
    }
    let cert = QuadraticCertificate::evaluate(&y_of(&best_p), &zs);
    Ok(if cert.is_valid(tol.pd) {
        CqlfOutcome::Found(cert)
    } else {
        CqlfOutcome::SearchStalled(cert)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UCCDecision {
    UCC,
    NotUCC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentCheck {
    Hurwitz,
    FailsAt(f64),
    /// `Z2` is numerically singular, so `co[Z1, Z2^-1]` is not formed.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCCCertificate {
    /// `det(alpha bar_A_1 + (1 - alpha) bar_A_2)`.
    pub det_polynomial: Quadratic,
    pub min_det: f64,
    pub direct_segment: SegmentCheck,
    pub inverse_segment: SegmentCheck,
    pub cqlf: CqlfOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UCCWitness {
    Certificate(UCCCertificate),
    Counterexample {
        alpha: f64,
        /// Constant control `[alpha, 1 - alpha]` that never reaches consensus.
        control: Vec<f64>,
        det_polynomial: Quadratic,
        /// A non-consensus equilibrium of the hull matrix at `alpha`.
        equilibrium: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCCVerdict {
    pub decision: UCCDecision,
    pub witness: UCCWitness,
    /// Some rank decision involved was within a factor 10 of its threshold.
    pub marginal: bool,
}

fn segment_check(z1: &DMatrix<f64>, z2: &DMatrix<f64>) -> SegmentCheck {
    match hurwitz_segment_failure(z1, z2) {
        None => SegmentCheck::Hurwitz,
        Some(a) => SegmentCheck::FailsAt(a),
    }
}

/// Unit vector in the kernel of `m` orthogonal to `1`, if any.
fn non_consensus_kernel_vector(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t?;
    let smax = svd.singular_values.max();
    let thr = Tolerances::default().rank * smax.max(f64::MIN_POSITIVE);
    let mut best: Option<DVector<f64>> = None;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= thr || smax == 0.0 {
            let v = disagreement_vector(&v_t.row(k).transpose());
            if best.as_ref().is_none_or(|b| v.norm() > b.norm()) {
                best = Some(v);
            }
        }
    }
    best.filter(|v| v.norm() > 1e-8).map(|v| v.normalize())
}

/// Theorem-level UCC decision for three agents and two topologies.
pub fn ucc_decide_n3_r2(a1: &ConsensusMatrix, a2: &ConsensusMatrix) -> Result<UCCVerdict> {
    let tol = Tolerances::default();
    let [z1, z2] = reduced_pair(a1, a2)?;
    let poly = det_polynomial(&z1, &z2);
    let (alpha, min_det) = poly.min_on_unit();
    let thr = det_threshold(&z1, &z2, &tol);
    let marginal = [a1, a2].iter().any(|a| rank_test(a.as_matrix(), tol.rank).marginal)
        || (thr > 0.0 && min_det > thr / 10.0 && min_det <= thr * 10.0);

    if !(min_det > thr && min_det > 0.0) {
        let hull = system_matrix(
            &SwitchedSystem::new(vec![a1.clone(), a2.clone()])?,
            &[alpha, 1.0 - alpha],
        )?;
        let equilibrium = non_consensus_kernel_vector(&hull)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default();
        return Ok(UCCVerdict {
            decision: UCCDecision::NotUCC,
            witness: UCCWitness::Counterexample {
                alpha,
                control: vec![alpha, 1.0 - alpha],
                det_polynomial: poly,
                equilibrium,
            },
            marginal,
        });
    }

    let direct_segment = segment_check(&z1, &z2);
    let inverse_segment = if z2.determinant().abs() < tol.pd {
        SegmentCheck::Inapplicable
    } else {
        let inv = z2.clone().try_inverse().expect("nonsingular");
        segment_check(&z1, &inv)
    };
    let cqlf = cqlf_search_with(&z1, &z2, &tol)?;
    Ok(UCCVerdict {
        decision: UCCDecision::UCC,
        witness: UCCWitness::Certificate(UCCCertificate {
            det_polynomial: poly,
            min_det,
            direct_segment,
            inverse_segment,
            cqlf,
        }),
        marginal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SampleScreen {
    /// No sampled hull matrix lacks a rooted-out branching. This is a
    /// necessary condition for UCC only, not a proof.
    NoObstruction {
        samples: usize,
    },
    FailureAt(Vec<f64>),
}

pub const SCREEN_DISCLAIMER: &str =
    "necessary condition only: no sampled convex combination lacks a rooted-out branching, which does not prove uniform convergence";

/// Rank test on the lattice `{k / (hull_samples - 1)}` of the weight simplex,
/// vertices first.
pub fn ucc_sample_check(sys: &SwitchedSystem, hull_samples: usize) -> Result<SampleScreen> {
    if hull_samples < 2 {
        return Err(Error::InvalidOption(format!(
            "hull_samples must be at least 2, got {hull_samples}"
        )));
    }
    let r = sys.len();
    let steps = hull_samples - 1;
    let tol = Tolerances::default();
    let mut points: Vec<Vec<usize>> = Vec::new();
    lattice(r, steps, &mut Vec::new(), &mut points);
    // vertices first, then by increasing number of active matrices
    points.sort_by_key(|p| p.iter().filter(|&&c| c > 0).count());
    let mut checked = 0;
    for p in points {
        let w: Vec<f64> = p.iter().map(|&c| c as f64 / steps as f64).collect();
        let m = system_matrix(sys, &w)?;
        checked += 1;
        if !rank_test(&m, tol.rank).branching {
            return Ok(SampleScreen::FailureAt(w));
        }
    }
    Ok(SampleScreen::NoObstruction { samples: checked })
}

fn lattice(r: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == r {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for c in (0..=remaining).rev() {
        prefix.push(c);
        lattice(r, remaining - c, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cm(rows: &[&[f64]]) -> ConsensusMatrix {
        ConsensusMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn digraph_convention() {
        let [a1, _] = <[ConsensusMatrix; 2]>::try_from(fixtures::three_agent_pair()).unwrap();
        let g = digraph_of(&a1, 0.0);
        let mut e: Vec<(usize, usize, f64)> = g.edges.iter().map(|e| (e.from, e.to, e.weight)).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(e, vec![(0, 1, 2.0), (1, 0, 3.0), (1, 2, 0.01)]);
        assert_eq!(g.roots(), vec![0, 1]);
        assert!(digraph_of(&ConsensusMatrix::zeros(3), 0.0).edges.is_empty());
    }

    #[test]
    fn block_disconnected_has_no_branching() {
        let pair = fixtures::four_agent_pair();
        let g = digraph_of(&pair[0], 0.0);
        assert!(!g.has_rooted_out_branching());
        assert!(!has_rooted_out_branching(&pair[0]));
        assert!(has_rooted_out_branching(&fixtures::three_agent_pair()[0]));
        assert!(!has_rooted_out_branching(&ConsensusMatrix::zeros(3)));
    }

    #[test]
    fn quadratic_minimum() {
        let q = Quadratic {
            c0: 1.0,
            c1: -2.0,
            c2: 1.0,
        };
        assert_eq!(q.min_on_unit(), (1.0, 0.0));
        let q = Quadratic {
            c0: 1.0,
            c1: -4.0,
            c2: 4.0,
        };
        assert_eq!(q.min_on_unit(), (0.5, 0.0));
        let q = Quadratic {
            c0: 2.0,
            c1: 1.0,
            c2: -5.0,
        };
        assert_eq!(q.min_on_unit(), (1.0, -2.0));
    }

    #[test]
    fn det_polynomial_matches_direct_evaluation() {
        let z1 = DMatrix::from_row_slice(2, 2, &[-5.0, 0.3, 2.0, -0.01]);
        let z2 = DMatrix::from_row_slice(2, 2, &[-3.0, -1.0, 1.0, -0.1]);
        let p = det_polynomial(&z1, &z2);
        for a in [0.0, 0.2, 0.5, 0.77, 1.0] {
            let m = &z1 * a + &z2 * (1.0 - a);
            assert!((p.eval(a) - m.determinant()).abs() < 1e-12);
        }
    }

    #[test]
    fn hull_checks() {
        let pair = fixtures::three_agent_pair();
        assert_eq!(
            hull_branching_check_n3(&pair[0], &pair[1]).unwrap(),
            HullCheck::AllBranching
        );
        let rank_one = cm(&[&[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(matches!(
            hull_branching_check_n3(&rank_one, &rank_one).unwrap(),
            HullCheck::FailureAt(_)
        ));
        assert_eq!(
            hull_branching_check_n3(&pair[0], &ConsensusMatrix::zeros(3)).unwrap(),
            HullCheck::FailureAt(0.0)
        );
        let four = fixtures::four_agent_pair();
        assert!(matches!(
            hull_branching_check_n3(&four[0], &four[1]),
            Err(Error::DimensionNotThree(4))
        ));
    }

    #[test]
    fn segments() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert!(hurwitz_segment_2x2(&-&i, &-&i));
        let [b1, b2] = fixtures::three_agent_pair_reduced();
        assert!(hurwitz_segment_2x2(&b1, &b2));
        let z2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(!hurwitz_segment_2x2(&-&i, &z2));
    }

    #[test]
    fn cqlf_examples() {
        let [b1, b2] = fixtures::three_agent_pair_reduced();
        match cqlf_search(&b1, &b2).unwrap() {
            CqlfOutcome::Found(c) => assert!(c.is_valid(1e-10)),
            other => panic!("{other:?}"),
        }
        let (y, qs) = fixtures::three_agent_cqlf();
        let scaled = QuadraticCertificate::evaluate(&(&y / 100.0), &[b1.clone(), b2.clone()]);
        assert!(scaled.is_valid(1e-10));
        assert_eq!(lyapunov_residual(&y, &b1), qs[0]);

        let minus_i = -DMatrix::<f64>::identity(2, 2);
        match cqlf_search(&minus_i, &minus_i).unwrap() {
            CqlfOutcome::Found(c) => {
                assert!(c.is_valid(1e-10));
            }
            other => panic!("{other:?}"),
        }
        let unstable = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            cqlf_search(&minus_i, &unstable),
            Err(Error::NotHurwitz { index: 1, .. })
        ));
    }

    #[test]
    fn cqlf_inverse_segment_failure() {
        // both Hurwitz, co[Z1, Z2] Hurwitz, but co[Z1, Z2^-1] is not
        let z1 = DMatrix::from_row_slice(2, 2, &[-1.0, 10.0, 0.0, -1.0]);
        let z2 = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 10.0, -1.0]);
        let direct = hurwitz_segment_2x2(&z1, &z2);
        let inv = z2.clone().try_inverse().unwrap();
        let inverse = hurwitz_segment_2x2(&z1, &inv);
        match cqlf_search(&z1, &z2).unwrap() {
            CqlfOutcome::NotFound { alpha, segment } => {
                let (a, b) = if segment == Segment::Direct {
                    (&z1, &z2)
                } else {
                    (&z1, &inv)
                };
                let m = a * alpha + b * (1.0 - alpha);
                assert!(m.trace() >= 0.0 || m.determinant() <= 0.0);
                assert!(!direct || !inverse);
            }
            other => panic!("expected NotFound, got {other:?}"),
        }
    }

    #[test]
    fn ucc_examples() {
        let pair = fixtures::three_agent_pair();
        let v = ucc_decide_n3_r2(&pair[0], &pair[1]).unwrap();
        assert_eq!(v.decision, UCCDecision::UCC);
        let UCCWitness::Certificate(c) = &v.witness else {
            panic!()
        };
        assert_eq!(c.direct_segment, SegmentCheck::Hurwitz);
        assert_eq!(c.inverse_segment, SegmentCheck::Hurwitz);
        assert!(matches!(c.cqlf, CqlfOutcome::Found(_)));

        let rank_one = cm(&[&[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let v = ucc_decide_n3_r2(&rank_one, &rank_one).unwrap();
        assert_eq!(v.decision, UCCDecision::NotUCC);
        let UCCWitness::Counterexample { equilibrium, .. } = &v.witness else {
            panic!()
        };
        let x = DVector::from_column_slice(equilibrium);
        assert!((rank_one.as_matrix() * &x).amax() < 1e-12);
        assert!(disagreement_vector(&x).norm() > 0.5);
    }

    #[test]
    fn sample_screen() {
        let pair = fixtures::three_agent_pair();
        let sys = SwitchedSystem::new(pair.clone()).unwrap();
        assert_eq!(
            ucc_sample_check(&sys, 11).unwrap(),
            SampleScreen::NoObstruction { samples: 11 }
        );
        let with_zero = SwitchedSystem::new(vec![pair[0].clone(), ConsensusMatrix::zeros(3), pair[1].clone()]).unwrap();
        assert_eq!(
            ucc_sample_check(&with_zero, 5).unwrap(),
            SampleScreen::FailureAt(vec![0.0, 1.0, 0.0])
        );
        let copies = SwitchedSystem::new(vec![pair[0].clone(); 3]).unwrap();
        assert!(matches!(
            ucc_sample_check(&copies, 4).unwrap(),
            SampleScreen::NoObstruction { .. }
        ));
    }
}
