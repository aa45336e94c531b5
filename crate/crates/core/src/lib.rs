//! Analysis of switched linear consensus networks.
//!
//! The crate models `x' = A_sigma(t) x` with consensus matrices `A_i`, its
//! convexification `x' = (sum_i u_i A_i) x` over simplex-valued controls,
//! and answers three kinds of questions about it:
//!
//! * which switching law drives the agents closest to (or farthest from)
//!   consensus at a fixed horizon ([`optimal_control`]),
//! * how the problem looks after quotienting out the consensus line
//!   ([`reduction`]),
//! * whether every switching law leads to consensus ([`stability`]).

pub mod consensus;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod fixtures;
pub mod optimal_control;
pub mod reduction;
pub mod stability;
pub mod tolerances;

pub use consensus::{
    average, consensus_distance, diagnose, diameter, disagreement_vector, permute_system, projection_matrix,
    ConsensusMatrix, SwitchedSystem,
};
pub use dynamics::{
    propagate, propagate_adjoint, propagate_general, system_matrix, AdjointPath, PiecewiseControl, Trajectory,
};
pub use error::{Error, Result};
pub use expm::{expm, matrix_exponential};
pub use optimal_control::{
    compute_reduced_mp, compute_switching_functions, constant_control_scan, cross_validate, evaluate_mp_residual,
    solve_analytic_n2, solve_bang_bang, solve_relaxed, BangBangOptions, Method, OCProblem, OptimizationReport,
    RelaxedOptions, Sense, SwitchingFunctionPath,
};
pub use reduction::{
    default_basis, lifted_diameter, metric_norm_sq, reduce, reduce_state, ReducedSystem, ReductionBasis,
};
pub use stability::{
    cqlf_search, digraph_of, has_rooted_out_branching, hull_branching_check_n3, hurwitz_segment_2x2, ucc_decide_n3_r2,
    ucc_sample_check, CqlfOutcome, HullCheck, QuadraticCertificate, UCCDecision, UCCVerdict, WeightedDigraph,
};
pub use tolerances::Tolerances;
