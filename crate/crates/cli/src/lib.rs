//! Front end for `consensus-opt`: problem files, reports, CSV emission and
//! the reference-problem regression harness.

pub mod commands;
pub mod error;
pub mod harness;
pub mod problem;
pub mod report;

pub use error::CliError;
