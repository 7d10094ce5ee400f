//! Predicated points-to analysis for a small SSA object language.
//!
//! The pipeline is: [`text::parse_program`] → [`solver::analyze`] (or
//! [`solver::analyze_baseline`]) → [`report`]. The [`oracle`] module holds
//! the concrete interpreter and program generator used to check soundness.

pub mod ir;
pub mod lattice;
pub mod oracle;
pub mod pvpg;
pub mod report;
pub mod solver;
pub mod text;
