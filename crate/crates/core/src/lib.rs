//! Two manipulators against two non-manipulators under Borda, one
//! non-manipulator weighted by `w`.
//!
//! For `w ≤ 1` the respective-reverse strategy always succeeds. For `w > 1`
//! the problem is hard; [`reductions`] builds instances from two-numerical
//! matching with target sums ([`nmts`]) and machine-checks every inequality
//! the constructions rely on.

pub mod election;
pub mod error;
pub mod manipulation;
pub mod nmts;
pub mod pipeline;
pub mod rational;
pub mod reductions;

pub use election::{ballot_from_scores, borda_totals, evaluate, winner_set, Ballot, Candidate, Evaluation, Profile};
pub use error::{Error, Result};
pub use manipulation::{brute_force_manipulation, respective_reverse, ManipulationResult, SearchConfig};
pub use nmts::{solve_2nmts, verify_solution, NmtsSolution, TwoNmtsInstance, Variant};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineReport};
pub use rational::Rational;
pub use reductions::{validate_reduction, ReductionArtifact, ValidationReport};
