//! End-to-end run of one reduction: build, validate, solve the source,
//! lift, tally, and (for small `m`) search the structured family.

use serde::{Deserialize, Serialize};

use crate::election::{evaluate, Evaluation};
use crate::error::Result;
use crate::nmts::{solve_2nmts, NmtsSolution, TwoNmtsInstance};
use crate::rational::Rational;
use crate::reductions::{
    lifted_profile, structured_search, validate_reduction, BuildOptions, ConstructionRegistry,
    Params, ReductionArtifact, StructuredSearch, ValidationReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub build: BuildOptions,
    /// Largest `m` for which the `(m!)²` structured search runs.
    pub structured_limit: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { build: BuildOptions::default(), structured_limit: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub reduction: String,
    pub w: Rational,
    pub params: Params,
    pub fstar: Rational,
    pub solver_answer: bool,
    pub solution: Option<NmtsSolution>,
    /// Whether the lifted ballots make the target a co-winner; absent when
    /// there is nothing to lift.
    pub lift_success: Option<bool>,
    pub evaluation: Option<Evaluation>,
    pub structured: Option<StructuredSearch>,
    pub validation: ValidationReport,
    pub verdict: bool,
    /// Verdict, solver, structured search and validator all agree.
    pub consistent: bool,
}

pub fn run_pipeline(
    instance: &TwoNmtsInstance,
    w: Rational,
    options: &PipelineOptions,
) -> Result<(ReductionArtifact, PipelineReport)> {
    let registry = ConstructionRegistry::default();
    let construction = registry.dispatch(w, instance.variant)?;
    let artifact = construction.build(instance, w, &options.build)?;
    let validation = validate_reduction(&artifact);
    let solution = solve_2nmts(instance)?;
    let evaluation = match &solution {
        Some(s) => Some(evaluate(&lifted_profile(&artifact, s)?)?),
        None => None,
    };
    let lift_success = evaluation.as_ref().map(|e| e.success);
    let structured = if instance.m <= options.structured_limit {
        Some(structured_search(&artifact)?)
    } else {
        None
    };
    let structured_found = structured.as_ref().map(|s| s.successes > 0);
    let verdict = lift_success.or(structured_found).unwrap_or(false);
    let solver_answer = solution.is_some();
    let consistent = verdict == solver_answer
        && structured_found.is_none_or(|f| f == solver_answer)
        && validation.passed;
    let report = PipelineReport {
        reduction: construction.name().to_string(),
        w,
        params: artifact.params.clone(),
        fstar: artifact.fstar,
        solver_answer,
        solution,
        lift_success,
        evaluation,
        structured,
        validation,
        verdict,
        consistent,
    };
    Ok((artifact, report))
}
