use std::collections::BTreeMap;

use super::{
    brute_force_manipulation, exhaustive_manipulation, respective_reverse, ManipulationResult,
    SearchConfig,
};
use crate::election::{evaluate, Profile};
use crate::error::{Error, Result};

/// A way of choosing both manipulators' ballots for a profile.
pub trait ManipulationAlgorithm: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn manipulate(&self, profile: &Profile, config: &SearchConfig) -> Result<ManipulationResult>;
}

pub struct ReverseAlgorithm;

impl ManipulationAlgorithm for ReverseAlgorithm {
    fn name(&self) -> &'static str {
        "reverse"
    }

    fn description(&self) -> &'static str {
        "reverse each non-manipulator's ballot and promote the target; always succeeds for w <= 1"
    }

    fn manipulate(&self, profile: &Profile, _config: &SearchConfig) -> Result<ManipulationResult> {
        let (m1, m2) = respective_reverse(&profile.n1, &profile.n2, profile.target);
        let full = profile.without_manipulators().with_manipulators(m1.clone(), m2.clone())?;
        let eval = evaluate(&full)?;
        Ok(ManipulationResult {
            found: eval.success,
            // A failed reversal proves nothing for w > 1.
            complete: eval.success,
            m1: eval.success.then_some(m1),
            m2: eval.success.then_some(m2),
            witness_totals: eval.success.then_some(eval.totals),
        })
    }
}

pub struct OracleAlgorithm;

impl ManipulationAlgorithm for OracleAlgorithm {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn description(&self) -> &'static str {
        "exact pruned backtracking; refuses above the enumeration limit"
    }

    fn manipulate(&self, profile: &Profile, config: &SearchConfig) -> Result<ManipulationResult> {
        brute_force_manipulation(profile, config.enumeration_limit)
    }
}

pub struct ExhaustiveAlgorithm;

impl ManipulationAlgorithm for ExhaustiveAlgorithm {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn description(&self) -> &'static str {
        "every pair of manipulator ballots, no pruning; tiny instances only"
    }

    fn manipulate(&self, profile: &Profile, config: &SearchConfig) -> Result<ManipulationResult> {
        exhaustive_manipulation(profile, config.exhaustive_limit)
    }
}

/// Manipulation algorithms looked up by name.
pub struct AlgorithmRegistry {
    entries: BTreeMap<&'static str, Box<dyn ManipulationAlgorithm>>,
}

impl AlgorithmRegistry {
    pub fn empty() -> Self {
        AlgorithmRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, algorithm: Box<dyn ManipulationAlgorithm>) {
        self.entries.insert(algorithm.name(), algorithm);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ManipulationAlgorithm> {
        self.entries
            .get(name)
            .map(|a| a.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "algorithm", name: name.to_string() })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for AlgorithmRegistry {
    fn default() -> Self {
        let mut r = AlgorithmRegistry::empty();
        r.register(Box::new(ReverseAlgorithm));
        r.register(Box::new(OracleAlgorithm));
        r.register(Box::new(ExhaustiveAlgorithm));
        r
    }
}
