use super::{ReductionArtifact, ReductionKind, ValidationReport, WEq2, WGe3, WOpen};
use crate::error::{Error, Result};
use crate::nmts::{TwoNmtsInstance, Variant};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Group-count parameter for constructions that take one; searched for
    /// when absent.
    pub p: Option<u64>,
    pub p_cap: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { p: None, p_cap: super::DEFAULT_P_CAP }
    }
}

/// One hardness construction, selected by weight regime.
pub trait Construction: Send + Sync {
    fn kind(&self) -> ReductionKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Source variant the construction reduces from.
    fn variant(&self) -> Variant;

    fn accepts_weight(&self, w: Rational) -> bool;

    fn build(
        &self,
        instance: &TwoNmtsInstance,
        w: Rational,
        options: &BuildOptions,
    ) -> Result<ReductionArtifact>;

    /// Construction-specific named checks, appended to `report`.
    fn check(&self, artifact: &ReductionArtifact, report: &mut ValidationReport);
}

/// Constructions in dispatch priority order.
pub struct ConstructionRegistry {
    entries: Vec<Box<dyn Construction>>,
}

impl ConstructionRegistry {
    pub fn empty() -> Self {
        ConstructionRegistry { entries: Vec::new() }
    }

    pub fn register(&mut self, construction: Box<dyn Construction>) {
        self.entries.retain(|c| c.kind() != construction.kind());
        self.entries.push(construction);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Construction> {
        self.entries
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "reduction", name: name.to_string() })
    }

    pub fn by_kind(&self, kind: ReductionKind) -> Option<&dyn Construction> {
        self.entries.iter().find(|c| c.kind() == kind).map(|c| c.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|c| c.name())
    }

    /// Picks the construction for weight `w` and a source of `variant`.
    pub fn dispatch(&self, w: Rational, variant: Variant) -> Result<&dyn Construction> {
        if w <= Rational::ONE {
            return Err(Error::Regime(format!(
                "w = {w} <= 1: manipulation is polynomial there, no reduction exists"
            )));
        }
        let by_weight: Vec<&dyn Construction> =
            self.entries.iter().filter(|c| c.accepts_weight(w)).map(|c| c.as_ref()).collect();
        if let Some(c) = by_weight.iter().find(|c| c.variant() == variant) {
            return Ok(*c);
        }
        match by_weight.first() {
            Some(c) => Err(Error::Regime(format!(
                "w = {w} needs a {} instance (construction {}), got {variant}",
                c.variant(),
                c.name()
            ))),
            None => Err(Error::Regime(format!("no registered construction accepts w = {w}"))),
        }
    }
}

impl Default for ConstructionRegistry {
    fn default() -> Self {
        let mut r = ConstructionRegistry::empty();
        r.register(Box::new(WEq2));
        r.register(Box::new(WGe3));
        r.register(Box::new(WOpen));
        r
    }
}
