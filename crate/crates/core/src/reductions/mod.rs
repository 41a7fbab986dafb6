//! Hardness constructions from 2NMTS to 2-2BM, solution lifting and a
//! validator for every inequality the constructions rely on.
//!
//! Candidate `c_i` of a construction is id `i − 1`; the target `c*` is id
//! `z − 1`. The first `m` candidates `c_1 … c_m` are the *special*
//! candidates whose manipulator scores encode a 2NMTS solution; every other
//! non-target candidate gets fixed manipulator scores recorded in the
//! artifact's layouts.

mod registry;
mod validate;
mod w_eq2;
mod w_ge3;
mod w_open;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

pub use registry::{BuildOptions, Construction, ConstructionRegistry};
pub use validate::{validate_reduction, Check, ValidationReport};
pub use w_eq2::{reduce_w_eq2, WEq2};
pub use w_ge3::{reduce_w_ge3, WGe3};
pub use w_open::{choose_p, choose_p_probe, reduce_w_open, WOpen, DEFAULT_P_CAP};

use crate::election::{ballot_from_scores, evaluate, Ballot, Candidate, Profile, ScoreAssignment};
use crate::error::{Error, Result};
use crate::nmts::{verify_solution, NmtsSolution, TwoNmtsInstance, Variant};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    /// `w ≥ 3`, standard source.
    WGe3,
    /// `w = 2`, standard source, grouped layout with virtual `N2` scores.
    WEq2,
    /// `1 < w < 3`, restricted source, `2p + 3` groups plus leftovers.
    WOpen,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::WGe3 => "w_ge3",
            ReductionKind::WEq2 => "w_eq2",
            ReductionKind::WOpen => "w_open",
        }
    }
}

/// `m` consecutive scores starting at `start`, rising or falling by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: i64,
    pub descending: bool,
}

impl Segment {
    pub fn asc(start: i64) -> Self {
        Segment { start, descending: false }
    }

    pub fn desc(start: i64) -> Self {
        Segment { start, descending: true }
    }

    pub fn at(&self, j: usize) -> i64 {
        if self.descending {
            self.start - j as i64
        } else {
            self.start + j as i64
        }
    }

    pub fn values(&self, len: usize) -> impl Iterator<Item = i64> + '_ {
        (0..len).map(move |j| self.at(j))
    }
}

/// One group of consecutive candidates. `n1` and `n2` are unweighted and,
/// where the artifact has a virtual map for that voter, virtual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub index: usize,
    pub first: Candidate,
    pub len: usize,
    pub n1: Segment,
    pub n2: Segment,
    pub m1: Segment,
    pub m2: Segment,
}

impl GroupLayout {
    pub fn members(&self) -> Range<Candidate> {
        self.first..self.first + self.len
    }
}

/// Virtual (unweighted) scores of one voter and how they map to actual ones.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualMap {
    /// Virtual score of each candidate covered by the map.
    pub candidates: BTreeMap<Candidate, i64>,
    /// Monotone virtual → actual score map.
    pub map: BTreeMap<i64, i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub m: usize,
    pub z: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<i64>,
}

/// A constructed 2-2BM instance plus everything needed to lift solutions
/// and re-check the construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionArtifact {
    pub kind: ReductionKind,
    #[serde(flatten)]
    pub profile: Profile,
    pub source: TwoNmtsInstance,
    pub w: Rational,
    pub fstar: Rational,
    /// `v_{1i} + v_{2i}` for the special candidates.
    pub pvec: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dvec: Vec<Rational>,
    /// `N1`'s weighted score per candidate.
    pub n1_scores: Vec<Rational>,
    pub n2_scores: Vec<i64>,
    /// Fixed manipulator scores of the non-special, non-target candidates.
    pub m1_layout: BTreeMap<Candidate, i64>,
    pub m2_layout: BTreeMap<Candidate, i64>,
    #[serde(default)]
    pub virtual_maps: BTreeMap<String, VirtualMap>,
    #[serde(default)]
    pub groups: Vec<GroupLayout>,
    #[serde(default)]
    pub leftovers: Vec<Candidate>,
    pub params: Params,
}

/// Label used in reports: `c_i` for id `i − 1`, `c*` for the target.
pub fn label(id: Candidate, z: usize) -> String {
    if id + 1 == z {
        "c*".to_string()
    } else {
        format!("c_{}", id + 1)
    }
}

impl ReductionArtifact {
    pub fn m(&self) -> usize {
        self.source.m
    }

    pub fn z(&self) -> usize {
        self.profile.z
    }

    pub fn target(&self) -> Candidate {
        self.z() - 1
    }

    /// Total extra points the manipulators may give special candidate
    /// `c_i` (1-indexed) without pushing it above `F*`.
    pub fn budget(&self, i: usize) -> i64 {
        let m = self.m();
        match self.source.variant {
            Variant::Standard => self.source.a[m - i] - 2,
            Variant::Restricted => self.source.a[i - 1],
        }
    }

    /// Manipulator scores for the special candidates derived from a 2NMTS
    /// solution, indexed by `i − 1`.
    pub fn special_scores(&self, solution: &NmtsSolution) -> (Vec<i64>, Vec<i64>) {
        let m = self.m();
        match self.source.variant {
            // c_i absorbs target a_{m+1-i}; standard values are 1-based.
            Variant::Standard => (
                (1..=m).map(|i| solution.p1[m - i] - 1).collect(),
                (1..=m).map(|i| solution.p2[m - i] - 1).collect(),
            ),
            Variant::Restricted => (solution.p1.clone(), solution.p2.clone()),
        }
    }

    /// Actual total of `c` from the non-manipulators and the fixed layouts.
    /// Special candidates and the target only get the non-manipulator part.
    pub fn fixed_total(&self, c: Candidate) -> Rational {
        let mut t = self.n1_scores[c] + Rational::from_int(self.n2_scores[c]);
        if let Some(&s) = self.m1_layout.get(&c) {
            t += Rational::from_int(s);
        }
        if let Some(&s) = self.m2_layout.get(&c) {
            t += Rational::from_int(s);
        }
        t
    }

    /// Largest fixed total among non-special, non-target candidates.
    pub fn max_rest_total(&self) -> Option<(Candidate, Rational)> {
        (self.m()..self.z() - 1)
            .map(|c| (c, self.fixed_total(c)))
            .max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)))
    }

    /// Full manipulator score vectors for given special-candidate scores.
    fn manipulator_scores(&self, t1: &[i64], t2: &[i64]) -> Result<(Vec<i64>, Vec<i64>)> {
        let z = self.z();
        let m = self.m();
        let mut s1 = vec![i64::MIN; z];
        let mut s2 = vec![i64::MIN; z];
        s1[z - 1] = z as i64 - 1;
        s2[z - 1] = z as i64 - 1;
        s1[..m].copy_from_slice(t1);
        s2[..m].copy_from_slice(t2);
        for c in m..z - 1 {
            match (self.m1_layout.get(&c), self.m2_layout.get(&c)) {
                (Some(&x), Some(&y)) => {
                    s1[c] = x;
                    s2[c] = y;
                }
                _ => return Err(Error::Layout(format!("no layout for {}", label(c, z)))),
            }
        }
        Ok((s1, s2))
    }
}

fn to_ballot(scores: &[i64]) -> Result<Ballot> {
    let assignment: ScoreAssignment =
        scores.iter().enumerate().map(|(c, &s)| (c, Rational::from_int(s))).collect();
    ballot_from_scores(&assignment, Rational::ONE).map_err(|e| Error::Layout(e.to_string()))
}

/// Turns a 2NMTS solution into both manipulators' ballots: the target
/// first, special candidates per the solution, everyone else per layout.
pub fn lift_solution(
    artifact: &ReductionArtifact,
    solution: &NmtsSolution,
) -> Result<(Ballot, Ballot)> {
    if !verify_solution(&artifact.source, solution) {
        return Err(Error::InvalidSolution("does not solve the source instance".into()));
    }
    let (t1, t2) = artifact.special_scores(solution);
    for i in 1..=artifact.m() {
        if t1[i - 1] + t2[i - 1] != artifact.budget(i) {
            return Err(Error::Layout(format!("c_{i} does not receive exactly its budget")));
        }
    }
    let (s1, s2) = artifact.manipulator_scores(&t1, &t2)?;
    Ok((to_ballot(&s1)?, to_ballot(&s2)?))
}

/// The artifact's profile completed with lifted ballots.
pub fn lifted_profile(artifact: &ReductionArtifact, solution: &NmtsSolution) -> Result<Profile> {
    let (m1, m2) = lift_solution(artifact, solution)?;
    artifact.profile.without_manipulators().with_manipulators(m1, m2)
}

/// Maps the k-th highest virtual score to the k-th highest available one.
///
/// Requires the virtual scores to be distinct and to dominate `available`
/// rank by rank, so every candidate's score can only go down.
pub fn devirtualize(
    virtual_assignment: &BTreeMap<Candidate, i64>,
    available: &BTreeSet<i64>,
) -> Result<BTreeMap<Candidate, i64>> {
    if virtual_assignment.len() != available.len() {
        return Err(Error::SizeMismatch {
            expected: virtual_assignment.len(),
            found: available.len(),
        });
    }
    let by_virtual: Vec<(Candidate, i64)> = virtual_assignment
        .iter()
        .map(|(&c, &v)| (c, v))
        .sorted_by_key(|&(c, v)| (std::cmp::Reverse(v), c))
        .collect();
    if let Some(w) = by_virtual.windows(2).find(|w| w[0].1 == w[1].1) {
        return Err(Error::Domination(format!("virtual score {} used twice", w[0].1)));
    }
    let mut out = BTreeMap::new();
    for ((c, v), &actual) in by_virtual.into_iter().zip(available.iter().rev()) {
        if actual > v {
            return Err(Error::Domination(format!(
                "available score {actual} exceeds virtual score {v}"
            )));
        }
        out.insert(c, actual);
    }
    Ok(out)
}

/// Result of searching the structured manipulation family: the target first
/// in both ballots, `{0, …, m−1}` permuted over the special candidates in
/// each ballot, everything else per layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredSearch {
    pub pairs_checked: u64,
    pub successes: u64,
    pub first_success: Option<(Vec<i64>, Vec<i64>)>,
}

/// Exhaustive search over the `(m!)²` structured completions.
pub fn structured_search(artifact: &ReductionArtifact) -> Result<StructuredSearch> {
    let m = artifact.m();
    let fstar = artifact.fstar;
    let rest_ok = artifact.max_rest_total().is_none_or(|(_, t)| t <= fstar);
    let perms: Vec<Vec<i64>> = (0..m as i64).permutations(m).collect();
    let mut out = StructuredSearch { pairs_checked: 0, successes: 0, first_success: None };
    for t1 in &perms {
        for t2 in &perms {
            out.pairs_checked += 1;
            let ok = rest_ok
                && (0..m).all(|i| artifact.pvec[i] + Rational::from_int(t1[i] + t2[i]) <= fstar);
            if ok {
                out.successes += 1;
                if out.first_success.is_none() {
                    out.first_success = Some((t1.clone(), t2.clone()));
                }
            }
        }
    }
    // Cross-check the shortcut against a full tally.
    if let Some((t1, t2)) = &out.first_success {
        let (s1, s2) = artifact.manipulator_scores(t1, t2)?;
        let full = artifact
            .profile
            .without_manipulators()
            .with_manipulators(to_ballot(&s1)?, to_ballot(&s2)?)?;
        if !evaluate(&full)?.success {
            return Err(Error::Layout("structured success not confirmed by tally".into()));
        }
    }
    Ok(out)
}

/// Shared assembly of an artifact from unweighted per-candidate scores.
#[allow(clippy::too_many_arguments)]
fn assemble(
    kind: ReductionKind,
    source: &TwoNmtsInstance,
    w: Rational,
    n1_unweighted: &[i64],
    n2: Vec<i64>,
    m1_layout: BTreeMap<Candidate, i64>,
    m2_layout: BTreeMap<Candidate, i64>,
    virtual_maps: BTreeMap<String, VirtualMap>,
    groups: Vec<GroupLayout>,
    leftovers: Vec<Candidate>,
    params: Params,
    dvec: Vec<Rational>,
) -> Result<ReductionArtifact> {
    let z = n1_unweighted.len();
    let construction = |voter: &str, e: Error| Error::Construction {
        check: format!("{voter}_score_set"),
        detail: e.to_string(),
    };
    let n1_scores: Vec<Rational> = n1_unweighted.iter().map(|&s| w * s).collect();
    let n1_assign: ScoreAssignment = n1_scores.iter().copied().enumerate().collect();
    let n1 = ballot_from_scores(&n1_assign, w).map_err(|e| construction("n1", e))?;
    let n2_assign: ScoreAssignment =
        n2.iter().enumerate().map(|(c, &s)| (c, Rational::from_int(s))).collect();
    let n2_ballot = ballot_from_scores(&n2_assign, Rational::ONE).map_err(|e| construction("n2", e))?;
    let profile = Profile::new(w, z - 1, n1, n2_ballot)?;
    let star = z - 1;
    let fstar = n1_scores[star] + Rational::from_int(n2[star]) + Rational::from(2 * (z - 1));
    let pvec = (0..source.m).map(|c| n1_scores[c] + Rational::from_int(n2[c])).collect();
    Ok(ReductionArtifact {
        kind,
        profile,
        source: source.clone(),
        w,
        fstar,
        pvec,
        dvec,
        n1_scores,
        n2_scores: n2,
        m1_layout,
        m2_layout,
        virtual_maps,
        groups,
        leftovers,
        params,
    })
}

/// Records each constructed N2 score, rejecting out-of-range values and
/// duplicates.
fn check_n2_scores(entries: &[(String, i64)], z: usize) -> Result<()> {
    let mut seen: BTreeMap<i64, &str> = BTreeMap::new();
    for (name, s) in entries {
        if *s < 0 || *s >= z as i64 {
            return Err(Error::Construction {
                check: "n2_score_range".into(),
                detail: format!("{name} gets {s}, outside 0..{z}"),
            });
        }
        if let Some(prev) = seen.insert(*s, name) {
            return Err(Error::N2Collision { score: *s, first: prev.to_string(), second: name.clone() });
        }
    }
    Ok(())
}

/// Canonical JSON: keys sorted at every level.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    serde_json::to_string(&v).expect("serializable")
}
