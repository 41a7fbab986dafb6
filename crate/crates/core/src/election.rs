//! Weighted Borda elections with two non-manipulators (`N1`, `N2`) and two
//! manipulators (`M1`, `M2`).
//!
//! Candidates are the integers `0..z`. `N1`'s ballot is weighted by `w`; the
//! weight is applied when tallying, never stored in the ballot. Every total is
//! an exact [`Rational`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type Candidate = usize;

/// A strict ranking of all candidates, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Candidate>", into = "Vec<Candidate>")]
pub struct Ballot(Vec<Candidate>);

impl Ballot {
    pub fn new(ranking: Vec<Candidate>) -> Result<Self> {
        let z = ranking.len();
        if z == 0 {
            return Err(Error::InvalidBallot("empty ranking".into()));
        }
        let mut seen = vec![false; z];
        for &c in &ranking {
            if c >= z {
                return Err(Error::InvalidBallot(format!(
                    "candidate {c} out of range for {z} candidates"
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidBallot(format!("candidate {c} ranked twice")));
            }
        }
        Ok(Ballot(ranking))
    }

    /// Identity ranking `0 ≻ 1 ≻ … ≻ z−1`.
    pub fn identity(z: usize) -> Self {
        Ballot((0..z).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ranking(&self) -> &[Candidate] {
        &self.0
    }

    /// 1-indexed rank of `c`.
    pub fn rank_of(&self, c: Candidate) -> usize {
        self.0.iter().position(|&x| x == c).expect("candidate on ballot") + 1
    }

    /// Unweighted Borda scores indexed by candidate: `z − rank`.
    pub fn scores(&self) -> Vec<i64> {
        let z = self.0.len();
        let mut out = vec![0; z];
        for (pos, &c) in self.0.iter().enumerate() {
            out[c] = (z - 1 - pos) as i64;
        }
        out
    }

    /// Builds the ballot whose induced scores are `scores` (indexed by
    /// candidate). Fails unless `scores` is a permutation of `0..z`.
    pub fn from_int_scores(scores: &[i64]) -> Result<Self> {
        let z = scores.len();
        let mut ranking = vec![usize::MAX; z];
        for (c, &s) in scores.iter().enumerate() {
            if s < 0 || s >= z as i64 {
                return Err(Error::NotABallot(format!(
                    "candidate {c} has score {s} outside 0..{z}"
                )));
            }
            let pos = z - 1 - s as usize;
            if ranking[pos] != usize::MAX {
                return Err(Error::NotABallot(format!(
                    "score {s} given to both {} and {c}",
                    ranking[pos]
                )));
            }
            ranking[pos] = c;
        }
        Ok(Ballot(ranking))
    }
}

impl TryFrom<Vec<Candidate>> for Ballot {
    type Error = Error;
    fn try_from(v: Vec<Candidate>) -> Result<Self> {
        Ballot::new(v)
    }
}

impl From<Ballot> for Vec<Candidate> {
    fn from(b: Ballot) -> Self {
        b.0
    }
}

/// Scores one voter gives to every candidate.
pub type ScoreAssignment = BTreeMap<Candidate, Rational>;

/// A 2-2BM instance, optionally completed with the manipulators' ballots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr")]
pub struct Profile {
    pub z: usize,
    pub weight: Rational,
    pub target: Candidate,
    pub n1: Ballot,
    pub n2: Ballot,
    pub m1: Option<Ballot>,
    pub m2: Option<Ballot>,
}

#[derive(Deserialize)]
struct ProfileRepr {
    z: usize,
    weight: Rational,
    target: Candidate,
    n1: Ballot,
    n2: Ballot,
    #[serde(default)]
    m1: Option<Ballot>,
    #[serde(default)]
    m2: Option<Ballot>,
}

impl TryFrom<ProfileRepr> for Profile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        let p = Profile {
            z: r.z,
            weight: r.weight,
            target: r.target,
            n1: r.n1,
            n2: r.n2,
            m1: r.m1,
            m2: r.m2,
        };
        p.validate()?;
        Ok(p)
    }
}

impl Profile {
    pub fn new(weight: Rational, target: Candidate, n1: Ballot, n2: Ballot) -> Result<Self> {
        let p = Profile { z: n1.len(), weight, target, n1, n2, m1: None, m2: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_manipulators(mut self, m1: Ballot, m2: Ballot) -> Result<Self> {
        self.m1 = Some(m1);
        self.m2 = Some(m2);
        self.validate()?;
        Ok(self)
    }

    pub fn without_manipulators(&self) -> Profile {
        Profile { m1: None, m2: None, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z == 0 {
            return Err(Error::InvalidProfile("no candidates".into()));
        }
        if !self.weight.is_positive() {
            return Err(Error::InvalidProfile(format!("weight {} is not positive", self.weight)));
        }
        if self.target >= self.z {
            return Err(Error::InvalidProfile(format!(
                "target {} out of range for {} candidates",
                self.target, self.z
            )));
        }
        let ballots = [Some(&self.n1), Some(&self.n2), self.m1.as_ref(), self.m2.as_ref()];
        for (name, b) in ["n1", "n2", "m1", "m2"].iter().zip(ballots) {
            if let Some(b) = b {
                if b.len() != self.z {
                    return Err(Error::InvalidProfile(format!(
                        "{name} ranks {} candidates, expected {}",
                        b.len(),
                        self.z
                    )));
                }
            }
        }
        Ok(())
    }

    /// Current totals from `N1` and `N2` only.
    pub fn non_manipulator_totals(&self) -> Vec<Rational> {
        let s1 = self.n1.scores();
        let s2 = self.n2.scores();
        s1.iter()
            .zip(&s2)
            .map(|(&a, &b)| self.weight * a + Rational::from_int(b))
            .collect()
    }
}

/// Totals per candidate; absent manipulators contribute nothing.
pub fn borda_totals(profile: &Profile) -> Result<Vec<Rational>> {
    profile.validate()?;
    let mut totals = profile.non_manipulator_totals();
    for b in [&profile.m1, &profile.m2].into_iter().flatten() {
        for (t, s) in totals.iter_mut().zip(b.scores()) {
            *t += Rational::from_int(s);
        }
    }
    Ok(totals)
}

/// The argmax set of `totals`. Ties keep every co-winner.
pub fn winner_set(totals: &[Rational]) -> BTreeSet<Candidate> {
    let Some(best) = totals.iter().max() else {
        return BTreeSet::new();
    };
    totals
        .iter()
        .enumerate()
        .filter(|(_, t)| *t == best)
        .map(|(c, _)| c)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub success: bool,
    pub totals: Vec<Rational>,
    pub winners: BTreeSet<Candidate>,
}

/// Checks whether the manipulators' ballots make the target a co-winner.
pub fn evaluate(profile: &Profile) -> Result<Evaluation> {
    if profile.m1.is_none() || profile.m2.is_none() {
        return Err(Error::MissingManipulators);
    }
    let totals = borda_totals(profile)?;
    let winners = winner_set(&totals);
    Ok(Evaluation { success: winners.contains(&profile.target), totals, winners })
}

/// Recovers a ballot from a voter's (weighted) scores.
pub fn ballot_from_scores(assignment: &ScoreAssignment, weight: Rational) -> Result<Ballot> {
    if !weight.is_positive() {
        return Err(Error::NotABallot(format!("weight {weight} is not positive")));
    }
    let z = assignment.len();
    if z == 0 || assignment.keys().copied().ne(0..z) {
        return Err(Error::NotABallot(format!(
            "assignment must cover candidates 0..{z} exactly"
        )));
    }
    let scores = assignment
        .iter()
        .map(|(c, s)| {
            (*s / weight).to_integer().map(|v| v as i64).ok_or_else(|| {
                Error::NotABallot(format!("score {s} of candidate {c} is not a multiple of {weight}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ballot::from_int_scores(&scores)
}

/// Score vector of `ballot` multiplied by `weight`, as an assignment.
pub fn weighted_scores(ballot: &Ballot, weight: Rational) -> ScoreAssignment {
    ballot
        .scores()
        .into_iter()
        .enumerate()
        .map(|(c, s)| (c, weight * s))
        .collect()
}
