//! Finding manipulator ballots that make the target a co-winner.
//!
//! [`respective_reverse`] is the polynomial strategy that always succeeds for
//! `w ≤ 1`. [`brute_force_manipulation`] is an exact oracle for small `z`,
//! and [`exhaustive_manipulation`] is the unpruned enumeration it is checked
//! against.

mod registry;

pub use registry::{
    AlgorithmRegistry, ExhaustiveAlgorithm, ManipulationAlgorithm, OracleAlgorithm,
    ReverseAlgorithm,
};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::election::{evaluate, Ballot, Candidate, Profile};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Knobs for the exponential searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Largest `z` the pruned oracle accepts.
    pub enumeration_limit: usize,
    /// Largest `z` the unpruned enumeration accepts.
    pub exhaustive_limit: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { enumeration_limit: 11, exhaustive_limit: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManipulationResult {
    pub found: bool,
    /// Whether `found == false` is a proof that no manipulation exists.
    pub complete: bool,
    pub m1: Option<Ballot>,
    pub m2: Option<Ballot>,
    pub witness_totals: Option<Vec<Rational>>,
}

impl ManipulationResult {
    fn none(complete: bool) -> Self {
        ManipulationResult { found: false, complete, m1: None, m2: None, witness_totals: None }
    }

    fn found(profile: &Profile, m1: Ballot, m2: Ballot) -> Result<Self> {
        let full = profile.without_manipulators().with_manipulators(m1.clone(), m2.clone())?;
        let eval = evaluate(&full)?;
        debug_assert!(eval.success, "search returned a non-certifying pair");
        Ok(ManipulationResult {
            found: eval.success,
            complete: true,
            m1: Some(m1),
            m2: Some(m2),
            witness_totals: Some(eval.totals),
        })
    }
}

/// Per-candidate budget of extra unweighted points. `-1` means the candidate
/// is already over budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapVector(Vec<i64>);

impl CapVector {
    pub fn new(caps: Vec<i64>) -> Self {
        CapVector(caps.into_iter().map(|c| c.max(-1)).collect())
    }

    pub fn caps(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Interval Hall condition: scores `0..k` fit under `caps` iff the i-th
/// smallest cap is at least `i`.
fn hall_ok(mut caps: Vec<i64>) -> bool {
    caps.sort_unstable();
    caps.iter().enumerate().all(|(i, &c)| c >= i as i64)
}

/// Gives each position a distinct score from `scores` not exceeding its cap.
///
/// `scores` must be exactly `{0, …, k−1}` with `k = caps.len()`. The greedy
/// assignment (ascending caps get ascending scores) succeeds whenever any
/// assignment does. Returns scores indexed like `caps`.
pub fn completion_feasible(caps: &CapVector, scores: &[i64]) -> Result<Option<Vec<i64>>> {
    let k = caps.len();
    if scores.len() != k {
        return Err(Error::SizeMismatch { expected: k, found: scores.len() });
    }
    let mut sorted_scores = scores.to_vec();
    sorted_scores.sort_unstable();
    if sorted_scores.iter().copied().ne(0..k as i64) {
        return Err(Error::Precondition(format!("scores must be 0..{k}")));
    }
    let order: Vec<usize> = (0..k).sorted_by_key(|&i| (caps.0[i], i)).collect();
    let mut out = vec![0; k];
    for (s, &i) in order.iter().enumerate() {
        if caps.0[i] < s as i64 {
            return Ok(None);
        }
        out[i] = s as i64;
    }
    Ok(Some(out))
}

/// Reverses each non-manipulator's ballot and promotes the target to the top.
pub fn respective_reverse(n1: &Ballot, n2: &Ballot, target: Candidate) -> (Ballot, Ballot) {
    let flip = |b: &Ballot| {
        let ranking = std::iter::once(target)
            .chain(b.ranking().iter().rev().copied().filter(|&c| c != target))
            .collect();
        Ballot::new(ranking).expect("reordering of a valid ballot")
    };
    (flip(n1), flip(n2))
}

/// Integer slack `floor(F* − current)` for every non-target candidate, where
/// `F*` is the target's total with both manipulators ranking it first.
///
/// Putting the target first is weakly dominant for a manipulator: swapping it
/// with whoever held the top spot raises the target and lowers that
/// candidate, and no other total moves.
fn base_caps(profile: &Profile) -> (Vec<Candidate>, Vec<i64>) {
    let z = profile.z;
    let current = profile.non_manipulator_totals();
    let fstar = current[profile.target] + Rational::from(2 * (z - 1));
    let others: Vec<Candidate> = (0..z).filter(|&c| c != profile.target).collect();
    let top = 2 * (z as i64 - 2).max(0);
    let caps = others
        .iter()
        .map(|&c| ((fstar - current[c]).floor() as i64).clamp(-1, top))
        .collect();
    (others, caps)
}

struct OracleSearch {
    n: usize,
    base: Vec<i64>,
    m1: Vec<Option<i64>>,
}

impl OracleSearch {
    fn m2_caps_upper_bound(&self) -> Vec<i64> {
        self.base
            .iter()
            .zip(&self.m1)
            .map(|(&b, t)| b - t.unwrap_or(0))
            .collect()
    }

    /// Assigns M1 scores from `score` downwards.
    fn descend(&mut self, score: i64) -> Option<Vec<i64>> {
        if score < 0 {
            let residual =
                CapVector::new(self.base.iter().zip(&self.m1).map(|(&b, t)| b - t.unwrap()).collect());
            let scores: Vec<i64> = (0..self.n as i64).collect();
            return completion_feasible(&residual, &scores).expect("sizes agree");
        }
        let mut tried: Vec<i64> = Vec::new();
        for i in 0..self.n {
            if self.m1[i].is_some() || self.base[i] < score || tried.contains(&self.base[i]) {
                continue;
            }
            // Candidates with equal base caps are interchangeable here.
            tried.push(self.base[i]);
            self.m1[i] = Some(score);
            let m1_rest_ok = hall_ok(
                (0..self.n).filter(|&j| self.m1[j].is_none()).map(|j| self.base[j]).collect(),
            );
            if m1_rest_ok && hall_ok(self.m2_caps_upper_bound()) {
                if let Some(m2) = self.descend(score - 1) {
                    return Some(m2);
                }
            }
            self.m1[i] = None;
        }
        None
    }
}

fn ballots_from_scores(
    z: usize,
    target: Candidate,
    others: &[Candidate],
    scores: &[i64],
) -> Ballot {
    let mut full = vec![0i64; z];
    full[target] = z as i64 - 1;
    for (&c, &s) in others.iter().zip(scores) {
        full[c] = s;
    }
    Ballot::from_int_scores(&full).expect("search yields a permutation of scores")
}

/// Exact decision of 2-2BM by pruned backtracking.
///
/// Both manipulators put the target first. `M1`'s remaining scores are
/// assigned high to low with Hall-condition pruning on both manipulators, and
/// `M2` is completed greedily by [`completion_feasible`].
pub fn brute_force_manipulation(profile: &Profile, limit: usize) -> Result<ManipulationResult> {
    profile.validate()?;
    let z = profile.z;
    if z > limit {
        return Err(Error::EnumerationLimit { z, limit });
    }
    let (others, base) = base_caps(profile);
    if !hall_ok(base.clone()) {
        return Ok(ManipulationResult::none(true));
    }
    let n = others.len();
    let mut search = OracleSearch { n, base, m1: vec![None; n] };
    match search.descend(n as i64 - 1) {
        Some(m2) => {
            let m1: Vec<i64> = search.m1.iter().map(|t| t.unwrap()).collect();
            let b1 = ballots_from_scores(z, profile.target, &others, &m1);
            let b2 = ballots_from_scores(z, profile.target, &others, &m2);
            ManipulationResult::found(profile, b1, b2)
        }
        None => Ok(ManipulationResult::none(true)),
    }
}

/// Tries every pair of manipulator ballots, including ones that do not rank
/// the target first. Only usable for tiny `z`.
pub fn exhaustive_manipulation(profile: &Profile, limit: usize) -> Result<ManipulationResult> {
    profile.validate()?;
    let z = profile.z;
    if z > limit {
        return Err(Error::EnumerationLimit { z, limit });
    }
    let base = profile.non_manipulator_totals();
    let ballots: Vec<(Ballot, Vec<i64>)> = (0..z)
        .permutations(z)
        .map(|r| {
            let b = Ballot::new(r).unwrap();
            let s = b.scores();
            (b, s)
        })
        .collect();
    for (b1, s1) in &ballots {
        for (b2, s2) in &ballots {
            let t = profile.target;
            let target_total = base[t] + Rational::from_int(s1[t] + s2[t]);
            let ok = (0..z).all(|c| base[c] + Rational::from_int(s1[c] + s2[c]) <= target_total);
            if ok {
                return ManipulationResult::found(profile, b1.clone(), b2.clone());
            }
        }
    }
    Ok(ManipulationResult::none(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::borda_totals;

    fn b(r: &[usize]) -> Ballot {
        Ballot::new(r.to_vec()).unwrap()
    }

    fn brute_feasible(caps: &[i64]) -> bool {
        let k = caps.len();
        (0..k).permutations(k).any(|perm| perm.iter().zip(caps).all(|(&s, &c)| s as i64 <= c))
    }

    #[test]
    fn completion_examples() {
        let s = [0, 1, 2];
        assert_eq!(
            completion_feasible(&CapVector::new(vec![0, 1, 2]), &s).unwrap(),
            Some(vec![0, 1, 2])
        );
        assert_eq!(completion_feasible(&CapVector::new(vec![0, 0, 5]), &s).unwrap(), None);
        let got = completion_feasible(&CapVector::new(vec![1, 1, 2]), &s).unwrap();
        assert!(got.is_some());
        assert!(brute_feasible(&[1, 1, 2]));
        assert!(matches!(
            completion_feasible(&CapVector::new(vec![1, 1]), &s),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn completion_matches_matching_search() {
        for k in 0..=5usize {
            let scores: Vec<i64> = (0..k as i64).collect();
            for caps in std::iter::repeat_n(-1i64..=5, k).multi_cartesian_product() {
                let got = completion_feasible(&CapVector::new(caps.clone()), &scores).unwrap();
                assert_eq!(got.is_some(), brute_feasible(&caps), "caps {caps:?}");
                if let Some(a) = got {
                    assert!(a.iter().zip(&caps).all(|(s, c)| s <= c));
                    assert!(a.iter().sorted().copied().eq(0..k as i64));
                }
            }
        }
    }

    #[test]
    fn reverse_examples() {
        // c1 = 0, c2 = 1, c* = 2
        let (m1, m2) = respective_reverse(&b(&[0, 1, 2]), &b(&[1, 0, 2]), 2);
        assert_eq!(m1, b(&[2, 1, 0]));
        assert_eq!(m2, b(&[2, 0, 1]));
        let p = Profile::new(Rational::ONE, 2, b(&[0, 1, 2]), b(&[1, 0, 2]))
            .unwrap()
            .with_manipulators(m1, m2)
            .unwrap();
        let t = borda_totals(&p).unwrap();
        assert!(t.iter().all(|x| *x == Rational::from_int(4)));

        let (m1, m2) = respective_reverse(&b(&[0, 1]), &b(&[0, 1]), 1);
        assert_eq!((m1.clone(), m2.clone()), (b(&[1, 0]), b(&[1, 0])));

        let p = Profile::new(Rational::new(1, 2), 2, b(&[0, 1, 2]), b(&[0, 1, 2])).unwrap();
        let (m1, m2) = respective_reverse(&p.n1, &p.n2, 2);
        let e = evaluate(&p.with_manipulators(m1, m2).unwrap()).unwrap();
        assert_eq!(e.totals, vec![Rational::from_int(3), Rational::new(7, 2), Rational::from_int(4)]);
        assert_eq!(e.winners.into_iter().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn reverse_promotes_target_from_middle() {
        let (m1, _) = respective_reverse(&b(&[3, 1, 0, 2]), &b(&[0, 1, 2, 3]), 0);
        assert_eq!(m1, b(&[0, 2, 1, 3]));
    }

    #[test]
    fn oracle_examples() {
        let p = Profile::new(Rational::ONE, 2, b(&[0, 1, 2]), b(&[0, 1, 2])).unwrap();
        let r = brute_force_manipulation(&p, 11).unwrap();
        assert!(r.found);
        let full = p.clone().with_manipulators(r.m1.unwrap(), r.m2.unwrap()).unwrap();
        assert!(evaluate(&full).unwrap().success);

        let p = Profile::new(Rational::from_int(5), 2, b(&[0, 1, 2]), b(&[0, 1, 2])).unwrap();
        let r = brute_force_manipulation(&p, 11).unwrap();
        assert!(!r.found && r.complete);
        assert!(!exhaustive_manipulation(&p, 6).unwrap().found);

        let p = Profile::new(Rational::from_int(7), 0, b(&[0]), b(&[0])).unwrap();
        let r = brute_force_manipulation(&p, 11).unwrap();
        assert!(r.found);
        assert_eq!(r.m1, Some(b(&[0])));
    }

    #[test]
    fn oracle_refuses_over_limit() {
        let p = Profile::new(Rational::ONE, 0, Ballot::identity(12), Ballot::identity(12)).unwrap();
        assert_eq!(
            brute_force_manipulation(&p, 11),
            Err(Error::EnumerationLimit { z: 12, limit: 11 })
        );
        assert!(brute_force_manipulation(&p, 12).unwrap().found);
    }

    /// The target-first pinning used by the oracle loses nothing: whenever
    /// any pair succeeds, swapping the target to the top in both ballots
    /// still succeeds.
    #[test]
    fn pinning_target_first_is_weakly_dominant() {
        let z = 4;
        for w in [Rational::new(1, 2), Rational::from_int(2), Rational::from_int(3)] {
            for n2 in (0..z).permutations(z) {
                let p = Profile::new(w, 3, Ballot::identity(z), b(&n2)).unwrap();
                for r1 in (0..z).permutations(z) {
                    for r2 in (0..z).permutations(z) {
                        let full = p.clone().with_manipulators(b(&r1), b(&r2)).unwrap();
                        if !evaluate(&full).unwrap().success {
                            continue;
                        }
                        let promote = |r: &[usize]| {
                            let mut r = r.to_vec();
                            let pos = r.iter().position(|&c| c == 3).unwrap();
                            r.swap(0, pos);
                            b(&r)
                        };
                        let pinned = p.clone().with_manipulators(promote(&r1), promote(&r2)).unwrap();
                        assert!(evaluate(&pinned).unwrap().success);
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_agrees_with_exhaustive_small() {
        for z in 1..=4usize {
            for w in [Rational::new(1, 2), Rational::ONE, Rational::from_int(2), Rational::from_int(3)] {
                for target in 0..z {
                    for n1 in (0..z).permutations(z) {
                        for n2 in (0..z).permutations(z) {
                            let p = Profile::new(w, target, b(&n1), b(&n2)).unwrap();
                            let fast = brute_force_manipulation(&p, 11).unwrap();
                            let slow = exhaustive_manipulation(&p, 6).unwrap();
                            assert_eq!(fast.found, slow.found, "{p:?}");
                        }
                    }
                }
            }
        }
    }
}
