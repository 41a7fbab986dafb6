//! Two-numerical matching with target sums (2NMTS).
//!
//! Given sorted targets `a_1 ≤ … ≤ a_m`, find two permutations `p1`, `p2` of
//! the value range with `p1(j) + p2(j) = a_j` for every `j`. The standard
//! variant permutes `{1, …, m}`, the restricted variant `{0, …, m−1}`.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Restricted,
}

impl Variant {
    /// Smallest permutation value.
    pub fn offset(self) -> i64 {
        match self {
            Variant::Standard => 1,
            Variant::Restricted => 0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::Restricted => "restricted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoNmtsInstance {
    pub variant: Variant,
    pub m: usize,
    pub a: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NmtsSolution {
    pub p1: Vec<i64>,
    pub p2: Vec<i64>,
}

impl TwoNmtsInstance {
    pub fn new(variant: Variant, a: Vec<i64>) -> Result<Self> {
        let inst = TwoNmtsInstance { variant, m: a.len(), a };
        inst.validate()?;
        Ok(inst)
    }

    pub fn standard(a: Vec<i64>) -> Result<Self> {
        Self::new(Variant::Standard, a)
    }

    pub fn restricted(a: Vec<i64>) -> Result<Self> {
        Self::new(Variant::Restricted, a)
    }

    /// Inclusive range allowed for each target.
    pub fn target_range(variant: Variant, m: usize) -> (i64, i64) {
        let lo = 2 * variant.offset();
        (lo, lo + 2 * (m as i64 - 1))
    }

    /// Required sum of all targets.
    pub fn target_sum(variant: Variant, m: usize) -> i64 {
        let m = m as i64;
        m * (m - 1) + 2 * variant.offset() * m
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Err(Error::InvalidInstance("m must be positive".into()));
        }
        if self.a.len() != m {
            return Err(Error::InvalidInstance(format!("{} targets for m = {m}", self.a.len())));
        }
        if !self.a.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInstance("targets must be non-decreasing".into()));
        }
        let (lo, hi) = Self::target_range(self.variant, m);
        if let Some(bad) = self.a.iter().find(|&&x| x < lo || x > hi) {
            return Err(Error::InvalidInstance(format!("target {bad} outside [{lo}, {hi}]")));
        }
        let sum: i64 = self.a.iter().sum();
        let want = Self::target_sum(self.variant, m);
        if sum != want {
            return Err(Error::InvalidInstance(format!("targets sum to {sum}, expected {want}")));
        }
        Ok(())
    }
}

/// Checks permutation and target-sum conditions.
pub fn verify_solution(instance: &TwoNmtsInstance, solution: &NmtsSolution) -> bool {
    let m = instance.a.len();
    let off = instance.variant.offset();
    let is_perm = |p: &[i64]| {
        let mut seen = vec![false; m];
        p.len() == m
            && p.iter().all(|&v| {
                let k = v - off;
                (0..m as i64).contains(&k) && !std::mem::replace(&mut seen[k as usize], true)
            })
    };
    is_perm(&solution.p1)
        && is_perm(&solution.p2)
        && solution.p1.iter().zip(&solution.p2).zip(&instance.a).all(|((x, y), a)| x + y == *a)
}

struct Solver<'a> {
    a: &'a [i64],
    m: usize,
    off: i64,
    p1: Vec<i64>,
    p2: Vec<i64>,
    dead: HashSet<(u64, u64)>,
}

impl Solver<'_> {
    fn search(&mut self, j: usize, used1: u64, used2: u64) -> bool {
        if j == self.m {
            return true;
        }
        if self.dead.contains(&(used1, used2)) {
            return false;
        }
        for k1 in 0..self.m as i64 {
            if used1 >> k1 & 1 == 1 {
                continue;
            }
            let k2 = self.a[j] - 2 * self.off - k1;
            if !(0..self.m as i64).contains(&k2) || used2 >> k2 & 1 == 1 {
                continue;
            }
            self.p1[j] = k1 + self.off;
            self.p2[j] = k2 + self.off;
            if self.search(j + 1, used1 | 1 << k1, used2 | 1 << k2) {
                return true;
            }
        }
        self.dead.insert((used1, used2));
        false
    }
}

/// Exact solver returning the solution with lexicographically least `p1`.
///
/// Positions are filled in index order, trying `p1` values ascending, with
/// failed (used1, used2) states memoized.
pub fn solve_2nmts(instance: &TwoNmtsInstance) -> Result<Option<NmtsSolution>> {
    instance.validate()?;
    let m = instance.m;
    if m > 64 {
        return Err(Error::InvalidInstance(format!("m = {m} exceeds the solver's 64-bit masks")));
    }
    let mut s = Solver {
        a: &instance.a,
        m,
        off: instance.variant.offset(),
        p1: vec![0; m],
        p2: vec![0; m],
        dead: HashSet::new(),
    };
    Ok(s.search(0, 0, 0).then_some(NmtsSolution { p1: s.p1, p2: s.p2 }))
}

/// Converts RN3DM `(U, e)` into a standard 2NMTS instance via `a_j = e − u_j`.
pub fn rn3dm_to_2nmts(u: &[i64], e: i64) -> Result<TwoNmtsInstance> {
    let m = u.len() as i64;
    if m == 0 {
        return Err(Error::SideCondition("empty multiset".into()));
    }
    let lhs = u.iter().sum::<i64>() + m * (m + 1);
    if lhs != m * e {
        return Err(Error::SideCondition(format!("sum(U) + m(m+1) = {lhs} but m*e = {}", m * e)));
    }
    let order = rn3dm_sort_order(u, e);
    TwoNmtsInstance::standard(order.iter().map(|&i| e - u[i]).collect())
}

/// Original index of each sorted target position in [`rn3dm_to_2nmts`].
pub fn rn3dm_sort_order(u: &[i64], e: i64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by_key(|&i| (e - u[i], i));
    order
}

/// Does `(sigma, pi)` solve RN3DM `(U, e)`?
pub fn rn3dm_check(u: &[i64], e: i64, sigma: &[i64], pi: &[i64]) -> bool {
    let m = u.len();
    let inst = TwoNmtsInstance {
        variant: Variant::Standard,
        m,
        a: u.iter().map(|x| e - x).collect(),
    };
    // verify_solution does not need sorted targets
    verify_solution(&inst, &NmtsSolution { p1: sigma.to_vec(), p2: pi.to_vec() })
}

/// Maps a 2NMTS solution of the converted instance back to RN3DM indices.
pub fn rn3dm_solution(order: &[usize], solution: &NmtsSolution) -> (Vec<i64>, Vec<i64>) {
    let m = order.len();
    let mut sigma = vec![0; m];
    let mut pi = vec![0; m];
    for (k, &i) in order.iter().enumerate() {
        sigma[i] = solution.p1[k];
        pi[i] = solution.p2[k];
    }
    (sigma, pi)
}

/// Shifts a restricted instance to the standard variant (`a_j + 2`).
pub fn restricted_to_standard(instance: &TwoNmtsInstance) -> Result<TwoNmtsInstance> {
    if instance.variant != Variant::Restricted {
        return Err(Error::InvalidInstance("expected a restricted instance".into()));
    }
    instance.validate()?;
    TwoNmtsInstance::standard(instance.a.iter().map(|x| x + 2).collect())
}

/// Every valid instance of the given size and variant, in lexicographic order.
pub fn enumerate_instances(m: usize, variant: Variant) -> Vec<TwoNmtsInstance> {
    fn rec(
        prefix: &mut Vec<i64>,
        left: usize,
        min: i64,
        hi: i64,
        sum_left: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        if left == 0 {
            if sum_left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let rest = left as i64 - 1;
        for v in min..=hi {
            let remain = sum_left - v;
            if remain < v * rest {
                break;
            }
            if remain > hi * rest {
                continue;
            }
            prefix.push(v);
            rec(prefix, left - 1, v, hi, remain, out);
            prefix.pop();
        }
    }
    if m == 0 {
        return Vec::new();
    }
    let (lo, hi) = TwoNmtsInstance::target_range(variant, m);
    let mut out = Vec::new();
    rec(&mut Vec::new(), m, lo, hi, TwoNmtsInstance::target_sum(variant, m), &mut out);
    out.into_iter().map(|a| TwoNmtsInstance { variant, m, a }).collect()
}

/// A random yes-instance together with a solution for it.
pub fn random_planted<R: Rng + ?Sized>(
    m: usize,
    variant: Variant,
    rng: &mut R,
) -> (TwoNmtsInstance, NmtsSolution) {
    let off = variant.offset();
    let mut p1: Vec<i64> = (off..off + m as i64).collect();
    let mut p2 = p1.clone();
    p1.shuffle(rng);
    p2.shuffle(rng);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by_key(|&j| (p1[j] + p2[j], j));
    let p1: Vec<i64> = idx.iter().map(|&j| p1[j]).collect();
    let p2: Vec<i64> = idx.iter().map(|&j| p2[j]).collect();
    let a = p1.iter().zip(&p2).map(|(x, y)| x + y).collect();
    (TwoNmtsInstance { variant, m, a }, NmtsSolution { p1, p2 })
}

/// A random valid instance, not necessarily solvable: a planted instance
/// with `moves` random unit transfers between targets.
pub fn random_instance<R: Rng + ?Sized>(
    m: usize,
    variant: Variant,
    moves: usize,
    rng: &mut R,
) -> TwoNmtsInstance {
    let (mut inst, _) = random_planted(m, variant, rng);
    let (lo, hi) = TwoNmtsInstance::target_range(variant, m);
    if m >= 2 {
        for _ in 0..moves {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i != j && inst.a[i] < hi && inst.a[j] > lo {
                inst.a[i] += 1;
                inst.a[j] -= 1;
            }
        }
    }
    inst.a.sort_unstable();
    inst
}
