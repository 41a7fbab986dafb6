use std::collections::BTreeSet;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::{label, ConstructionRegistry, ReductionArtifact};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub lhs: String,
    pub relation: String,
    pub rhs: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Default for ValidationReport {
    fn default() -> Self {
        ValidationReport { checks: Vec::new(), passed: true }
    }
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        name: &str,
        passed: bool,
        lhs: impl Display,
        relation: &str,
        rhs: impl Display,
        location: Option<String>,
    ) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            lhs: lhs.to_string(),
            relation: relation.to_string(),
            rhs: rhs.to_string(),
            location,
        });
    }

    pub fn eq<T: PartialEq + Display>(&mut self, name: &str, lhs: T, rhs: T, loc: Option<String>) {
        let ok = lhs == rhs;
        self.record(name, ok, lhs, "==", rhs, loc);
    }

    pub fn le<T: PartialOrd + Display>(&mut self, name: &str, lhs: T, rhs: T, loc: Option<String>) {
        let ok = lhs <= rhs;
        self.record(name, ok, lhs, "<=", rhs, loc);
    }

    pub fn lt<T: PartialOrd + Display>(&mut self, name: &str, lhs: T, rhs: T, loc: Option<String>) {
        let ok = lhs < rhs;
        self.record(name, ok, lhs, "<", rhs, loc);
    }

    /// A structural property; `detail` describes the first offender.
    pub fn holds(&mut self, name: &str, ok: bool, detail: impl Display) {
        self.record(name, ok, if ok { "ok".to_string() } else { detail.to_string() }, "is", "ok", None);
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }
}

/// Records `name` once with the worst `(lhs, rhs)` pair over `items`, for
/// "for all" inequalities `lhs <= rhs`.
pub(super) fn le_all(
    report: &mut ValidationReport,
    name: &str,
    items: impl IntoIterator<Item = (Rational, Rational, String)>,
) {
    let worst = items.into_iter().max_by(|a, b| (a.0 - a.1).cmp(&(b.0 - b.1)));
    match worst {
        Some((l, r, loc)) => report.le(name, l, r, Some(loc)),
        None => report.holds(name, true, ""),
    }
}

/// Re-checks every structural property and inequality of an artifact.
/// Failures are report entries, never errors.
pub fn validate_reduction(artifact: &ReductionArtifact) -> ValidationReport {
    let mut report = ValidationReport::new();
    if !common_checks(artifact, &mut report) {
        return report;
    }
    let registry = ConstructionRegistry::default();
    if let Some(c) = registry.by_kind(artifact.kind) {
        c.check(artifact, &mut report);
    }
    report
}

fn common_checks(a: &ReductionArtifact, report: &mut ValidationReport) -> bool {
    let z = a.profile.z;
    let m = a.source.m;
    let shape_ok = a.source.validate().is_ok()
        && z >= m + 2
        && a.n1_scores.len() == z
        && a.n2_scores.len() == z
        && a.pvec.len() == m
        && a.params.m == m
        && a.params.z == z
        && a.w.is_positive();
    report.holds("artifact_shape", shape_ok, format!("z = {z}, m = {m}"));
    if !shape_ok {
        return false;
    }
    let w = a.w;
    let star = z - 1;

    report.eq("profile_weight", a.profile.weight, w, None);
    report.eq("target_is_last", a.profile.target, star, None);

    let want_n1: Vec<Rational> = (0..z as i64).map(|s| w * s).collect();
    let mut got_n1 = a.n1_scores.clone();
    got_n1.sort();
    report.holds("n1_score_set", got_n1 == want_n1, "N1 scores are not w * {0..z-1}");
    let mut got_n2 = a.n2_scores.clone();
    got_n2.sort();
    report.holds(
        "n2_score_set",
        got_n2.iter().copied().eq(0..z as i64),
        "N2 scores are not {0..z-1}",
    );
    let distinct = |v: &[Rational]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
    report.holds("n1_no_duplicates", distinct(&a.n1_scores), "duplicate N1 score");
    report.holds(
        "n2_no_duplicates",
        a.n2_scores.iter().collect::<BTreeSet<_>>().len() == z,
        "duplicate N2 score",
    );

    let ballot_n1: Vec<Rational> = a.profile.n1.scores().into_iter().map(|s| w * s).collect();
    report.holds("profile_n1_matches_scores", ballot_n1 == a.n1_scores, "N1 ballot disagrees");
    report.holds(
        "profile_n2_matches_scores",
        a.profile.n2.scores() == a.n2_scores,
        "N2 ballot disagrees",
    );

    let fstar = a.n1_scores[star] + Rational::from_int(a.n2_scores[star]) + Rational::from(2 * (z - 1));
    report.eq("fstar_definition", a.fstar, fstar, None);
    for i in 0..m {
        let p = a.n1_scores[i] + Rational::from_int(a.n2_scores[i]);
        report.eq("pvec_definition", a.pvec[i], p, Some(label(i, z)));
    }

    // Manipulators: {0..m-1} go to the special candidates, z-1 to the
    // target, the layouts cover everything in between.
    let rest: BTreeSet<usize> = (m..star).collect();
    for (voter, layout) in [("m1", &a.m1_layout), ("m2", &a.m2_layout)] {
        let covered = layout.keys().copied().collect::<BTreeSet<_>>() == rest;
        let mut values: Vec<i64> = layout.values().copied().collect();
        values.sort_unstable();
        let exact = values.iter().copied().eq(m as i64..star as i64);
        report.holds(
            &format!("{voter}_layout_set"),
            covered && exact,
            format!("{voter} layout is not a bijection onto {m}..{}", star - 1),
        );
    }

    for i in 1..=m {
        let lhs = a.pvec[i - 1] + Rational::from_int(a.budget(i));
        report.le("budget_fits", lhs, a.fstar, Some(label(i - 1, z)));
        report.lt("budget_tight", a.fstar, lhs + Rational::ONE, Some(label(i - 1, z)));
    }

    // Virtual maps: consistent with stored scores, monotone, dominating.
    let mut virtual_unweighted: [Option<Vec<i64>>; 2] = [None, None];
    for (voter, vm) in &a.virtual_maps {
        let slot = match voter.as_str() {
            "n1" => 0,
            "n2" => 1,
            _ => {
                report.holds("virtual_map_voter", false, format!("unknown voter {voter}"));
                continue;
            }
        };
        let actual = |c: usize| -> Option<i64> {
            if slot == 0 {
                (a.n1_scores[c] / w).to_integer().map(|x| x as i64)
            } else {
                Some(a.n2_scores[c])
            }
        };
        let monotone = vm.map.iter().zip(vm.map.iter().skip(1)).all(|(x, y)| x.1 < y.1);
        report.holds(&format!("{voter}_virtual_map_monotone"), monotone, "map not increasing");
        let mut consistent = vm.candidates.keys().all(|&c| c < star);
        let mut worst: Option<(Rational, Rational, String)> = None;
        let mut per_candidate = vec![None; z];
        for (&c, &v) in vm.candidates.iter().filter(|(c, _)| **c < star) {
            let act = actual(c);
            consistent &= act.is_some() && vm.map.get(&v).copied() == act;
            if let Some(act) = act {
                let item = (Rational::from_int(act), Rational::from_int(v), label(c, z));
                if worst.as_ref().is_none_or(|x| item.0 - item.1 > x.0 - x.1) {
                    worst = Some(item);
                }
            }
            per_candidate[c] = Some(v);
        }
        report.holds(&format!("{voter}_virtual_map_consistent"), consistent, "virtual map disagrees with scores");
        match worst {
            Some((l, r, loc)) => report.le(&format!("{voter}_devirtualize_dominance"), l, r, Some(loc)),
            None => report.holds(&format!("{voter}_devirtualize_dominance"), true, ""),
        }
        virtual_unweighted[slot] = Some(
            (0..z)
                .map(|c| per_candidate[c].unwrap_or_else(|| actual(c).unwrap_or(0)))
                .collect(),
        );
    }

    let layout_part = |c: usize| {
        Rational::from_int(
            a.m1_layout.get(&c).copied().unwrap_or(0) + a.m2_layout.get(&c).copied().unwrap_or(0),
        )
    };
    let virtual_total = |c: usize| {
        let n1 = match &virtual_unweighted[0] {
            Some(v) => w * v[c],
            None => a.n1_scores[c],
        };
        let n2 = match &virtual_unweighted[1] {
            Some(v) => v[c],
            None => a.n2_scores[c],
        };
        n1 + Rational::from_int(n2) + layout_part(c)
    };
    le_all(
        report,
        "rest_totals_at_most_fstar",
        (m..star).map(|c| (a.fixed_total(c), a.fstar, label(c, z))),
    );
    le_all(
        report,
        "virtual_totals_at_most_fstar",
        (m..star).map(|c| (virtual_total(c), a.fstar, label(c, z))),
    );
    le_all(
        report,
        "actual_totals_at_most_virtual",
        (m..star).map(|c| (a.fixed_total(c), virtual_total(c), label(c, z))),
    );
    true
}

/// Unweighted per-voter scores of every candidate as the groups see them:
/// virtual where the artifact has a virtual map, actual otherwise.
pub(super) struct GroupView {
    pub n1: Vec<i64>,
    pub n2: Vec<i64>,
}

impl GroupView {
    pub fn new(a: &ReductionArtifact) -> Option<GroupView> {
        let z = a.z();
        let mut n1 = Vec::with_capacity(z);
        for c in 0..z {
            let v = match a.virtual_maps.get("n1").and_then(|vm| vm.candidates.get(&c)) {
                Some(&v) => v,
                None => (a.n1_scores[c] / a.w).to_integer()? as i64,
            };
            n1.push(v);
        }
        let n2 = (0..z)
            .map(|c| match a.virtual_maps.get("n2").and_then(|vm| vm.candidates.get(&c)) {
                Some(&v) => v,
                None => a.n2_scores[c],
            })
            .collect();
        Some(GroupView { n1, n2 })
    }

    /// Total of `c` with N1 weighted and the manipulators per layout.
    pub fn total(&self, a: &ReductionArtifact, c: usize) -> Rational {
        let m1 = a.m1_layout.get(&c).copied().unwrap_or(0);
        let m2 = a.m2_layout.get(&c).copied().unwrap_or(0);
        a.w * self.n1[c] + Rational::from_int(self.n2[c] + m1 + m2)
    }
}

/// Checks that every group's recorded segments agree with the scores and
/// layouts, and that each group's best total sits at its first member.
pub(super) fn check_groups(a: &ReductionArtifact, view: &GroupView, report: &mut ValidationReport) -> bool {
    let z = a.z();
    let mut agree = true;
    let mut detail = String::new();
    for g in &a.groups {
        if g.first + g.len > z - 1 || g.first < a.m() {
            agree = false;
            detail = format!("group {} out of range", g.index);
            break;
        }
        for (j, c) in g.members().enumerate() {
            let ok = view.n1[c] == g.n1.at(j)
                && view.n2[c] == g.n2.at(j)
                && a.m1_layout.get(&c) == Some(&g.m1.at(j))
                && a.m2_layout.get(&c) == Some(&g.m2.at(j));
            if !ok && agree {
                agree = false;
                detail = format!("group {} disagrees at {}", g.index, label(c, z));
            }
        }
    }
    report.holds("groups_match_scores", agree, detail);
    if !agree {
        return false;
    }
    let mut leftmost = true;
    let mut detail = String::new();
    for g in &a.groups {
        let first = view.total(a, g.first);
        if let Some(c) = g.members().find(|&c| view.total(a, c) > first) {
            leftmost = false;
            detail = format!("group {}: {} beats the first member", g.index, label(c, z));
            break;
        }
    }
    report.holds("group_max_at_first_member", leftmost, detail);
    true
}
