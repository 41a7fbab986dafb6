//! Construction for `w = 2` from standard 2NMTS.
//!
//! `z = 7m + 1`. After the special candidates and the target, the other `6m`
//! candidates form six groups of `m` whose scores follow a fixed table.
//! `N2`'s group scores are laid out as virtual scores `{m+1, …, 7m}` and
//! then mapped onto the scores it actually has left.

use std::collections::{BTreeMap, BTreeSet};

use super::validate::{check_groups, le_all, GroupView};
use super::{
    assemble, check_n2_scores, devirtualize, label, BuildOptions, Construction, GroupLayout,
    Params, ReductionArtifact, ReductionKind, Segment, ValidationReport, VirtualMap,
};
use crate::error::{Error, Result};
use crate::nmts::{TwoNmtsInstance, Variant};
use crate::rational::Rational;

pub struct WEq2;

/// `(k, c, descending)` stands for a segment starting at `k·m + c`.
type Row = [(i64, i64, bool); 6];

const N1_ROW: Row = [(6, 0, true), (5, 0, true), (4, 0, true), (3, 0, true), (2, -1, true), (1, -1, true)];
const N2_ROW: Row = [(5, 0, true), (4, 0, true), (3, 0, true), (2, 0, true), (5, 1, false), (6, 1, false)];
const M1_ROW: Row = [(1, 0, false), (2, 0, false), (4, 0, false), (5, 0, false), (7, -1, true), (4, -1, true)];
const M2_ROW: Row = [(1, 0, false), (3, 0, false), (4, 0, false), (6, 0, false), (2, 0, false), (5, 0, false)];

fn segment(row: &Row, k: usize, m: i64) -> Segment {
    let (mult, c, desc) = row[k];
    Segment { start: mult * m + c, descending: desc }
}

/// The six groups exactly as tabulated.
pub(crate) fn table_groups(m: usize) -> Vec<GroupLayout> {
    let mi = m as i64;
    (0..6)
        .map(|k| GroupLayout {
            index: k + 1,
            first: (k + 1) * m,
            len: m,
            n1: segment(&N1_ROW, k, mi),
            n2: segment(&N2_ROW, k, mi),
            m1: segment(&M1_ROW, k, mi),
            m2: segment(&M2_ROW, k, mi),
        })
        .collect()
}

/// Highest virtual total of each group implied by the table.
pub fn table_group_maxima(m: usize) -> [i64; 6] {
    let m = m as i64;
    [19 * m, 19 * m, 19 * m, 19 * m, 18 * m - 2, 17 * m - 2]
}

fn special_n2(a: &[i64], i: usize) -> i64 {
    let m = a.len() as i64;
    let z = 7 * m + 1;
    z + 2 * i as i64 - a[a.len() - i] - 2 * m + a[0] - 1
}

pub fn reduce_w_eq2(instance: &TwoNmtsInstance) -> Result<ReductionArtifact> {
    if instance.variant != Variant::Standard {
        return Err(Error::Precondition("w = 2 construction needs a standard instance".into()));
    }
    instance.validate()?;
    let m = instance.m;
    let mi = m as i64;
    let a = &instance.a;
    let z = 7 * m + 1;
    let star = z - 1;
    let w = Rational::from_int(2);

    let mut n1 = vec![0i64; z];
    let mut n2 = vec![0i64; z];
    n1[star] = 2 * mi;
    n2[star] = mi + a[0];
    let mut entries = vec![("c*".to_string(), n2[star])];
    for i in 1..=m {
        n1[i - 1] = z as i64 - i as i64;
        n2[i - 1] = special_n2(a, i);
        entries.push((label(i - 1, z), n2[i - 1]));
    }
    check_n2_scores(&entries, z)?;

    let groups = table_groups(m);
    let mut virtual_n2 = BTreeMap::new();
    let mut m1_layout = BTreeMap::new();
    let mut m2_layout = BTreeMap::new();
    for g in &groups {
        for (j, c) in g.members().enumerate() {
            n1[c] = g.n1.at(j);
            virtual_n2.insert(c, g.n2.at(j));
            m1_layout.insert(c, g.m1.at(j));
            m2_layout.insert(c, g.m2.at(j));
        }
    }
    let used: BTreeSet<i64> = entries.iter().map(|e| e.1).collect();
    let available: BTreeSet<i64> = (0..z as i64).filter(|s| !used.contains(s)).collect();
    let actual = devirtualize(&virtual_n2, &available)?;
    let mut map = BTreeMap::new();
    for (&c, &s) in &actual {
        n2[c] = s;
        map.insert(virtual_n2[&c], s);
    }
    let virtual_maps = BTreeMap::from([("n2".to_string(), VirtualMap { candidates: virtual_n2, map })]);
    assemble(
        ReductionKind::WEq2,
        instance,
        w,
        &n1,
        n2,
        m1_layout,
        m2_layout,
        virtual_maps,
        groups,
        Vec::new(),
        Params { m, z, ..Params::default() },
        Vec::new(),
    )
}

impl Construction for WEq2 {
    fn kind(&self) -> ReductionKind {
        ReductionKind::WEq2
    }

    fn variant(&self) -> Variant {
        Variant::Standard
    }

    fn accepts_weight(&self, w: Rational) -> bool {
        w == Rational::from_int(2)
    }

    fn build(&self, instance: &TwoNmtsInstance, w: Rational, _: &BuildOptions) -> Result<ReductionArtifact> {
        if !self.accepts_weight(w) {
            return Err(Error::Precondition(format!("w = {w}, expected 2")));
        }
        reduce_w_eq2(instance)
    }

    fn check(&self, art: &ReductionArtifact, report: &mut ValidationReport) {
        let m = art.m();
        let mi = m as i64;
        let a = &art.source.a;
        let a1 = a[0];
        let z = art.z();
        let zi = z as i64;
        let star = z - 1;
        report.eq("regime", art.w, Rational::from_int(2), None);
        report.eq("z_formula", zi, 7 * mi + 1, None);
        if z != 7 * m + 1 {
            return;
        }
        report.eq("n1_star_formula", art.n1_scores[star], Rational::from_int(4 * mi), None);
        report.eq("n2_star_formula", art.n2_scores[star], mi + a1, None);
        for i in 1..=m {
            let loc = Some(label(i - 1, z));
            report.eq("n1_ci_formula", art.n1_scores[i - 1], Rational::from_int(2 * (zi - i as i64)), loc.clone());
            report.eq("n2_ci_formula", art.n2_scores[i - 1], special_n2(a, i), loc);
        }
        let increasing = art.n2_scores[..m].windows(2).all(|p| p[0] < p[1]);
        report.holds("n2_special_increasing", increasing, "N2 scores of c_1..c_m not increasing");
        le_all(
            report,
            "n2_special_range",
            (0..m).map(|c| {
                (Rational::from_int(art.n2_scores[c]), Rational::from_int(7 * mi), label(c, z))
            }),
        );
        report.lt("n2_star_below_specials", art.n2_scores[star], art.n2_scores[0], None);

        report.eq("fstar_formula", art.fstar, Rational::from_int(19 * mi + a1), None);
        report.eq("fstar_closed_form", art.fstar, Rational::from_int(3 * zi + a1 - 3 - 2 * mi), None);
        let psum: Rational = art.pvec.iter().copied().sum();
        report.eq("pvec_sum", psum, Rational::from_int(mi * (3 * zi + a1 - 2 - 3 * mi)), None);
        report.eq("tight_counting", psum + mi * (mi - 1), art.fstar * mi, None);

        report.holds("table_layout", art.groups == table_groups(m), "groups differ from the table");
        report.holds("no_leftovers", art.leftovers.is_empty(), "unexpected leftover candidates");
        let want_virtual: BTreeSet<i64> = (mi + 1..=7 * mi).collect();
        let got_virtual: Option<BTreeSet<i64>> =
            art.virtual_maps.get("n2").map(|vm| vm.candidates.values().copied().collect());
        report.holds(
            "n2_virtual_set",
            got_virtual.as_ref() == Some(&want_virtual),
            "N2 virtual scores are not {m+1..7m}",
        );

        let Some(view) = GroupView::new(art) else {
            report.holds("group_view", false, "N1 scores are not multiples of w");
            return;
        };
        if !check_groups(art, &view, report) {
            return;
        }
        let table = table_group_maxima(m);
        for g in &art.groups {
            let best = g.members().map(|c| view.total(art, c)).max().unwrap_or(Rational::ZERO);
            let loc = Some(format!("group {}", g.index));
            if let Some(&want) = table.get(g.index - 1) {
                report.eq("group_max_table", best, Rational::from_int(want), loc.clone());
            }
            report.le("group_max_at_most_fstar", best, art.fstar, loc);
        }
    }
}
