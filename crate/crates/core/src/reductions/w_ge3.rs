//! Construction for `w ≥ 3` from standard 2NMTS.
//!
//! `z = ⌈(w+2)m⌉ + 1`. The special candidates take `N1`'s top `m` scores and
//! `N2` scores chosen by a floor so that `c_i` can absorb exactly
//! `a_{m+1−i} − 2` manipulator points. The rest pair `N1`'s remaining scores
//! descending with `N2`'s remaining scores ascending, and both manipulators
//! give `c_i` score `i − 1`.

use std::collections::{BTreeMap, BTreeSet};

use super::validate::le_all;
use super::{
    assemble, check_n2_scores, label, BuildOptions, Construction, Params, ReductionArtifact,
    ReductionKind, ValidationReport,
};
use crate::error::{Error, Result};
use crate::nmts::{TwoNmtsInstance, Variant};
use crate::rational::Rational;

pub struct WGe3;

struct Layout {
    z: i64,
    n1_star: i64,
    v2_star: i64,
}

fn layout(m: i64, w: Rational, a1: i64) -> Layout {
    Layout {
        z: ((w + 2) * m).ceil() as i64 + 1,
        n1_star: ((w - 1) * m).ceil() as i64 + 1,
        v2_star: ((w - 2) * m).ceil() as i64 + a1 - 2,
    }
}

fn d_value(w: Rational, lay: &Layout, a: &[i64], i: usize) -> Rational {
    let m = a.len();
    w * lay.n1_star + Rational::from_int(lay.v2_star + 2 * lay.z - a[m - i])
}

pub fn reduce_w_ge3(instance: &TwoNmtsInstance, w: Rational) -> Result<ReductionArtifact> {
    if instance.variant != Variant::Standard {
        return Err(Error::Precondition("w >= 3 construction needs a standard instance".into()));
    }
    instance.validate()?;
    if w < Rational::from_int(3) {
        return Err(Error::Precondition(format!("w = {w} < 3")));
    }
    let m = instance.m;
    let a = &instance.a;
    let lay = layout(m as i64, w, a[0]);
    let z = lay.z as usize;
    let star = z - 1;
    if lay.n1_star >= lay.z - m as i64 {
        return Err(Error::Construction {
            check: "n1_star_range".into(),
            detail: format!("c* score {} collides with the top {m}", lay.n1_star),
        });
    }

    let mut n1 = vec![0i64; z];
    let mut n2 = vec![0i64; z];
    n1[star] = lay.n1_star;
    n2[star] = lay.v2_star;
    let mut dvec = Vec::with_capacity(m);
    let mut entries = vec![("c*".to_string(), lay.v2_star)];
    for i in 1..=m {
        n1[i - 1] = lay.z - i as i64;
        let d = d_value(w, &lay, a, i);
        n2[i - 1] = (d - w * n1[i - 1]).floor() as i64;
        entries.push((label(i - 1, z), n2[i - 1]));
        dvec.push(d);
    }
    check_n2_scores(&entries, z)?;

    let used1: BTreeSet<i64> = n1[..m].iter().chain([&lay.n1_star]).copied().collect();
    let used2: BTreeSet<i64> = entries.iter().map(|e| e.1).collect();
    let u = (0..lay.z).rev().filter(|s| !used1.contains(s));
    let g = (0..lay.z).filter(|s| !used2.contains(s));
    for ((c, ui), gi) in (m..star).zip(u).zip(g) {
        n1[c] = ui;
        n2[c] = gi;
    }
    let layout: BTreeMap<usize, i64> = (m..star).map(|c| (c, c as i64)).collect();
    assemble(
        ReductionKind::WGe3,
        instance,
        w,
        &n1,
        n2,
        layout.clone(),
        layout,
        BTreeMap::new(),
        Vec::new(),
        Vec::new(),
        Params { m, z, ..Params::default() },
        dvec,
    )
}

impl Construction for WGe3 {
    fn kind(&self) -> ReductionKind {
        ReductionKind::WGe3
    }

    fn variant(&self) -> Variant {
        Variant::Standard
    }

    fn accepts_weight(&self, w: Rational) -> bool {
        w >= Rational::from_int(3)
    }

    fn build(&self, instance: &TwoNmtsInstance, w: Rational, _: &BuildOptions) -> Result<ReductionArtifact> {
        reduce_w_ge3(instance, w)
    }

    fn check(&self, art: &ReductionArtifact, report: &mut ValidationReport) {
        let m = art.m();
        let mi = m as i64;
        let w = art.w;
        let a = &art.source.a;
        let a1 = a[0];
        let z = art.z();
        let star = z - 1;
        let lay = layout(mi, w, a1);
        report.eq("regime", w >= Rational::from_int(3), true, None);
        report.eq("z_formula", z as i64, lay.z, None);
        if z as i64 != lay.z {
            return;
        }
        report.eq("n1_star_formula", art.n1_scores[star], w * lay.n1_star, None);
        report.eq("n2_star_formula", art.n2_scores[star], lay.v2_star, None);
        report.eq("dvec_len", art.dvec.len(), m, None);
        for i in 1..=m {
            let loc = Some(label(i - 1, z));
            let d = d_value(w, &lay, a, i);
            report.eq("n1_ci_formula", art.n1_scores[i - 1], w * (lay.z - i as i64), loc.clone());
            if let Some(&stored) = art.dvec.get(i - 1) {
                report.eq("d_formula", stored, d, loc.clone());
            }
            let sum = art.n1_scores[i - 1] + Rational::from_int(art.n2_scores[i - 1]);
            report.lt("floor_window_lower", d - Rational::ONE, sum, loc.clone());
            report.le("floor_window_upper", sum, d, loc.clone());
            // Lemma-3 chain: a_{m+1-i} - 2 extra points fit, one more does not.
            let base = art.n1_scores[star] + Rational::from_int(art.n2_scores[star] + 2 * lay.z - 2);
            let fits = sum + Rational::from_int(a[m - i] - 2);
            report.le("budget_chain_fits", fits, base, loc.clone());
            report.lt("budget_chain_tight", base, fits + Rational::ONE, loc);
        }

        // Remaining candidates: N1 descending, N2 ascending, manipulators i-1.
        let rest: Vec<usize> = (m..star).collect();
        let n1_desc = rest.windows(2).all(|p| art.n1_scores[p[0]] > art.n1_scores[p[1]]);
        let n2_asc = rest.windows(2).all(|p| art.n2_scores[p[0]] < art.n2_scores[p[1]]);
        report.holds("rest_n1_descending", n1_desc, "N1 remaining scores not descending");
        report.holds("rest_n2_ascending", n2_asc, "N2 remaining scores not ascending");
        let layout_ok = rest
            .iter()
            .all(|&c| art.m1_layout.get(&c) == Some(&(c as i64)) && art.m2_layout.get(&c) == Some(&(c as i64)));
        report.holds("rest_manipulators_i_minus_1", layout_ok, "manipulator layout is not t = i - 1");

        // Upper envelopes v'_1i = w(z - i), v'_2i = i - 1 and their endpoint totals.
        le_all(
            report,
            "rest_n1_envelope",
            rest.iter().map(|&c| (art.n1_scores[c], w * (lay.z - 1 - c as i64), label(c, z))),
        );
        le_all(
            report,
            "rest_n2_envelope",
            rest.iter().map(|&c| {
                (Rational::from_int(art.n2_scores[c]), Rational::from_int(c as i64), label(c, z))
            }),
        );
        let bound = (w * w + w * 2 + 2) * mi + w + a1 - 2;
        report.le("fstar_lower_bound", bound, art.fstar, None);
        let wp1 = ((w + 1) * mi).ceil() as i64;
        let wp2 = ((w + 2) * mi).ceil() as i64;
        let envelope_total = |i: i64| w * (lay.z - i) + Rational::from_int(3 * (i - 1));
        let f_first = envelope_total(mi + 1);
        report.eq("envelope_first_formula", f_first, w * wp1 + 3 * mi, None);
        report.le("envelope_first_bound", f_first, (w * w + w + 3) * mi + w, None);
        report.le("envelope_first_at_most_bound", f_first, bound, None);
        let f_last = envelope_total(wp2);
        report.eq("envelope_last_formula", f_last, w + 3 * wp2 - 3, None);
        report.lt("envelope_last_bound", f_last, (w * 3 + 6) * mi + w, None);
        report.le("envelope_last_at_most_bound", f_last, bound, None);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::{ballot_from_scores, evaluate};
    use crate::nmts::NmtsSolution;
    use crate::reductions::{lifted_profile, validate_reduction};

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn m2_w3_values() {
        let inst = TwoNmtsInstance::standard(vec![3, 3]).unwrap();
        let art = reduce_w_ge3(&inst, r(3, 1)).unwrap();
        assert_eq!(art.z(), 11);
        assert_eq!(art.n1_scores[10], r(15, 1));
        assert_eq!(art.n2_scores[10], 3);
        assert_eq!(art.n1_scores[0], r(30, 1));
        assert_eq!(art.n2_scores[0], 7);
        assert_eq!(art.n1_scores[1], r(27, 1));
        assert_eq!(art.n2_scores[1], 10);
        assert_eq!(art.fstar, r(38, 1));
        let report = validate_reduction(&art);
        assert!(report.passed, "{:?}", report.first_failure());

        let n1 = ballot_from_scores(&art.n1_scores.iter().copied().enumerate().collect(), r(3, 1)).unwrap();
        assert_eq!(n1, art.profile.n1);
        assert_eq!((n1.rank_of(0), n1.rank_of(1), n1.rank_of(10)), (1, 2, 6));

        // Lemma-3 chain at i = 1: 37 + 3 - 2 = 38 <= 38 and 37 + 3 - 1 = 39 > 38.
        assert_eq!(art.pvec[0], r(37, 1));
        let tight: Vec<_> = report.named("budget_chain_tight").collect();
        assert!(tight.iter().all(|c| c.passed));
    }

    #[test]
    fn m2_rational_weight_values() {
        let inst = TwoNmtsInstance::standard(vec![3, 3]).unwrap();
        let art = reduce_w_ge3(&inst, r(7, 2)).unwrap();
        assert_eq!(art.z(), 12);
        assert_eq!(art.n1_scores[11], r(21, 1));
        assert_eq!(art.n2_scores[11], 4);
        assert_eq!(art.n1_scores[0], r(77, 2));
        assert_eq!(art.n2_scores[0], 7);
        assert_eq!(art.fstar, r(47, 1));
        assert!(validate_reduction(&art).passed);
    }

    #[test]
    fn lifted_m2_co_wins_at_fstar() {
        let inst = TwoNmtsInstance::standard(vec![3, 3]).unwrap();
        let art = reduce_w_ge3(&inst, r(3, 1)).unwrap();
        let sol = NmtsSolution { p1: vec![1, 2], p2: vec![2, 1] };
        let e = evaluate(&lifted_profile(&art, &sol).unwrap()).unwrap();
        assert!(e.success);
        assert_eq!(e.totals[0], r(38, 1));
        assert_eq!(e.totals[1], r(38, 1));
        assert_eq!(e.totals[10], r(38, 1));
        assert!(e.totals.iter().all(|t| *t <= r(38, 1)));
    }

    #[test]
    fn manipulator_low_scores_cover_budget_sum() {
        for m in 1..=6i64 {
            let budget: i64 = m * (m + 1) - 2 * m;
            assert_eq!(budget, m * (m - 1));
            assert_eq!(budget, 2 * (0..m).sum::<i64>());
        }
    }

    #[test]
    fn rejects_small_weight_and_restricted() {
        let inst = TwoNmtsInstance::standard(vec![3, 3]).unwrap();
        assert!(reduce_w_ge3(&inst, r(5, 2)).is_err());
        let rinst = TwoNmtsInstance::restricted(vec![1, 1]).unwrap();
        assert!(reduce_w_ge3(&rinst, r(3, 1)).is_err());
    }

    #[test]
    fn corrupted_n2_fails_floor_window() {
        let inst = TwoNmtsInstance::standard(vec![3, 3]).unwrap();
        let mut art = reduce_w_ge3(&inst, r(3, 1)).unwrap();
        art.n2_scores[0] += 1;
        let report = validate_reduction(&art);
        assert!(!report.passed);
        let window: Vec<_> = report.named("floor_window_upper").filter(|c| !c.passed).collect();
        assert_eq!(window.len(), 1);
        assert_eq!(window[0].location.as_deref(), Some("c_1"));
    }
}
