//! Construction for `1 < w < 3` from restricted 2NMTS, with `ε = w − 1`.
//!
//! `D = ⌊(2+ε)m⌋·p + 3m` and `z = D + m + 1`. The `D` ordinary candidates
//! form `2p + 3` groups of `m` followed by `R = D − (2p+3)m` leftovers.
//! `N1` and `N2` are laid out in virtual scores (`{1..D}` and
//! `{m..D+m−1}`) and mapped onto their actual remaining scores; both
//! manipulators use `{m, …, D+m−1}` for the ordinary candidates.

use std::collections::{BTreeMap, BTreeSet};

use super::validate::{check_groups, le_all, GroupView};
use super::{
    assemble, check_n2_scores, devirtualize, label, validate_reduction, BuildOptions, Construction,
    GroupLayout, Params, ReductionArtifact, ReductionKind, Segment, ValidationReport, VirtualMap,
};
use crate::error::{Error, Result};
use crate::nmts::{TwoNmtsInstance, Variant};
use crate::rational::Rational;

pub const DEFAULT_P_CAP: u64 = 1_000_000;

pub struct WOpen;

/// Parameters shared by the builder and the checks.
#[derive(Clone, Copy, Debug)]
struct Dims {
    m: i64,
    w: Rational,
    eps: Rational,
    p: i64,
    /// `⌊(2+ε)m⌋`.
    k: i64,
    /// `⌊(1+ε)m⌋`.
    l: i64,
    d: i64,
    r: i64,
    /// Start of group 4 in `M2`: `D + a_1 − 6m + ⌊(m+1)ε⌋`.
    t4: i64,
    a1: i64,
}

impl Dims {
    fn new(m: usize, w: Rational, p: u64, a1: i64) -> Dims {
        let m = m as i64;
        let eps = w - 1;
        let k = ((eps + 2) * m).floor() as i64;
        let l = (w * m).floor() as i64;
        let p = p as i64;
        let d = k * p + 3 * m;
        let t4 = d + a1 - 6 * m + (eps * (m + 1)).floor() as i64;
        Dims { m, w, eps, p, k, l, d, r: d - (2 * p + 3) * m, t4, a1 }
    }

    fn groups(&self) -> usize {
        (2 * self.p + 3) as usize
    }

    /// `X = w(D+1) + a_1 − D − m`, the non-manipulator total `c*` needs.
    fn x(&self) -> Rational {
        self.w * (self.d + 1) + Rational::from_int(self.a1 - self.d - self.m)
    }

    /// Unweighted `N1` score of `c*`.
    fn k1_star(&self) -> i64 {
        (self.x() / self.w).floor() as i64
    }

    fn v2_star(&self) -> i64 {
        (self.x() - self.w * self.k1_star()).ceil() as i64
    }

    fn fstar(&self) -> Rational {
        self.w * self.k1_star() + Rational::from_int(self.v2_star() + 2 * (self.d + self.m))
    }

    fn lowest_m2(&self) -> i64 {
        self.t4 - (2 * self.p - 1) * (self.m + 1) - self.m + 1
    }

    /// Segments of group `g` (1-based), in virtual scores for `N1`/`N2`.
    fn group(&self, g: usize, first: usize) -> GroupLayout {
        let (m, d, k, l) = (self.m, self.d, self.k, self.l);
        let (n1, n2, m1, m2) = match g {
            1 => (Segment::desc(d), Segment::asc(m), Segment::asc(m), Segment::desc(d - m - 1)),
            2 => (Segment::desc(2 * m), Segment::asc(2 * m), Segment::asc(3 * m), Segment::desc(d - 1)),
            3 => (Segment::desc(m), Segment::asc(3 * m), Segment::asc(2 * m), Segment::desc(d + m - 1)),
            _ => {
                let q = g as i64 - 4;
                let i = q / 2;
                let (n2, m1) = if q % 2 == 0 {
                    (4 * m + i * k, 4 * m + i * k)
                } else {
                    (5 * m + i * k, 4 * m + l + i * k)
                };
                (
                    Segment::desc(d - (g as i64 - 3) * m),
                    Segment::asc(n2),
                    Segment::asc(m1),
                    Segment::desc(self.t4 - q * (m + 1)),
                )
            }
        };
        GroupLayout { index: g, first, len: m as usize, n1, n2, m1, m2 }
    }
}

fn check_precondition(m: usize, eps: Rational) -> Result<()> {
    if eps <= Rational::ZERO || eps >= Rational::from_int(2) {
        return Err(Error::Precondition(format!("ε = {eps} outside (0, 2)")));
    }
    if m <= 3 || eps * m as i64 <= Rational::from_int(3) {
        return Err(Error::Precondition(format!("need m > max(3, 3/ε), got m = {m}, ε = {eps}")));
    }
    Ok(())
}

/// Builds the artifact without validating it.
fn build_unchecked(instance: &TwoNmtsInstance, w: Rational, p: u64) -> Result<ReductionArtifact> {
    if instance.variant != Variant::Restricted {
        return Err(Error::Precondition("1 < w < 3 construction needs a restricted instance".into()));
    }
    instance.validate()?;
    let m = instance.m;
    check_precondition(m, w - 1)?;
    if p == 0 {
        return Err(Error::Precondition("p must be positive".into()));
    }
    let a = &instance.a;
    let dims = Dims::new(m, w, p, a[0]);
    let (mi, d) = (dims.m, dims.d);
    let z = (d + mi + 1) as usize;
    let star = z - 1;
    let fstar = dims.fstar();

    let k1_star = dims.k1_star();
    if k1_star < 0 || k1_star > d {
        return Err(Error::Construction {
            check: "n1_star_range".into(),
            detail: format!("c* gets unweighted N1 score {k1_star}, outside 0..={d}"),
        });
    }
    let mut n1 = vec![0i64; z];
    let mut n2 = vec![0i64; z];
    n1[star] = k1_star;
    n2[star] = dims.v2_star();
    let mut entries = vec![("c*".to_string(), n2[star])];
    for i in 1..=m {
        n1[i - 1] = d + i as i64;
        n2[i - 1] = if i == 1 {
            d + mi
        } else {
            (fstar - w * n1[i - 1] - a[i - 1]).floor() as i64
        };
        entries.push((label(i - 1, z), n2[i - 1]));
    }
    check_n2_scores(&entries, z)?;

    let groups: Vec<GroupLayout> =
        (1..=dims.groups()).map(|g| dims.group(g, m + (g - 1) * m)).collect();
    let mut virtual_n1 = BTreeMap::new();
    let mut virtual_n2 = BTreeMap::new();
    let mut m1_layout = BTreeMap::new();
    let mut m2_layout = BTreeMap::new();
    for g in &groups {
        for (j, c) in g.members().enumerate() {
            virtual_n1.insert(c, g.n1.at(j));
            virtual_n2.insert(c, g.n2.at(j));
            m1_layout.insert(c, g.m1.at(j));
            m2_layout.insert(c, g.m2.at(j));
        }
    }

    // Leftovers: remaining N1/N2 scores high to low, manipulators low to high.
    let leftovers: Vec<usize> = (m + dims.groups() * m..star).collect();
    let remaining = |used: &BTreeMap<usize, i64>, range: std::ops::RangeInclusive<i64>| -> Vec<i64> {
        let used: BTreeSet<i64> = used.values().copied().collect();
        range.filter(|s| !used.contains(s)).collect()
    };
    let r1 = remaining(&virtual_n1, 1..=d);
    let r2 = remaining(&virtual_n2, mi..=d + mi - 1);
    let s1 = remaining(&m1_layout, mi..=d + mi - 1);
    let s2 = remaining(&m2_layout, mi..=d + mi - 1);
    for rest in [&r1, &r2, &s1, &s2] {
        if rest.len() != leftovers.len() {
            return Err(Error::Construction {
                check: "leftover_count".into(),
                detail: format!("{} scores left for {} leftovers", rest.len(), leftovers.len()),
            });
        }
    }
    for (k, &c) in leftovers.iter().enumerate() {
        virtual_n1.insert(c, r1[r1.len() - 1 - k]);
        virtual_n2.insert(c, r2[r2.len() - 1 - k]);
        m1_layout.insert(c, s1[k]);
        m2_layout.insert(c, s2[k]);
    }

    let n1_available: BTreeSet<i64> = (0..=d).filter(|&s| s != k1_star).collect();
    let used2: BTreeSet<i64> = entries.iter().map(|e| e.1).collect();
    let n2_available: BTreeSet<i64> = (0..z as i64).filter(|s| !used2.contains(s)).collect();
    let mut virtual_maps = BTreeMap::new();
    for (voter, virt, available, scores) in [
        ("n1", virtual_n1, n1_available, &mut n1),
        ("n2", virtual_n2, n2_available, &mut n2),
    ] {
        let actual = devirtualize(&virt, &available)?;
        let mut map = BTreeMap::new();
        for (&c, &s) in &actual {
            scores[c] = s;
            map.insert(virt[&c], s);
        }
        virtual_maps.insert(voter.to_string(), VirtualMap { candidates: virt, map });
    }

    let params = Params {
        m,
        z,
        eps: Some(dims.eps),
        d: Some(d),
        p: Some(p),
        r: Some(dims.r),
    };
    assemble(
        ReductionKind::WOpen,
        instance,
        w,
        &n1,
        n2,
        m1_layout,
        m2_layout,
        virtual_maps,
        groups,
        leftovers,
        params,
        Vec::new(),
    )
}

/// Builds and validates; a failing check becomes a construction error.
pub fn reduce_w_open(instance: &TwoNmtsInstance, w: Rational, p: u64) -> Result<ReductionArtifact> {
    let art = build_unchecked(instance, w, p)?;
    let report = validate_reduction(&art);
    match report.first_failure() {
        None => Ok(art),
        Some(c) => Err(Error::Construction {
            check: c.name.clone(),
            detail: format!("{} {} {} at p = {p}", c.lhs, c.relation, c.rhs),
        }),
    }
}

/// Instances probing every `a_1 ∈ {0, …, m−1}`:
/// `(k, m−1, …, m−1, 2m−2−k)`. Every constraint that depends on `p` depends
/// on the instance only through `a_1`.
pub fn choose_p_probe(m: usize) -> Vec<TwoNmtsInstance> {
    let mi = m as i64;
    (0..mi)
        .map(|k| {
            let mut a = vec![mi - 1; m];
            a[0] = k;
            a[m - 1] = 2 * mi - 2 - k;
            TwoNmtsInstance::restricted(a).expect("probe instance is valid")
        })
        .collect()
}

/// Smallest `p ≤ cap` for which the construction validates on every probe
/// instance of size `m`.
pub fn choose_p(m: usize, eps: Rational, cap: u64) -> Result<u64> {
    check_precondition(m, eps)?;
    let w = eps + 1;
    let probes = choose_p_probe(m);
    for p in 1..=cap {
        if probes.iter().all(|inst| reduce_w_open(inst, w, p).is_ok()) {
            return Ok(p);
        }
    }
    Err(Error::PCapReached { cap })
}

impl Construction for WOpen {
    fn kind(&self) -> ReductionKind {
        ReductionKind::WOpen
    }

    fn variant(&self) -> Variant {
        Variant::Restricted
    }

    fn accepts_weight(&self, w: Rational) -> bool {
        w > Rational::ONE && w < Rational::from_int(3)
    }

    fn build(&self, instance: &TwoNmtsInstance, w: Rational, options: &BuildOptions) -> Result<ReductionArtifact> {
        if let Some(p) = options.p {
            return reduce_w_open(instance, w, p);
        }
        let start = choose_p(instance.m, w - 1, options.p_cap)?;
        for p in start..=options.p_cap {
            if let Ok(art) = reduce_w_open(instance, w, p) {
                return Ok(art);
            }
        }
        Err(Error::PCapReached { cap: options.p_cap })
    }

    fn check(&self, art: &ReductionArtifact, report: &mut ValidationReport) {
        let m = art.m();
        let w = art.w;
        let a = &art.source.a;
        let z = art.z();
        let star = z - 1;
        let eps = w - 1;
        let params_ok = art.source.variant == Variant::Restricted
            && self.accepts_weight(w)
            && art.params.eps == Some(eps)
            && art.params.p.is_some_and(|p| p > 0);
        report.holds("regime", params_ok, "needs a restricted source, 1 < w < 3 and p > 0");
        if !params_ok {
            return;
        }
        report.holds(
            "lemma7_precondition",
            check_precondition(m, eps).is_ok(),
            format!("m = {m}, ε = {eps}"),
        );
        let dims = Dims::new(m, w, art.params.p.unwrap_or(1), a[0]);
        let (mi, d) = (dims.m, dims.d);
        report.eq("d_formula", art.params.d.unwrap_or(i64::MIN), d, None);
        report.eq("z_formula", z as i64, d + mi + 1, None);
        report.eq("r_formula", art.params.r.unwrap_or(i64::MIN), dims.r, None);
        report.eq("r_closed_form", dims.r, dims.p * (eps * mi).floor() as i64, None);
        if z as i64 != d + mi + 1 {
            return;
        }

        report.eq("n1_star_formula", art.n1_scores[star], w * dims.k1_star(), None);
        report.eq("n2_star_formula", art.n2_scores[star], dims.v2_star(), None);
        report.eq("fstar_formula", art.fstar, dims.fstar(), None);
        let fstar_floor = w * (d + 1) + Rational::from_int(d + mi + dims.a1);
        report.le("fstar_lower_bound", fstar_floor, art.fstar, None);
        report.lt("n1_star_below_c1", art.n1_scores[star], art.n1_scores[0], None);
        for i in 1..=m {
            let loc = Some(label(i - 1, z));
            report.eq("n1_ci_formula", art.n1_scores[i - 1], w * (d + i as i64), loc.clone());
            let want = if i == 1 {
                d + mi
            } else {
                (art.fstar - w * (d + i as i64) - a[i - 1]).floor() as i64
            };
            report.eq("n2_ci_formula", art.n2_scores[i - 1], want, loc);
        }
        let c1 = art.pvec[0] + Rational::from_int(dims.a1);
        report.le("c1_window_fits", c1, art.fstar, None);
        report.lt("c1_window_tight", art.fstar, c1 + Rational::ONE, None);
        let decreasing = art.n2_scores[..m].windows(2).all(|p| p[0] > p[1]);
        report.holds("n2_special_decreasing", decreasing, "N2 scores of c_1..c_m not strictly decreasing");
        report.lt("n2_star_below_specials", art.n2_scores[star], art.n2_scores[m - 1], None);

        // Layout constraints, starting with the exact group list.
        let expected: Vec<GroupLayout> =
            (1..=dims.groups()).map(|g| dims.group(g, m + (g - 1) * m)).collect();
        report.eq("group_count", art.groups.len(), dims.groups(), None);
        let dirs = art.groups.iter().all(|g| {
            g.len == m && g.n1.descending && g.m2.descending && !g.n2.descending && !g.m1.descending
        });
        report.holds("layout_directions", dirs, "N1/M2 must fall and N2/M1 rise within groups");
        report.holds("layout_groups", art.groups == expected, "groups differ from the layout rules");
        let by_index = |g: usize| art.groups.get(g - 1);
        let block = |g: usize, pick: fn(&GroupLayout) -> Segment| -> BTreeSet<i64> {
            by_index(g).map(|x| pick(x).values(m).collect()).unwrap_or_default()
        };
        let union = |gs: &[usize], pick: fn(&GroupLayout) -> Segment| -> BTreeSet<i64> {
            gs.iter().flat_map(|&g| block(g, pick)).collect()
        };
        report.holds(
            "layout_n1_groups_2_3_lowest",
            union(&[2, 3], |g| g.n1) == (1..=2 * mi).collect(),
            "N1 groups 2-3 do not hold its last 2m virtual scores",
        );
        let consecutive = (2..=dims.groups()).filter(|&g| g != 2 && g != 3).all(|g| {
            let prev = if g == 4 { 1 } else { g - 1 };
            match (by_index(prev), by_index(g)) {
                (Some(x), Some(y)) => y.n1.start == x.n1.start - mi,
                _ => false,
            }
        });
        report.holds("layout_n1_consecutive_after_group_1", consecutive, "N1 groups 4+ not consecutive");
        let low4: BTreeSet<i64> = (mi..5 * mi).collect();
        report.holds(
            "layout_n2_groups_1_4_lowest",
            union(&[1, 2, 3, 4], |g| g.n2) == low4,
            "N2 groups 1-4 do not hold its lowest 4m scores",
        );
        report.holds(
            "layout_m1_groups_1_4_lowest",
            union(&[1, 2, 3, 4], |g| g.m1) == low4,
            "M1 groups 1-4 do not hold its lowest 4m scores",
        );
        let alternating = (5..=dims.groups()).all(|g| match (by_index(g - 1), by_index(g)) {
            (Some(x), Some(y)) => {
                let (n2_step, m1_step) = if g % 2 == 1 { (mi, dims.l) } else { (dims.l, mi) };
                y.n2.start - x.n2.start == n2_step && y.m1.start - x.m1.start == m1_step
            }
            _ => false,
        });
        report.holds("layout_n2_m1_alternating_offsets", alternating, "offsets do not alternate m / ⌊(1+ε)m⌋");
        report.holds(
            "layout_m2_groups_1_3_highest",
            union(&[1, 2, 3], |g| g.m2) == (d - 2 * mi..d + mi).collect(),
            "M2 groups 1-3 do not hold its highest 3m scores",
        );
        report.eq("layout_m2_group_4_start", by_index(4).map_or(i64::MIN, |g| g.m2.start), dims.t4, None);
        let m2_steps = (5..=dims.groups()).all(|g| match (by_index(g - 1), by_index(g)) {
            (Some(x), Some(y)) => x.m2.start - y.m2.start == mi + 1,
            _ => false,
        });
        report.holds("layout_m2_step_m_plus_1", m2_steps, "M2 groups 5+ do not step down by m+1");
        report.eq(
            "m1_last_group_top",
            by_index(dims.groups()).map_or(i64::MIN, |g| g.m1.at(m - 1)),
            d + mi - 1,
            None,
        );
        report.le("lowest_m2_at_least_m", mi, dims.lowest_m2(), None);
        report.le("m2_gap_nonempty", dims.t4 + 1, d - 2 * mi - 1, None);

        // Leftovers.
        let want_left: Vec<usize> = (m + dims.groups() * m..star).collect();
        report.holds("leftover_ids", art.leftovers == want_left, "leftovers are not the ungrouped candidates");
        report.eq("leftover_count", art.leftovers.len() as i64, dims.r, None);
        let Some(view) = GroupView::new(art) else {
            report.holds("group_view", false, "N1 scores are not multiples of w");
            return;
        };
        let left = &art.leftovers;
        let falls = |v: &dyn Fn(usize) -> i64| left.windows(2).all(|p| v(p[0]) > v(p[1]));
        let rises = |v: &dyn Fn(usize) -> i64| left.windows(2).all(|p| v(p[0]) < v(p[1]));
        let m1_of = |c: usize| art.m1_layout.get(&c).copied().unwrap_or(i64::MIN);
        let m2_of = |c: usize| art.m2_layout.get(&c).copied().unwrap_or(i64::MIN);
        let order_ok = falls(&|c| view.n1[c]) && falls(&|c| view.n2[c]) && rises(&m1_of) && rises(&m2_of);
        report.holds("leftover_order", order_ok, "leftovers not N1/N2 high to low, M1/M2 low to high");
        let virtual_sets = {
            let n1: BTreeSet<i64> = (m..star).map(|c| view.n1[c]).collect();
            let n2: BTreeSet<i64> = (m..star).map(|c| view.n2[c]).collect();
            n1 == (1..=d).collect() && n2 == (mi..d + mi).collect()
        };
        report.holds("virtual_score_sets", virtual_sets, "virtual scores are not {1..D} and {m..D+m-1}");
        let sum_ok = left.iter().all(|&c| view.n2[c] + m1_of(c) == d + 6 * mi - 1);
        report.holds("leftover_n2_m1_constant", sum_ok, format!("x_i + y_i != {}", d + 6 * mi - 1));
        le_all(
            report,
            "leftover_m2_below_virtual",
            left.iter().enumerate().map(|(k, &c)| {
                (
                    Rational::from_int(m2_of(c)),
                    Rational::from_int(d - 2 * mi - dims.r + k as i64),
                    label(c, z),
                )
            }),
        );
        let left_bound = w * (2 * mi + dims.r) + Rational::from_int((d + 6 * mi - 1) + (d - 2 * mi - dims.r));
        report.le("leftover_bound", left_bound, art.fstar, None);
        le_all(
            report,
            "leftover_totals_within_bound",
            left.iter().map(|&c| (view.total(art, c), left_bound, label(c, z))),
        );

        // Group totals, all at the first member.
        if !check_groups(art, &view, report) || art.groups.len() != dims.groups() {
            return;
        }
        let h: Vec<Rational> = art.groups.iter().map(|g| view.total(art, g.first)).collect();
        let h1 = (eps + 2) * d + Rational::from_int(mi - 1);
        report.eq("h1_formula", h[0], h1, None);
        report.lt("h1_below_fstar", h[0], art.fstar, None);
        report.eq("h2_formula", h[1], (eps * 2 + 7) * mi + Rational::from_int(d - 1), None);
        report.le("h2_at_most_fstar", h[1], art.fstar, None);
        report.lt("h3_below_h2", h[2], h[1], None);
        let h4 = w * (d - mi) + Rational::from_int(8 * mi + dims.t4);
        report.eq("h4_formula", h[3], h4, None);
        report.le("h4_at_most_fstar", h[3], art.fstar, None);
        let step = Rational::from_int(dims.l - 1) - w * mi;
        let recurrence = (4..h.len()).all(|g| h[g] == h[g - 1] + step);
        report.holds("h_recurrence", recurrence, "h_g != h_{g-1} - (1+ε)m + ⌊(1+ε)m⌋ - 1");
        report.lt("h_strictly_decreasing", step, Rational::ZERO, None);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn precondition() {
        assert!(matches!(choose_p(3, r(3, 2), 100), Err(Error::Precondition(_))));
        assert!(matches!(choose_p(6, r(1, 2), 100), Err(Error::Precondition(_))));
        assert!(choose_p(7, r(1, 2), 1000).is_ok());
        let inst = TwoNmtsInstance::restricted(vec![3, 3, 3, 3]).unwrap();
        assert!(matches!(reduce_w_open(&inst, r(3, 2), 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn probes_cover_every_first_target() {
        let probes = choose_p_probe(5);
        assert_eq!(probes.iter().map(|i| i.a[0]).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn eps_three_halves_m4() {
        let eps = r(3, 2);
        let p = choose_p(4, eps, 1000).unwrap();
        let inst = TwoNmtsInstance::restricted(vec![2, 2, 4, 4]).unwrap();
        let art = reduce_w_open(&inst, eps + 1, p).unwrap();
        let d = 14 * p as i64 + 12;
        assert_eq!(art.params.d, Some(d));
        let report = validate_reduction(&art);
        assert!(report.passed);
        let h1 = report.named("h1_formula").next().unwrap();
        assert_eq!(h1.rhs, ((eps + 2) * d + 3).to_string());
        let dims = Dims::new(4, eps + 1, p, 2);
        assert!(dims.lowest_m2() >= 4);
        // Smaller p fails on some probe.
        if p > 1 {
            assert!(choose_p_probe(4).iter().any(|i| reduce_w_open(i, eps + 1, p - 1).is_err()));
        }
    }

    #[test]
    fn too_small_p_names_a_check() {
        let inst = TwoNmtsInstance::restricted(vec![0, 2, 4, 6]).unwrap();
        match reduce_w_open(&inst, r(5, 2), 1) {
            Err(Error::Construction { check, .. }) => assert!(!check.is_empty()),
            other => panic!("expected a construction error, got {other:?}"),
        }
    }
}
