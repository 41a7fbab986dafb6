//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use borda_forge::election::{evaluate, Ballot, Profile};
use borda_forge::manipulation::{brute_force_manipulation, respective_reverse};
use borda_forge::nmts::{enumerate_instances, solve_2nmts, verify_solution, NmtsSolution, TwoNmtsInstance, Variant};
use borda_forge::pipeline::{run_pipeline, PipelineOptions, PipelineReport};
use borda_forge::rational::Rational;
use borda_forge::reductions::{
    choose_p, choose_p_probe, reduce_w_eq2, reduce_w_open, structured_search, to_canonical_json,
    validate_reduction, BuildOptions, ConstructionRegistry, ReductionArtifact,
};

/// Exact equality everywhere; rationals leave no room for a tolerance.
const RATIONAL_TOLERANCE: i64 = 0;
/// Required success or agreement rate, in percent.
const REQUIRED_RATE: usize = 100;

fn r(p: i128, q: i128) -> Rational {
    Rational::new(p, q)
}

fn report(n: u32, passed: bool, detail: impl std::fmt::Display) {
    println!("criterion {n}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn random_ballot(z: usize, rng: &mut ChaCha8Rng) -> Ballot {
    let mut v: Vec<usize> = (0..z).collect();
    v.shuffle(rng);
    Ballot::new(v).unwrap()
}

fn yes_instances(m: usize, variant: Variant) -> Vec<(TwoNmtsInstance, NmtsSolution)> {
    enumerate_instances(m, variant)
        .into_iter()
        .filter_map(|i| solve_2nmts(&i).unwrap().map(|s| (i, s)))
        .collect()
}

fn no_instances(m: usize, variant: Variant) -> Vec<TwoNmtsInstance> {
    enumerate_instances(m, variant)
        .into_iter()
        .filter(|i| solve_2nmts(i).unwrap().is_none())
        .collect()
}

fn build(inst: &TwoNmtsInstance, w: Rational) -> borda_forge::Result<ReductionArtifact> {
    let registry = ConstructionRegistry::default();
    registry.dispatch(w, inst.variant)?.build(inst, w, &BuildOptions::default())
}

/// Restricted sweep of criterion 4: `(ε, m)`.
const OPEN_SWEEP: [((i128, i128), usize); 3] = [((3, 2), 4), ((3, 2), 5), ((1, 2), 7)];

#[test]
fn criterion_1_reverse_always_succeeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut runs = 0usize;
    let mut ok = 0usize;
    let mut closed_form_mismatch = 0usize;
    for w in [r(1, 7), r(1, 2), r(9, 10), r(1, 1)] {
        for z in 2..=40usize {
            for _ in 0..200 {
                let n1 = random_ballot(z, &mut rng);
                let n2 = random_ballot(z, &mut rng);
                let target = rng.gen_range(0..z);
                let profile = Profile::new(w, target, n1.clone(), n2.clone()).unwrap();

                // Plain reversal, before the target is promoted.
                let rev = |b: &Ballot| Ballot::new(b.ranking().iter().rev().copied().collect()).unwrap();
                let plain = profile.clone().with_manipulators(rev(&n1), rev(&n2)).unwrap();
                let plain_totals = evaluate(&plain).unwrap().totals;

                let (m1, m2) = respective_reverse(&n1, &n2, target);
                let e = evaluate(&profile.clone().with_manipulators(m1, m2).unwrap()).unwrap();
                runs += 1;
                ok += e.success as usize;

                let zi = z as i64;
                let (r1, r2) = (|c| n1.rank_of(c) as i64, |c| n2.rank_of(c) as i64);
                let star = (w + 3) * zi - w * r1(target) - Rational::from_int(r2(target) + 2);
                let mut good = e.totals[target] == star;
                for c in (0..z).filter(|&c| c != target) {
                    let closed = (w + 1) * zi + (Rational::ONE - w) * r1(c) - 2;
                    good &= plain_totals[c] == closed && e.totals[c] <= closed;
                }
                closed_form_mismatch += !good as usize;
            }
        }
    }
    let passed = ok * 100 == runs * REQUIRED_RATE && closed_form_mismatch == 0 && runs == 31_200;
    report(1, passed, format_args!("{ok}/{runs} successes, {closed_form_mismatch} closed-form mismatches"));
    assert!(passed);
}

#[test]
fn criterion_2_oracle_totality() {
    // Relabelling non-target candidates maps instances onto each other, so
    // z = 6 fixes the target at the last candidate; smaller z try all.
    let mut jobs: Vec<(Rational, usize, usize)> = Vec::new();
    for w in [r(1, 2), r(1, 1)] {
        for z in 2..=6usize {
            let targets: Vec<usize> = if z < 6 { (0..z).collect() } else { vec![z - 1] };
            for t in targets {
                jobs.push((w, z, t));
            }
        }
    }
    let (total, found, certified) = jobs
        .par_iter()
        .map(|&(w, z, t)| {
            let perms: Vec<Ballot> = (0..z).permutations(z).map(|p| Ballot::new(p).unwrap()).collect();
            let mut counts = (0usize, 0usize, 0usize);
            for n1 in &perms {
                for n2 in &perms {
                    let p = Profile::new(w, t, n1.clone(), n2.clone()).unwrap();
                    let res = brute_force_manipulation(&p, 6).unwrap();
                    counts.0 += 1;
                    counts.1 += res.found as usize;
                    if let (Some(m1), Some(m2)) = (res.m1, res.m2) {
                        counts.2 += evaluate(&p.with_manipulators(m1, m2).unwrap()).unwrap().success as usize;
                    }
                }
            }
            counts
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let passed = found == total && certified == total;
    report(2, passed, format_args!("{found}/{total} found, {certified}/{total} certified by evaluate"));
    assert!(passed);
}

fn brute_force_nmts(inst: &TwoNmtsInstance) -> bool {
    let off = inst.variant.offset();
    let perms: Vec<Vec<i64>> = (off..off + inst.m as i64).permutations(inst.m).collect();
    perms.iter().any(|p1| {
        let need: Vec<i64> = inst.a.iter().zip(p1).map(|(a, x)| a - x).collect();
        perms.contains(&need)
    })
}

#[test]
fn criterion_3_solver_equivalence() {
    let mut checked = 0usize;
    let mut agree = 0usize;
    for variant in [Variant::Standard, Variant::Restricted] {
        for m in 1..=5 {
            for inst in enumerate_instances(m, variant) {
                let sol = solve_2nmts(&inst).unwrap();
                let valid = sol.as_ref().is_none_or(|s| verify_solution(&inst, s));
                checked += 1;
                agree += (valid && sol.is_some() == brute_force_nmts(&inst)) as usize;
            }
        }
    }
    let std_no = TwoNmtsInstance::standard(vec![2, 2, 8, 8]).unwrap();
    let res_no = TwoNmtsInstance::restricted(vec![0, 0, 6, 6]).unwrap();
    let named_no = solve_2nmts(&std_no).unwrap().is_none()
        && solve_2nmts(&res_no).unwrap().is_none()
        && !brute_force_nmts(&std_no)
        && !brute_force_nmts(&res_no);
    let passed = agree * 100 == checked * REQUIRED_RATE && named_no;
    report(3, passed, format_args!("{agree}/{checked} instances agree; named no-instances {named_no}"));
    assert!(passed);
}

#[test]
fn criterion_4_reduction_completeness() {
    let mut total = 0usize;
    let mut ok = 0usize;
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut record = |ok_now: bool, key: String| {
        if !ok_now {
            *failures.entry(key).or_default() += 1;
        }
    };
    for m in 2..=4 {
        for (inst, _) in yes_instances(m, Variant::Standard) {
            for w in [r(2, 1), r(3, 1), r(7, 2), r(5, 1)] {
                total += 1;
                let good = match run_pipeline(&inst, w, &PipelineOptions::default()) {
                    Ok((art, rep)) => {
                        let e = rep.evaluation.as_ref();
                        let mut good = rep.verdict && e.is_some_and(|e| e.success);
                        if w == r(2, 1) {
                            let fstar = Rational::from_int(19 * m as i64 + inst.a[0]);
                            good &= art.fstar == fstar;
                            good &= e.is_some_and(|e| {
                                (0..m).chain([art.target()]).all(|c| e.totals[c] == fstar)
                            });
                        }
                        good
                    }
                    Err(err) => {
                        record(false, format!("w={w}: {}", err_kind(&err.to_string())));
                        continue;
                    }
                };
                ok += good as usize;
                record(good, format!("w={w}: wrong verdict"));
            }
        }
    }
    for ((p, q), m) in OPEN_SWEEP {
        let w = r(p, q) + 1;
        let pmin = choose_p(m, r(p, q), 100_000).unwrap();
        for (inst, _) in yes_instances(m, Variant::Restricted) {
            total += 1;
            let options = PipelineOptions { build: BuildOptions { p: Some(pmin), ..BuildOptions::default() }, ..Default::default() };
            let good = run_pipeline(&inst, w, &options)
                .is_ok_and(|(_, rep)| rep.verdict && rep.evaluation.is_some_and(|e| e.success));
            ok += good as usize;
            record(good, format!("w={w}, m={m}"));
        }
    }
    let passed = ok * 100 == total * REQUIRED_RATE;
    report(4, passed, format_args!("{ok}/{total} yes-instances co-win; failures {failures:?}"));
    assert!(passed);
}

fn err_kind(msg: &str) -> &'static str {
    if msg.contains("duplicate score") {
        "N2 duplicate score"
    } else if msg.contains("n2_score_range") {
        "N2 score out of range"
    } else {
        "other construction error"
    }
}

#[test]
fn criterion_5_structured_soundness() {
    let mut total = 0usize;
    let mut sound = 0usize;
    let mut counting = true;
    for m in 3..=4 {
        for inst in no_instances(m, Variant::Standard) {
            for w in [r(2, 1), r(3, 1)] {
                let art = build(&inst, w).unwrap();
                let s = structured_search(&art).unwrap();
                total += 1;
                let pairs = (1..=m as u64).product::<u64>().pow(2);
                sound += (s.successes == 0 && s.pairs_checked == pairs) as usize;
                if w == r(2, 1) {
                    let mi = m as i64;
                    let psum: Rational = art.pvec.iter().copied().sum();
                    counting &= psum + mi * (mi - 1) == art.fstar * mi;
                }
            }
        }
    }
    let passed = total > 0 && sound == total && counting;
    report(5, passed, format_args!("{sound}/{total} no-instances without structured success; counting identity {counting}"));
    assert!(passed);
}

/// Changes one stored score of the artifact.
fn corrupt(art: &ReductionArtifact, rng: &mut ChaCha8Rng) -> ReductionArtifact {
    let mut bad = art.clone();
    let z = art.z();
    let delta = if rng.gen_bool(0.5) { 1 } else { -1 };
    match rng.gen_range(0..4) {
        0 => {
            let c = rng.gen_range(0..z);
            bad.n1_scores[c] += art.w * delta;
        }
        1 => {
            let c = rng.gen_range(0..z);
            bad.n2_scores[c] += delta;
        }
        k => {
            let layout = if k == 2 { &mut bad.m1_layout } else { &mut bad.m2_layout };
            let keys: Vec<usize> = layout.keys().copied().collect();
            let c = keys[rng.gen_range(0..keys.len())];
            *layout.get_mut(&c).unwrap() += delta;
        }
    }
    bad
}

#[test]
fn criterion_6_validator_sweep() {
    let mut validated = 0usize;
    let mut valid = 0usize;
    let mut rejected = 0usize;
    for m in 1..=8 {
        for inst in enumerate_instances(m, Variant::Standard) {
            for w in [r(2, 1), r(3, 1), r(4, 1), r(7, 2), r(11, 3), r(5, 1)] {
                match build(&inst, w) {
                    Ok(art) => {
                        validated += 1;
                        valid += validate_reduction(&art).passed as usize;
                    }
                    Err(_) => rejected += 1,
                }
            }
        }
    }

    // Grids around the smallest p.
    let mut grid_ok = true;
    let mut grid = 0usize;
    for ((p, q), m) in OPEN_SWEEP.into_iter().chain([((1, 1), 4), ((5, 3), 4), ((1, 3), 10)]) {
        let eps = r(p, q);
        let pmin = choose_p(m, eps, 100_000).unwrap();
        let probes = choose_p_probe(m);
        if pmin > 1 {
            grid_ok &= probes.iter().any(|i| reduce_w_open(i, eps + 1, pmin - 1).is_err());
        }
        let insts: Vec<TwoNmtsInstance> = if m <= 7 {
            enumerate_instances(m, Variant::Restricted)
        } else {
            probes.clone()
        };
        for dp in [0, 1, 2, 5] {
            for inst in &insts {
                grid += 1;
                grid_ok &= reduce_w_open(inst, eps + 1, pmin + dp)
                    .is_ok_and(|a| validate_reduction(&a).passed);
            }
        }
    }

    // Fault injection.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let classes = [
        build(&TwoNmtsInstance::standard(vec![3, 3]).unwrap(), r(3, 1)).unwrap(),
        build(&TwoNmtsInstance::standard(vec![3, 3]).unwrap(), r(7, 2)).unwrap(),
        reduce_w_eq2(&TwoNmtsInstance::standard(vec![2, 4, 4, 10, 10]).unwrap()).unwrap(),
        reduce_w_open(&TwoNmtsInstance::restricted(vec![2, 2, 4, 4]).unwrap(), r(5, 2), choose_p(4, r(3, 2), 1000).unwrap()).unwrap(),
    ];
    let mut caught = 0usize;
    let mut injected = 0usize;
    for art in &classes {
        assert!(validate_reduction(art).passed);
        for _ in 0..50 {
            injected += 1;
            caught += !validate_reduction(&corrupt(art, &mut rng)).passed as usize;
        }
    }

    let passed = valid == validated && grid_ok && caught == injected;
    report(
        6,
        passed,
        format_args!(
            "{valid}/{validated} artifacts valid ({rejected} constructions rejected before validation); \
             p-grid {grid} builds ok={grid_ok}; {caught}/{injected} corruptions caught"
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_devirtualization_dominance() {
    let mut artifacts: Vec<ReductionArtifact> = Vec::new();
    for m in 1..=8 {
        for inst in enumerate_instances(m, Variant::Standard) {
            artifacts.push(reduce_w_eq2(&inst).unwrap());
        }
    }
    let n_eq2 = artifacts.len();
    for ((p, q), m) in OPEN_SWEEP {
        let eps = r(p, q);
        let pmin = choose_p(m, eps, 100_000).unwrap();
        for inst in enumerate_instances(m, Variant::Restricted) {
            artifacts.push(reduce_w_open(&inst, eps + 1, pmin).unwrap());
        }
    }
    let dominated = artifacts.iter().all(|a| {
        a.virtual_maps.iter().all(|(voter, vm)| {
            vm.candidates.iter().all(|(&c, &v)| {
                let actual = match voter.as_str() {
                    "n2" => Rational::from_int(a.n2_scores[c]),
                    _ => a.n1_scores[c] / a.w,
                };
                actual - v <= Rational::from_int(RATIONAL_TOLERANCE)
            })
        })
    });

    let expected = |m: i64| [19 * m, 19 * m, 19 * m, 19 * m, 18 * m - 1, 17 * m - 1];
    let mut maxima_match = true;
    let mut first_mismatch = None;
    for a in &artifacts[..n_eq2] {
        let m = a.m() as i64;
        let got: Vec<i64> = a
            .groups
            .iter()
            .map(|g| {
                g.members()
                    .enumerate()
                    .map(|(j, _)| 2 * g.n1.at(j) + g.n2.at(j) + g.m1.at(j) + g.m2.at(j))
                    .max()
                    .unwrap()
            })
            .collect();
        if got != expected(m) {
            maxima_match = false;
            first_mismatch.get_or_insert((m, got, expected(m)));
        }
    }
    let passed = dominated && maxima_match;
    let detail = match &first_mismatch {
        Some((m, got, want)) => format!("; first mismatch m={m}: table gives {got:?}, expected {want:?}"),
        None => String::new(),
    };
    report(
        7,
        passed,
        format_args!("{} artifacts, actual <= virtual: {dominated}; w=2 group maxima match: {maxima_match}{detail}", artifacts.len()),
    );
    assert!(passed);
}

fn pipeline_bytes(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..6 {
        let m = rng.gen_range(2..=4);
        let inst = borda_forge::nmts::random_instance(m, Variant::Standard, 3, &mut rng);
        let w = [r(2, 1), r(3, 1)][rng.gen_range(0..2)];
        let (art, rep): (ReductionArtifact, PipelineReport) =
            run_pipeline(&inst, w, &PipelineOptions::default()).unwrap();
        out.push_str(&to_canonical_json(&art));
        out.push_str(&to_canonical_json(&rep));
    }
    out
}

fn round_trips<T>(items: &[T]) -> bool
where
    T: serde::Serialize + serde::de::DeserializeOwned + PartialEq,
{
    items.iter().all(|x| {
        let s = to_canonical_json(x);
        serde_json::from_str::<T>(&s).is_ok_and(|y| y == *x && to_canonical_json(&y) == s)
    })
}

#[test]
fn criterion_8_determinism_and_round_trip() {
    let deterministic = pipeline_bytes(8) == pipeline_bytes(8);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let n = 1000;
    let rationals: Vec<Rational> = (0..n)
        .map(|_| r(rng.gen_range(-1000..1000), rng.gen_range(1..200)))
        .collect();
    let profiles: Vec<Profile> = (0..n)
        .map(|_| {
            let z = rng.gen_range(2..12);
            let w = r(rng.gen_range(1..20), rng.gen_range(1..7));
            let p = Profile::new(w, rng.gen_range(0..z), random_ballot(z, &mut rng), random_ballot(z, &mut rng)).unwrap();
            if rng.gen_bool(0.5) {
                p.with_manipulators(random_ballot(z, &mut rng), random_ballot(z, &mut rng)).unwrap()
            } else {
                p
            }
        })
        .collect();
    let mut instances = Vec::new();
    let mut solutions = Vec::new();
    for k in 0..n {
        let variant = if k % 2 == 0 { Variant::Standard } else { Variant::Restricted };
        let (inst, sol) = borda_forge::nmts::random_planted(rng.gen_range(1..10), variant, &mut rng);
        instances.push(inst);
        solutions.push(sol);
    }
    let mut artifacts = Vec::new();
    while artifacts.len() < n {
        let m = rng.gen_range(1..6);
        let inst = borda_forge::nmts::random_instance(m, Variant::Standard, 4, &mut rng);
        let w = [r(2, 1), r(3, 1), r(7, 2), r(4, 1), r(10, 3)][rng.gen_range(0..5)];
        if let Ok(a) = build(&inst, w) {
            artifacts.push(a);
        }
    }
    for (k, slot) in artifacts.iter_mut().take(20).enumerate() {
        let inst = borda_forge::nmts::random_instance(4, Variant::Restricted, 4, &mut rng);
        *slot = reduce_w_open(&inst, r(5, 2), 2 + k as u64 % 3).unwrap();
    }
    let reports: Vec<_> = artifacts.iter().map(validate_reduction).collect();
    let results: Vec<_> = (0..n)
        .map(|_| {
            let z = rng.gen_range(2..=7);
            let w = r(rng.gen_range(1..12), rng.gen_range(1..4));
            let p = Profile::new(w, rng.gen_range(0..z), random_ballot(z, &mut rng), random_ballot(z, &mut rng)).unwrap();
            brute_force_manipulation(&p, 7).unwrap()
        })
        .collect();

    let trips = [
        ("rational", round_trips(&rationals)),
        ("profile", round_trips(&profiles)),
        ("instance", round_trips(&instances)),
        ("solution", round_trips(&solutions)),
        ("artifact", round_trips(&artifacts)),
        ("validation report", round_trips(&reports)),
        ("manipulation result", round_trips(&results)),
    ];
    let all = trips.iter().all(|t| t.1);
    let passed = deterministic && all;
    report(8, passed, format_args!("fixed-seed pipeline byte-identical: {deterministic}; round trips {trips:?}"));
    assert!(passed);
}
