//! Acceptance suite: nine criteria at pinned tolerances, one PASS/FAIL line each.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{pow2, r, Mu};
use porosity::estimate::Protocol;
use porosity::intset::IntegerSet;
use porosity::porosity0::{lambda0, lower_porosity0, phi, porosity_interval, upper_porosity0, window_extrema};
use porosity::porosity_inf::{
    build_m, check_matched_scales, classify_inf, inf_profile, lambda_inf, InfClass,
};
use porosity::pretangent::{
    interval_avoided, max_avoided_interval, omega_card_probe, porosity_witness, sample_sequences, DEFAULT_EPS,
};
use porosity::scaling::ScalingFunction;
use porosity::setkit::SetHandle;
use porosity::spec::{IntSpec, MuSpec, SetSpec};
use porosity::structure::{classify_ssp, f_criterion, Verdict};
use porosity::estimate::Side;
use porosity::{Exact, Log2, Magnitude};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn set<M: Magnitude>(json: &str) -> SetHandle<M> {
    SetHandle::from_spec(&SetSpec::from_json(json).unwrap()).unwrap()
}

fn mu<M: Magnitude>(s: &str) -> ScalingFunction<M> {
    ScalingFunction::from_spec(&MuSpec::parse(s).unwrap()).unwrap()
}

fn ints(s: &str) -> IntegerSet {
    IntegerSet::from_spec(&IntSpec::parse(s).unwrap()).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn geometric_law() -> Outcome {
    let mut notes = Vec::new();
    for (a, b) in [(3, 10), (1, 2), (4, 5)] {
        let started = Instant::now();
        let q = r(a, b);
        let e = set::<Exact>(&format!(r#"{{"kind":"geometric","q":"{a}/{b}"}}"#));
        let (lo, hi) = porosity_interval(&e, &Protocol::new(40)).map_err(|e| e.to_string())?;
        let want_hi = common::one() - &q;
        let want_lo = &want_hi / (r(2, 1) - &q);
        let t = started.elapsed();
        ensure(
            hi.estimate.0 == want_hi && lo.estimate.0 == want_lo,
            format!("q={a}/{b}: got [{}, {}], want [{want_lo}, {want_hi}]", lo.estimate.0, hi.estimate.0),
        )?;
        ensure(t < Duration::from_secs(5), format!("q={a}/{b} took {t:?}"))?;
        notes.push(format!("q={a}/{b} -> [{want_lo}, {want_hi}]"));
    }
    Ok(notes.join("; "))
}

fn matched_scales() -> Outcome {
    let started = Instant::now();
    // (set, mu, depth, windows, expected limit, allowed distance at this depth)
    let cases: [(&str, &str, u32, u32, BigRational, BigRational); 5] = [
        ("all", "geometric:1/2", 12, 4, r(1, 2), r(0, 1)),
        ("evens", "geometric:1/2", 12, 4, r(3, 4), r(0, 1)),
        ("all", "power:1", 12, 4, r(0, 1), r(1, 256)),
        ("all", "supergeometric", 4, 4, r(1, 1), pow2(-16)),
        ("powers2", "power:1", 12, 4, r(1, 2), r(0, 1)),
    ];
    let mut notes = Vec::new();
    for (s, m, depth, w, want, slack) in cases {
        let rep = check_matched_scales(
            Arc::new(ints(s)),
            Arc::new(mu::<Exact>(m)),
            &Protocol::new(depth).windows(w).tol(0.0),
        )
        .map_err(|e| e.to_string())?;
        ensure(rep.gap == 0.0 && rep.lhs == rep.rhs, format!("({s}, {m}): {} vs {}", rep.lhs, rep.rhs))?;
        let v = common::parse(&rep.rhs);
        let dist = if v > want { &v - &want } else { &want - &v };
        ensure(dist <= slack, format!("({s}, {m}): value {} not near {want}", common::to_f64(&v)))?;
        notes.push(format!("({s}, {m})={:.4}", common::to_f64(&v)));
    }
    let t = started.elapsed();
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!("gap 0 on {}", notes.join(", ")))
}

fn half_laws() -> Outcome {
    let started = Instant::now();
    let suite: [(&str, u32); 9] = [
        (r#"{"kind":"geometric","q":"1/2"}"#, 40),
        (r#"{"kind":"geometric","q":"3/10"}"#, 40),
        (r#"{"kind":"geometric","q":"4/5"}"#, 40),
        (r#"{"kind":"geometric_perturbed","q":"1/2"}"#, 30),
        (r#"{"kind":"union","sets":[{"kind":"geometric","q":"1/2"},{"kind":"geometric","q":"1/3"}]}"#, 30),
        (r#"{"kind":"power","p":1}"#, 12),
        (r#"{"kind":"prime_reciprocal"}"#, 12),
        (r#"{"kind":"dense","per_octave":5}"#, 30),
        (r#"{"kind":"factorial"}"#, 40),
    ];
    let mut worst = 0.0f64;
    for (spec, depth) in suite {
        let lo = lower_porosity0(&set::<Exact>(spec), &Protocol::new(depth)).map_err(|e| e.to_string())?;
        worst = worst.max(lo.value());
        ensure(lo.value() <= 0.5 + 1e-9, format!("{spec}: lower {}", lo.value()))?;
    }
    let sg = set::<Log2>(r#"{"kind":"supergeometric"}"#);
    let lo = lower_porosity0(&sg, &Protocol::new(64).windows(32)).map_err(|e| e.to_string())?.value();
    ensure((lo - 0.5).abs() <= 1e-6, format!("supergeometric lower {lo}"))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!("max lower over suite {worst:.6} <= 1/2; supergeometric {lo}"))
}

fn conv<M: Magnitude>(c: &porosity::porosity_inf::InfClassification<M>) -> bool {
    c.ratios.as_ref().is_some_and(|r| r.liminf.converged && r.limsup.converged)
}

fn classification() -> Outcome {
    let started = Instant::now();
    let tol = 1e-3;
    let check = |class: InfClass, want: InfClass, conv: bool, name: &str| {
        ensure(class == want && conv, format!("{name}: {class:?} (converged {conv})"))
    };
    let c = classify_inf(&ints("all"), &mu::<Exact>("power:1"), &Protocol::new(20).tol(tol)).map_err(|e| e.to_string())?;
    check(c.class, InfClass::Nonporous, conv(&c), "power 1")?;
    let c = classify_inf(&ints("all"), &mu::<Exact>("geometric:1/2"), &Protocol::new(12).tol(tol))
        .map_err(|e| e.to_string())?;
    check(c.class, InfClass::Porous, conv(&c), "geometric 1/2")?;
    let upper = c.upper;
    let c = classify_inf(&ints("all"), &mu::<Log2>("supergeometric"), &Protocol::new(9).tol(tol))
        .map_err(|e| e.to_string())?;
    check(c.class, InfClass::StronglyPorous, conv(&c), "supergeometric")?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!("nonporous / porous (upper {upper}) / strongly porous"))
}

fn built_set() -> Outcome {
    let started = Instant::now();
    let n = 1_000_000u64;
    let e = set::<Exact>(r#"{"kind":"geometric","q":"1/2"}"#);
    let m = mu::<Exact>("power:1");
    let built = build_m(&e, &m, n).map_err(|e| e.to_string())?;
    let proto = Protocol::new(63 - n.leading_zeros() - 2);
    let prof = inf_profile(&built.set, &m, &proto).map_err(|e| e.to_string())?;
    let (lo, hi) = (prof.bracket(Side::Lower).value(), prof.bracket(Side::Upper).value());
    let (want_lo, want_hi) = (1.0 / 3.0, 0.5);
    let gap = (lo - want_lo).abs().max((hi - want_hi).abs());
    ensure(gap <= 0.05, format!("[{lo}, {hi}] vs [1/3, 1/2]"))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("N=10^6: [{lo:.5}, {hi:.5}], distance {gap:.2e}"))
}

fn ssp_coherence() -> Outcome {
    let started = Instant::now();
    let sg = set::<Log2>(r#"{"kind":"supergeometric"}"#);
    let v = classify_ssp(&sg, &Protocol::new(512).windows(256)).map_err(|e| e.to_string())?.verdict;
    ensure(v == Verdict::Consistent, format!("supergeometric ssp {v:?}"))?;
    let f = f_criterion(&sg, &Protocol::new(64)).map_err(|e| e.to_string())?;
    let last = f.profile.last().map(|p| p.1.to_f64()).unwrap_or(f64::NAN);
    ensure(last <= 0.05, format!("supergeometric f final window {last}"))?;
    let seqs = sample_sequences(&sg, 100, 8, 400, 2024).map_err(|e| e.to_string())?;
    let mut max_card = 0;
    for s in &seqs {
        max_card = max_card.max(omega_card_probe(&sg, s, 8, DEFAULT_EPS).map_err(|e| e.to_string())?.upper);
    }
    ensure(max_card <= 2, format!("supergeometric card probe {max_card}"))?;

    let geo = set::<Exact>(r#"{"kind":"geometric","q":"1/2"}"#);
    let v = classify_ssp(&geo, &Protocol::new(40)).map_err(|e| e.to_string())?.verdict;
    ensure(v == Verdict::Inconsistent, format!("geometric ssp {v:?}"))?;
    let f = f_criterion(&geo, &Protocol::new(40)).map_err(|e| e.to_string())?;
    // All-pairs sup on the truncated point list as an independent value.
    let pts: Vec<BigRational> = (0..50).map(|k| pow2(-k)).collect();
    let brute = common::to_f64(&common::f_sup_all_pairs(&pts, &pow2(-32)));
    for (j, s) in &f.profile {
        ensure((s.to_f64() - 0.25).abs() <= 1e-9, format!("geometric f window {j}: {}", s.to_f64()))?;
    }
    ensure((brute - 0.25).abs() <= 1e-9, format!("all-pairs sup {brute}"))?;
    let seqs = sample_sequences(&geo, 10, 8, 60, 2024).map_err(|e| e.to_string())?;
    let mut best = 0;
    for s in &seqs {
        best = best.max(omega_card_probe(&geo, s, 8, DEFAULT_EPS).map_err(|e| e.to_string())?.lower);
    }
    ensure(best >= 3, format!("geometric card probe {best}"))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("supergeometric: consistent, f {last:.1e}, card <= {max_card}; geometric: inconsistent, f 1/4, card {best}"))
}

fn random_points(rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    let k = rng.gen_range(1..=12);
    (0..k)
        .map(|_| {
            let d = rng.gen_range(2..=256i64);
            r(rng.gen_range(1..d), d)
        })
        .collect()
}

fn explicit(pts: &[BigRational]) -> SetHandle<Exact> {
    SetHandle::explicit(pts.iter().cloned().map(Exact).collect())
}

fn oracles() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    for i in 0..1000 {
        let pts = random_points(&mut rng);
        let d = rng.gen_range(2..=256i64);
        let h = r(rng.gen_range(1..d), d);
        let got = lambda0(&explicit(&pts), &Exact(h.clone())).map_err(|e| e.to_string())?.lambda.0;
        if got != common::gap(&pts, &h) {
            bad.push(format!("lambda0 case {i}"));
        }
    }
    let mus = [Mu::Geometric(1, 2), Mu::Geometric(2, 3), Mu::Power(1), Mu::Power(2)];
    for i in 0..500 {
        let mut values: Vec<u64> = (0..rng.gen_range(1..=10)).map(|_| rng.gen_range(1..=60)).collect();
        values.sort_unstable();
        values.dedup();
        let m = mus[rng.gen_range(0..mus.len())];
        let n = rng.gen_range(1..=64);
        let e = IntegerSet::explicit(values.iter().copied()).map_err(|e| e.to_string())?;
        let got = lambda_inf(&e, &mu::<Exact>(&m.spec()), n).map_err(|e| e.to_string())?.lambda_mu.0;
        if got != common::lambda_mu(&values, m, n) {
            bad.push(format!("lambda_inf case {i}"));
        }
    }
    let grid = 100_000;
    for i in 0..20 {
        let pts = random_points(&mut rng);
        let j = rng.gen_range(0..6u32);
        let w = window_extrema(&explicit(&pts), j).map_err(|e| e.to_string())?;
        let mut fp: Vec<f64> = pts.iter().map(common::to_f64).collect();
        fp.sort_by(f64::total_cmp);
        let lo = 0.5f64.powi(j as i32 + 1);
        let (gsup, ginf) = common::grid_extrema(&fp, lo, 2.0 * lo, grid);
        let slack = 2.0 / grid as f64 + 1e-12;
        let (sup, inf) = (w.sup.to_f64(), w.inf.to_f64());
        if gsup > sup + 1e-12 || sup - gsup > slack || ginf < inf - 1e-12 || ginf - inf > slack {
            bad.push(format!("window case {i}"));
        }
    }
    ensure(bad.is_empty(), format!("violations: {}", bad.join(", ")))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(120), format!("took {t:?}"))?;
    Ok("0 violations: 1000 gaps, 500 integer triples, 20 windows x 10^5 grid".into())
}

fn invariants() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let specs = [
        r#"{"kind":"geometric","q":"1/2"}"#,
        r#"{"kind":"geometric","q":"3/10"}"#,
        r#"{"kind":"power","p":1}"#,
        r#"{"kind":"dense","per_octave":3}"#,
    ];
    let mut bad = 0usize;
    for i in 0..1000 {
        let e = if i % 2 == 0 { explicit(&random_points(&mut rng)) } else { set(specs[rng.gen_range(0..4)]) };
        let d = rng.gen_range(2..=1024i64);
        let (a, b) = (r(rng.gen_range(1..d), d), r(rng.gen_range(1..d), d));
        let (h1, h2) = if a <= b { (a, b) } else { (b, a) };
        let l1 = lambda0(&e, &Exact(h1.clone())).map_err(|e| e.to_string())?.lambda.0;
        let l2 = lambda0(&e, &Exact(h2.clone())).map_err(|e| e.to_string())?.lambda.0;
        let p = phi(&e, &Exact(h1.clone())).map_err(|e| e.to_string())?.0;
        let ok = l1 <= l2 && &l2 - &l1 <= &h2 - &h1 && p >= r(0, 1) && p <= r(1, 1);
        bad += usize::from(!ok);
    }
    ensure(bad == 0, format!("{bad} monotone/Lipschitz/range violations"))?;

    let n = 10_000u64;
    let m = mu::<Exact>("power:1");
    let members = |json: &str| -> Result<Vec<u64>, String> {
        let e = set::<Exact>(json);
        build_m(&e, &m, n).and_then(|b| b.set.elements_in(1, n)).map_err(|e| e.to_string())
    };
    let g2 = r#"{"kind":"geometric","q":"1/2"}"#;
    let g3 = r#"{"kind":"geometric","q":"1/3"}"#;
    let m2 = members(g2)?;
    let m3 = members(g3)?;
    let m23 = members(&format!(r#"{{"kind":"union","sets":[{g2},{g3}]}}"#))?;
    let closed = members(&format!(r#"{{"kind":"union","sets":[{g2},{{"kind":"trivial"}}]}}"#))?;
    let pts2: Vec<BigRational> = (0..20).map(|k| pow2(-k)).collect();
    ensure(m2 == common::brute_m(&pts2, Mu::Power(1), n), "M differs from direct search".into())?;
    ensure(closed == m2, "closure changes M".into())?;
    ensure(m2.iter().chain(&m3).all(|x| m23.binary_search(x).is_ok()), "M not monotone under inclusion".into())?;
    let mut joined: Vec<u64> = m2.iter().chain(&m3).copied().collect();
    joined.sort_unstable();
    joined.dedup();
    ensure(joined == m23, "M of a union differs from the union of Ms".into())?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!("0 violations on 1000 pairs; M identities exact at N=10^4 (|M|={})", m23.len()))
}

fn witness_roundtrip() -> Outcome {
    let started = Instant::now();
    let e = set::<Exact>(r#"{"kind":"geometric","q":"1/2"}"#);
    let proto = Protocol::new(40);
    let w = porosity_witness(&e, &proto).map_err(|e| e.to_string())?;
    let (a, b) = &w.interval;
    let len = b.to_f64() - a.to_f64();
    ensure((len - 0.5).abs() <= 1e-6, format!("witness length {len}"))?;
    let avoided = interval_avoided(&e, &w.sequence, a, b, &Exact::zero()).map_err(|e| e.to_string())?.avoided;
    ensure(avoided, "witness interval is hit".into())?;
    let upper = upper_porosity0(&e, &proto).map_err(|e| e.to_string())?.value();
    let best = max_avoided_interval(&e, &w.sequence, 8, DEFAULT_EPS, None, &Exact::zero())
        .map_err(|e| e.to_string())?
        .ok_or("no avoided interval")?;
    let best_len = best.1.to_f64() - best.0.to_f64();
    ensure((best_len - upper).abs() <= 1e-6, format!("max avoided {best_len} vs upper porosity {upper}"))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!("interval ({}, {}), max avoided length {best_len} = upper porosity", a.0, b.0))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("geometric law", geometric_law),
        ("matched scales", matched_scales),
        ("half laws", half_laws),
        ("classification at infinity", classification),
        ("built set at N=10^6", built_set),
        ("SSP coherence", ssp_coherence),
        ("oracle equivalences", oracles),
        ("analytic invariants", invariants),
        ("witness round trip", witness_roundtrip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let res = run();
        let secs = started.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {}. {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
