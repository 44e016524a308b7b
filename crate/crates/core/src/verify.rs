//! Plan-driven verification: each check id runs one fixed analysis and
//! compares it with a closed form or an independent recomputation.

use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimate::Protocol;
use crate::intset::IntegerSet;
use crate::porosity0::{lambda0, porosity_interval, upper_porosity0, window_extrema};
use crate::porosity_inf::{build_m, check_built_set, check_matched_scales, classify_inf, lambda_inf, InfClass};
use crate::pretangent::{
    interval_avoided, max_avoided_interval, omega_card_probe, porosity_witness, sample_sequences, DEFAULT_EPS,
};
use crate::report::render_compact;
use crate::scalar::{parse_rational, Exact, Log2, Magnitude};
use crate::scaling::ScalingFunction;
use crate::setkit::SetHandle;
use crate::spec::{IntSpec, Lit, MuSpec, SetSpec};
use crate::structure::{classify_ssp, f_criterion, half_law_checks, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    GeometricLaw,
    MatchedScales,
    HalfLaws,
    InfClassification,
    BuiltSet,
    SspCoherence,
    Oracles,
    Invariants,
    WitnessRoundtrip,
}

impl CheckId {
    pub const ALL: [CheckId; 9] = [
        CheckId::GeometricLaw,
        CheckId::MatchedScales,
        CheckId::HalfLaws,
        CheckId::InfClassification,
        CheckId::BuiltSet,
        CheckId::SspCoherence,
        CheckId::Oracles,
        CheckId::Invariants,
        CheckId::WitnessRoundtrip,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanCheck {
    pub id: CheckId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Check-specific overrides; see the per-check defaults.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub inputs: Value,
}

impl PlanCheck {
    pub fn new(id: CheckId) -> Self {
        PlanCheck { id, depth: None, tol: None, inputs: Value::Null }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPlan {
    pub checks: Vec<PlanCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl VerifyPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Every check at its default settings.
    pub fn bundled() -> Self {
        VerifyPlan { checks: CheckId::ALL.iter().map(|&id| PlanCheck::new(id)).collect(), out: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: CheckId,
    pub status: Status,
    pub values: Value,
    pub gap: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub checks: Vec<CheckOutcome>,
    pub exit_status: i32,
}

impl RunReport {
    fn finish(mut checks: Vec<CheckOutcome>, budget: bool) -> Self {
        checks.sort_by_key(|c| c.id);
        let exit_status = if budget {
            3
        } else if checks.iter().any(|c| c.status == Status::Fail) {
            1
        } else {
            0
        };
        RunReport { checks, exit_status }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Record wall-clock runtimes; off keeps reports byte-identical across runs.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0x5eed, timings: false }
    }
}

struct Finding {
    status: Status,
    values: Value,
    gap: f64,
    tol: f64,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn run_plan(plan: &VerifyPlan, opts: &RunOptions) -> RunReport {
    let mut out = Vec::new();
    let mut budget = false;
    for c in &plan.checks {
        let started = Instant::now();
        let res = run_check(c, opts);
        let runtime_ms = opts.timings.then(|| started.elapsed().as_secs_f64() * 1e3);
        out.push(match res {
            Ok(f) => CheckOutcome {
                id: c.id,
                status: f.status,
                values: f.values,
                gap: f.gap,
                tol: f.tol,
                runtime_ms,
                error: None,
            },
            Err(err) => {
                budget |= err.is_budget();
                CheckOutcome {
                    id: c.id,
                    status: Status::Fail,
                    values: Value::Null,
                    gap: f64::INFINITY,
                    tol: c.tol.unwrap_or(0.0),
                    runtime_ms,
                    error: Some(err.to_string()),
                }
            }
        });
    }
    RunReport::finish(out, budget)
}

pub fn run_check(c: &PlanCheck, opts: &RunOptions) -> Result<CheckOutcome> {
    let f = match c.id {
        CheckId::GeometricLaw => geometric_law(c),
        CheckId::MatchedScales => matched_scales(c),
        CheckId::HalfLaws => half_laws(c),
        CheckId::InfClassification => inf_classification(c),
        CheckId::BuiltSet => built_set(c),
        CheckId::SspCoherence => ssp_coherence(c, opts.seed),
        CheckId::Oracles => oracles(c, opts.seed),
        CheckId::Invariants => invariants(c, opts.seed),
        CheckId::WitnessRoundtrip => witness_roundtrip(c),
    }?;
    Ok(CheckOutcome { id: c.id, status: f.status, values: f.values, gap: f.gap, tol: f.tol, runtime_ms: None, error: None })
}

fn inputs<T: for<'de> Deserialize<'de> + Default>(c: &PlanCheck) -> Result<T> {
    if c.inputs.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(c.inputs.clone()).map_err(|e| Error::Malformed(format!("{}: {e}", c.id.name())))
}

fn rat(s: &str) -> Result<Exact> {
    Ok(Exact(parse_rational(s)?))
}

fn gap_of(a: &Exact, b: &Exact) -> f64 {
    a.abs_diff(b).to_f64()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometricInputs {
    q: Vec<String>,
}

impl Default for GeometricInputs {
    fn default() -> Self {
        GeometricInputs { q: vec!["3/10".into(), "1/2".into(), "4/5".into()] }
    }
}

fn geometric_law(c: &PlanCheck) -> Result<Finding> {
    let inp: GeometricInputs = inputs(c)?;
    let proto = Protocol::new(c.depth.unwrap_or(40));
    let tol = c.tol.unwrap_or(0.0);
    let one = Exact::one();
    let mut rows = Vec::new();
    let mut gap = 0.0f64;
    let mut converged = true;
    for q in &inp.q {
        let e = SetHandle::<Exact>::from_spec(&SetSpec::Geometric { q: Lit::Str(q.clone()) })?;
        let (lo, hi) = porosity_interval(&e, &proto)?;
        let qv = rat(q)?;
        let want_hi = one.abs_diff(&qv);
        let want_lo = want_hi.div(&Exact::ratio(2, 1).abs_diff(&qv));
        gap = gap.max(gap_of(&hi.estimate, &want_hi)).max(gap_of(&lo.estimate, &want_lo));
        converged &= lo.converged && hi.converged;
        rows.push(json!({
            "q": q,
            "upper": hi.estimate.render(),
            "lower": lo.estimate.render(),
            "expected_upper": want_hi.render(),
            "expected_lower": want_lo.render(),
        }));
    }
    // Window sups need not agree when the period of q exceeds one octave; the
    // maximum over the trailing windows is still exact.
    Ok(Finding { status: status(gap <= tol), values: json!({"rows": rows, "converged": converged}), gap, tol })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchedPair {
    set: String,
    mu: String,
    #[serde(default)]
    expected: Option<String>,
    #[serde(default)]
    depth: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchedInputs {
    pairs: Vec<MatchedPair>,
    /// Allowed distance of the finite-depth estimate from the expected limit.
    value_tol: f64,
}

impl Default for MatchedInputs {
    fn default() -> Self {
        let p = |set: &str, mu: &str, expected: &str, depth: Option<u32>| MatchedPair {
            set: set.into(),
            mu: mu.into(),
            expected: Some(expected.into()),
            depth,
        };
        MatchedInputs {
            pairs: vec![
                p("all", "geometric:1/2", "1/2", None),
                p("evens", "geometric:1/2", "3/4", None),
                p("all", "power:1", "0", None),
                p("all", "supergeometric", "1", Some(4)),
                p("powers2", "power:1", "1/2", None),
            ],
            value_tol: 1e-2,
        }
    }
}

fn matched_scales(c: &PlanCheck) -> Result<Finding> {
    let inp: MatchedInputs = inputs(c)?;
    let tol = c.tol.unwrap_or(0.0);
    let mut rows = Vec::new();
    let mut gap = 0.0f64;
    let mut ok = true;
    for pair in &inp.pairs {
        let depth = pair.depth.or(c.depth).unwrap_or(12);
        let proto = Protocol::new(depth).windows(depth.min(4)).tol(tol);
        let e = Arc::new(IntegerSet::from_spec(&IntSpec::parse(&pair.set)?)?);
        let mu = Arc::new(ScalingFunction::<Exact>::from_spec(&MuSpec::parse(&pair.mu)?)?);
        let r = check_matched_scales(e, mu, &proto)?;
        gap = gap.max(r.gap);
        let value = rat(&r.rhs)?;
        let value_ok = match &pair.expected {
            Some(x) => gap_of(&value, &rat(x)?) <= inp.value_tol,
            None => true,
        };
        ok &= r.pass && value_ok;
        rows.push(json!({
            "set": pair.set,
            "mu": pair.mu,
            "depth": depth,
            "at_zero": render_compact(&rat(&r.lhs)?),
            "at_infinity": render_compact(&value),
            "gap": r.gap,
            "expected": pair.expected,
            "value_ok": value_ok,
        }));
    }
    Ok(Finding { status: status(ok), values: json!(rows), gap, tol })
}

const HALF_BOUND_TOL: f64 = 1e-9;

fn half_case<M: Magnitude>(label: &str, spec: &SetSpec, proto: &Protocol, ssp_proto: &Protocol) -> Result<(bool, Value)> {
    let e = SetHandle::<M>::from_spec(spec)?;
    let ssp = classify_ssp(&e, ssp_proto)?.verdict;
    let r = half_law_checks(&e, proto, ssp)?;
    let bound = !r.accumulates || r.lower <= 0.5 + HALF_BOUND_TOL;
    let exact_half = match r.equals_half {
        Some(_) => (r.lower - 0.5).abs() <= proto.tol,
        None => true,
    };
    let minima = r.min_location_checked == r.min_location_matched;
    Ok((
        bound && exact_half && minima,
        json!({
            "set": label,
            "lower": r.lower,
            "accumulates": r.accumulates,
            "ssp": ssp,
            "equals_half": r.equals_half.map(|_| exact_half),
            "min_location": [r.min_location_matched, r.min_location_checked],
        }),
    ))
}

fn half_laws(c: &PlanCheck) -> Result<Finding> {
    let tol = c.tol.unwrap_or(1e-6);
    let exact_cases: [(&str, &str, u32); 6] = [
        ("geometric 1/2", r#"{"kind":"geometric","q":"1/2"}"#, 40),
        ("geometric 3/10", r#"{"kind":"geometric","q":"3/10"}"#, 40),
        ("geometric 4/5", r#"{"kind":"geometric","q":"4/5"}"#, 40),
        ("perturbed geometric 1/2", r#"{"kind":"geometric_perturbed","q":"1/2"}"#, 30),
        (
            "geometric 1/2 and 1/3",
            r#"{"kind":"union","sets":[{"kind":"geometric","q":"1/2"},{"kind":"geometric","q":"1/3"}]}"#,
            30,
        ),
        ("reciprocals", r#"{"kind":"power","p":1}"#, 12),
    ];
    let mut rows = Vec::new();
    let mut ok = true;
    for (label, json_spec, depth) in exact_cases {
        let spec = SetSpec::from_json(json_spec)?;
        let proto = Protocol::new(c.depth.unwrap_or(depth)).tol(tol);
        let (pass, row) = half_case::<Exact>(label, &spec, &proto, &proto)?;
        ok &= pass;
        rows.push(row);
    }
    let (pass, row) = half_case::<Log2>(
        "supergeometric",
        &SetSpec::Supergeometric,
        &Protocol::new(64).windows(32).tol(tol),
        &Protocol::new(512).windows(256).tol(tol),
    )?;
    ok &= pass;
    rows.push(row);
    Ok(Finding { status: status(ok), values: json!(rows), gap: 0.0, tol })
}

fn inf_case<M: Magnitude>(set: &str, mu: &str, proto: &Protocol, want: InfClass) -> Result<(bool, Value)> {
    let e = IntegerSet::from_spec(&IntSpec::parse(set)?)?;
    let m = ScalingFunction::<M>::from_spec(&MuSpec::parse(mu)?)?;
    let r = classify_inf(&e, &m, proto)?;
    let converged = r.ratios.as_ref().is_none_or(|s| s.liminf.converged && s.limsup.converged);
    Ok((
        r.class == want && converged,
        json!({"set": set, "mu": mu, "class": format!("{:?}", r.class), "upper": r.upper, "converged": converged}),
    ))
}

fn inf_classification(c: &PlanCheck) -> Result<Finding> {
    let tol = c.tol.unwrap_or(1e-3);
    // Exact geometric values grow by one bit per step, so that case stays shallow.
    let p = Protocol::new(c.depth.unwrap_or(20)).tol(tol);
    let cases = [
        inf_case::<Exact>("all", "power:1", &p, InfClass::Nonporous)?,
        inf_case::<Exact>("all", "geometric:1/2", &Protocol::new(12).tol(tol), InfClass::Porous)?,
        inf_case::<Log2>("all", "supergeometric", &Protocol::new(9).tol(tol), InfClass::StronglyPorous)?,
    ];
    let ok = cases.iter().all(|c| c.0);
    Ok(Finding { status: status(ok), values: json!(cases.iter().map(|c| &c.1).collect::<Vec<_>>()), gap: 0.0, tol })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BuiltInputs {
    set: SetSpec,
    mu: String,
    n: u64,
}

impl Default for BuiltInputs {
    fn default() -> Self {
        BuiltInputs { set: SetSpec::Geometric { q: Lit::Str("1/2".into()) }, mu: "power:1".into(), n: 1_000_000 }
    }
}

fn built_set(c: &PlanCheck) -> Result<Finding> {
    let inp: BuiltInputs = inputs(c)?;
    let tol = c.tol.unwrap_or(0.05);
    let e = SetHandle::<Exact>::from_spec(&inp.set)?;
    let mu = Arc::new(ScalingFunction::<Exact>::from_spec(&MuSpec::parse(&inp.mu)?)?);
    let r = check_built_set(&e, mu, inp.n, &Protocol::new(c.depth.unwrap_or(40)), tol)?;
    Ok(Finding {
        status: status(r.pass),
        values: json!({"at_zero": r.lhs, "at_infinity": r.rhs, "n": inp.n, "note": r.note}),
        gap: r.gap,
        tol,
    })
}

struct Coherence {
    ssp: Verdict,
    f_last: f64,
    f_sup: f64,
    f_verdict: Verdict,
    max_card: usize,
    cross: Option<Verdict>,
}

fn coherence<M: Magnitude>(spec: &SetSpec, ssp_proto: &Protocol, f_proto: &Protocol, seed: u64) -> Result<Coherence> {
    let e = SetHandle::<M>::from_spec(spec)?;
    let ssp = classify_ssp(&e, ssp_proto)?;
    let f = f_criterion(&e, f_proto)?;
    let vals: Vec<f64> = f.profile.iter().map(|p| p.1.to_f64()).collect();
    let max_index = if M::MODE == Exact::MODE { 60 } else { 400 };
    let mut max_card = 0;
    for s in sample_sequences(&e, 100, 8, max_index, seed)? {
        max_card = max_card.max(omega_card_probe(&e, &s, 8, DEFAULT_EPS)?.upper);
    }
    Ok(Coherence {
        ssp: ssp.verdict,
        f_last: vals.last().copied().unwrap_or(f64::NAN),
        f_sup: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        f_verdict: f.verdict,
        max_card,
        cross: ssp.cross_check.map(|c| c.1),
    })
}

fn coherence_json(label: &str, c: &Coherence) -> Value {
    json!({
        "set": label,
        "ssp": c.ssp,
        "f_verdict": c.f_verdict,
        "f_last": c.f_last,
        "f_sup": c.f_sup,
        "max_card_probe": c.max_card,
        "inf_cross_check": c.cross,
    })
}

fn ssp_coherence(c: &PlanCheck, seed: u64) -> Result<Finding> {
    let tol = c.tol.unwrap_or(1e-6);
    let image = |mu: MuSpec| SetSpec::Image { mu, set: IntSpec::All };
    let sg = coherence::<Log2>(
        &image(MuSpec::Supergeometric),
        &Protocol::new(512).windows(256).tol(tol),
        &Protocol::new(64).tol(tol),
        seed,
    )?;
    let p = Protocol::new(c.depth.unwrap_or(40)).tol(tol);
    let geo = coherence::<Exact>(&image(MuSpec::Geometric { q: Lit::Str("1/2".into()) }), &p, &p, seed)?;
    let sg_ok = sg.ssp == Verdict::Consistent
        && sg.f_last <= 0.05
        && sg.max_card <= 2
        && sg.cross == Some(Verdict::Consistent);
    let geo_gap = (geo.f_sup - 0.25).abs();
    let geo_ok = geo.ssp == Verdict::Inconsistent
        && geo_gap <= 1e-9
        && geo.max_card >= 3
        && geo.cross == Some(Verdict::Inconsistent);
    Ok(Finding {
        status: status(sg_ok && geo_ok),
        values: json!([coherence_json("supergeometric", &sg), coherence_json("geometric 1/2", &geo)]),
        gap: geo_gap,
        tol,
    })
}

fn random_rational(rng: &mut ChaCha8Rng, max_den: i64) -> BigRational {
    let d = rng.gen_range(2..=max_den);
    BigRational::new(rng.gen_range(1..d).into(), d.into())
}

fn random_explicit(rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    let k = rng.gen_range(1..=12);
    (0..k).map(|_| random_rational(rng, 64)).collect()
}

/// Largest gap of `pts ∪ {0, h}` inside `[0, h]`.
fn brute_gap(pts: &[BigRational], h: &BigRational) -> BigRational {
    let mut v: Vec<BigRational> = pts.iter().filter(|p| *p < h).cloned().collect();
    v.push(BigRational::from_integer(0.into()));
    v.push(h.clone());
    v.sort();
    v.windows(2).map(|w| &w[1] - &w[0]).max().expect("two points")
}

fn brute_gap_f64(pts: &[f64], h: f64) -> f64 {
    let mut prev = 0.0f64;
    let mut best = 0.0f64;
    for &p in pts.iter().filter(|&&p| p < h) {
        best = best.max(p - prev);
        prev = p;
    }
    best.max(h - prev)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OracleInputs {
    gap_cases: usize,
    inf_cases: usize,
    windows: usize,
    grid: usize,
}

impl Default for OracleInputs {
    fn default() -> Self {
        OracleInputs { gap_cases: 1000, inf_cases: 500, windows: 20, grid: 100_000 }
    }
}

fn oracles(c: &PlanCheck, seed: u64) -> Result<Finding> {
    let inp: OracleInputs = inputs(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gap_violations = 0usize;
    for _ in 0..inp.gap_cases {
        let pts = random_explicit(&mut rng);
        let h = random_rational(&mut rng, 64);
        let e = SetHandle::explicit(pts.iter().cloned().map(Exact).collect());
        if lambda0(&e, &Exact(h.clone()))?.lambda.0 != brute_gap(&pts, &h) {
            gap_violations += 1;
        }
    }

    let mut inf_violations = 0usize;
    let mus = [MuSpec::parse("geometric:1/2")?, MuSpec::parse("power:1")?, MuSpec::parse("power:2")?];
    for _ in 0..inp.inf_cases {
        let mut values: Vec<u64> = (0..rng.gen_range(1..=10)).map(|_| rng.gen_range(1..=60)).collect();
        values.sort_unstable();
        values.dedup();
        let e = IntegerSet::explicit(values.iter().copied())?;
        let mu = ScalingFunction::<Exact>::from_spec(&mus[rng.gen_range(0..mus.len())])?;
        let n = rng.gen_range(1..=64);
        let h = mu.eval(n)?.0;
        let mut pts = Vec::new();
        for &v in values.iter().filter(|&&v| v > n) {
            pts.push(mu.eval(v)?.0);
        }
        if lambda_inf(&e, &mu, n)?.lambda_mu.0 != brute_gap(&pts, &h) {
            inf_violations += 1;
        }
    }

    let mut grid_violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..inp.windows {
        let pts = random_explicit(&mut rng);
        let j = rng.gen_range(0..6u32);
        let e = SetHandle::explicit(pts.iter().cloned().map(Exact).collect());
        let w = window_extrema(&e, j)?;
        let mut fp: Vec<f64> = pts.iter().map(crate::scalar::rational_to_f64).collect();
        fp.sort_by(f64::total_cmp);
        let lo = 0.5f64.powi(j as i32 + 1);
        let step = lo / inp.grid as f64;
        // Φ = λ/h with λ 1-Lipschitz, so Φ moves by at most 2·step/lo per step.
        let slack = 2.0 * step / lo + 1e-12;
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 1..=inp.grid {
            let h = lo + step * k as f64;
            let v = brute_gap_f64(&fp, h) / h;
            gmax = gmax.max(v);
            gmin = gmin.min(v);
        }
        let (sup, inf) = (w.sup.to_f64(), w.inf.to_f64());
        let bad = gmax > sup + 1e-12 || sup - gmax > slack || gmin < inf - 1e-12 || gmin - inf > slack;
        worst = worst.max((sup - gmax).max(gmin - inf));
        grid_violations += usize::from(bad);
    }
    let total = gap_violations + inf_violations + grid_violations;
    Ok(Finding {
        status: status(total == 0),
        values: json!({
            "gap_cases": inp.gap_cases,
            "gap_violations": gap_violations,
            "inf_cases": inp.inf_cases,
            "inf_violations": inf_violations,
            "windows": inp.windows,
            "grid": inp.grid,
            "grid_violations": grid_violations,
        }),
        gap: worst,
        tol: 0.0,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InvariantInputs {
    pairs: usize,
    n: u64,
}

impl Default for InvariantInputs {
    fn default() -> Self {
        InvariantInputs { pairs: 1000, n: 10_000 }
    }
}

fn invariants(c: &PlanCheck, seed: u64) -> Result<Finding> {
    let inp: InvariantInputs = inputs(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a);
    let geo = |q: &str| SetSpec::Geometric { q: Lit::Str(q.into()) };
    let fixed = [geo("1/2"), geo("3/10"), SetSpec::Power { p: Lit::Int(1) }];
    let mut lambda_violations = 0usize;
    for i in 0..inp.pairs {
        let e = if i % 2 == 0 {
            SetHandle::explicit(random_explicit(&mut rng).into_iter().map(Exact).collect())
        } else {
            SetHandle::<Exact>::from_spec(&fixed[rng.gen_range(0..fixed.len())])?
        };
        let mut h1 = random_rational(&mut rng, 256);
        let mut h2 = random_rational(&mut rng, 256);
        if h1 > h2 {
            std::mem::swap(&mut h1, &mut h2);
        }
        let (h1, h2) = (Exact(h1), Exact(h2));
        let l1 = lambda0(&e, &h1)?.lambda;
        let l2 = lambda0(&e, &h2)?.lambda;
        let phi = l1.div(&h1);
        let ok = l1 <= l2 && l2 <= l1.add(&h2.abs_diff(&h1)) && phi <= Exact::one();
        lambda_violations += usize::from(!ok);
    }

    let mu = ScalingFunction::<Exact>::from_spec(&MuSpec::parse("power:1")?)?;
    let handle = |s: SetSpec| SetHandle::<Exact>::from_spec(&s);
    let members = |e: &SetHandle<Exact>| -> Result<Vec<u64>> { build_m(e, &mu, inp.n)?.set.elements_in(1, inp.n) };
    let e1 = geo("1/2");
    let e2 = geo("1/3");
    let m1 = members(&handle(e1.clone())?)?;
    let m2 = members(&handle(e2.clone())?)?;
    let closure = members(&handle(SetSpec::Union { sets: vec![e1.clone(), SetSpec::Trivial] })?)?;
    let m12 = members(&handle(SetSpec::Union { sets: vec![e1, e2] })?)?;
    let mut joined: Vec<u64> = m1.iter().chain(&m2).copied().collect();
    joined.sort_unstable();
    joined.dedup();
    let closure_ok = closure == m1;
    let monotone_ok = m1.iter().all(|m| m12.binary_search(m).is_ok());
    let union_ok = joined == m12;
    let ok = lambda_violations == 0 && closure_ok && monotone_ok && union_ok;
    Ok(Finding {
        status: status(ok),
        values: json!({
            "pairs": inp.pairs,
            "lambda_violations": lambda_violations,
            "n": inp.n,
            "closure": closure_ok,
            "monotone": monotone_ok,
            "union": union_ok,
        }),
        gap: 0.0,
        tol: 0.0,
    })
}

fn witness_roundtrip(c: &PlanCheck) -> Result<Finding> {
    let tol = c.tol.unwrap_or(1e-6);
    let proto = Protocol::new(c.depth.unwrap_or(40)).tol(tol);
    let e = SetHandle::<Exact>::from_spec(&SetSpec::Geometric { q: Lit::Str("1/2".into()) })?;
    let w = porosity_witness(&e, &proto)?;
    let (a, b) = &w.interval;
    let len = b.abs_diff(a).to_f64();
    let avoided = interval_avoided(&e, &w.sequence, a, b, &Exact::zero())?.avoided;
    let upper = upper_porosity0(&e, &proto)?.value();
    let best = max_avoided_interval(&e, &w.sequence, AVOID_TAIL, DEFAULT_EPS, None, &Exact::zero())?;
    let best_len = best.as_ref().map_or(0.0, |(a, b)| b.abs_diff(a).to_f64());
    let gap = (len - 0.5).abs().max((best_len - upper).abs());
    Ok(Finding {
        status: status(avoided && gap <= tol),
        values: json!({
            "interval": [a.render(), b.render()],
            "avoided": avoided,
            "upper_porosity": upper,
            "max_avoided_length": best_len,
        }),
        gap,
        tol,
    })
}

const AVOID_TAIL: usize = 8;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_id_is_rejected() {
        let err = VerifyPlan::from_json(r#"{"checks":[{"id":"no-such-check"}]}"#).unwrap_err();
        assert!(matches!(err, Error::Malformed(_)));
    }

    #[test]
    fn bundled_plan_round_trips() {
        let p = VerifyPlan::bundled();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(VerifyPlan::from_json(&text).unwrap(), p);
        assert_eq!(CheckId::SspCoherence.name(), "ssp-coherence");
    }

    #[test]
    fn evens_pair_reports_three_quarters() {
        let plan = VerifyPlan::from_json(
            r#"{"checks":[{"id":"matched-scales","inputs":{"pairs":[{"set":"evens","mu":"geometric:1/2","expected":"3/4"}],"value_tol":0}}]}"#,
        )
        .unwrap();
        let r = run_plan(&plan, &RunOptions::default());
        assert_eq!(r.exit_status, 0, "{}", r.to_json());
        assert_eq!(r.checks[0].values[0]["at_infinity"], "3/4");
    }

    #[test]
    fn small_oracle_run() {
        let mut c = PlanCheck::new(CheckId::Oracles);
        c.inputs = json!({"gap_cases": 50, "inf_cases": 50, "windows": 2, "grid": 1000});
        assert_eq!(run_check(&c, &RunOptions::default()).unwrap().status, Status::Pass);
    }
}
