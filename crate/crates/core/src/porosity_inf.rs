//! Porosity at infinity of `E ⊆ ℕ` measured through a scaling function `μ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimate::{EstimateBracket, Protocol, Side, WindowStat, AGREEMENT};
use crate::intset::IntegerSet;
use crate::porosity0::{self, extrema_on};
use crate::report::{render_interval, CheckReport};
use crate::scalar::Magnitude;
use crate::scaling::ScalingFunction;
use crate::setkit::SetHandle;
use crate::spec::IntSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct InfGapReport<M> {
    pub n: u64,
    pub lambda_mu: M,
    pub n1: u64,
    /// `None` stands for an unbounded gap, with `μ(∞) = 0`.
    pub n2: Option<u64>,
}

fn mu_at<M: Magnitude>(mu: &ScalingFunction<M>, n: Option<u64>) -> Result<M> {
    match n {
        Some(n) => mu.eval(n),
        None => Ok(M::zero()),
    }
}

/// Consecutive gaps of `μ(E)` are known to be nonincreasing.
fn monotone_pairs<M: Magnitude>(e: &IntegerSet, mu: &ScalingFunction<M>) -> bool {
    mu.convex_closed_form() && matches!(e.spec(), Some(IntSpec::All | IntSpec::Arithmetic { .. }))
}

/// `λ_μ(E,n) = sup |μ(n₁) − μ(n₂)|` over `n ≤ n₁ < n₂` with `(n₁, n₂) ∩ E = ∅`.
///
/// The optimum has `n₁ = n` or `n₁ ∈ E`, with `n₂` the next element of `E`.
/// Elements are scanned upward until `μ(e) ≤ best`.
pub fn lambda_inf<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    n: u64,
) -> Result<InfGapReport<M>> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    let monotone = monotone_pairs(e, mu);
    let n2 = e.next_after(n)?;
    let mut best = mu.eval(n)?.abs_diff(&mu_at(mu, n2)?);
    let mut wit = (n, n2);
    let mut cur = n2;
    while let Some(ek) = cur {
        let mk = mu.eval(ek)?;
        if mk <= best {
            break;
        }
        let nx = e.next_after(ek)?;
        let cand = mk.abs_diff(&mu_at(mu, nx)?);
        if cand > best {
            best = cand;
            wit = (ek, nx);
        }
        if monotone {
            break;
        }
        cur = nx;
    }
    Ok(InfGapReport { n, lambda_mu: best, n1: wit.0, n2: wit.1 })
}

/// Extrema of `λ_μ(E,n)/μ(n)` over `n ∈ [a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NWindow<M> {
    pub a: u64,
    pub b: u64,
    pub sup: M,
    pub argmax: u64,
    pub inf: M,
    pub argmin: u64,
}

/// Sweeps `n` downward using `λ_μ(E,n) = max(μ(n) − μ(next_E(n)), λ_μ(E,n+1))`.
pub fn n_window<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    a: u64,
    b: u64,
) -> Result<NWindow<M>> {
    if a == 0 || a > b {
        return Err(Error::OutOfRange("window needs 1 ≤ a ≤ b".into()));
    }
    let mut best = lambda_inf(e, mu, b + 1)?.lambda_mu;
    let members = e.elements_in(a, b)?;
    let mut member = members.len();
    let mut nxt = e.next_after(b)?;
    let mut mu_nxt = mu_at(mu, nxt)?;
    let mut out: Option<NWindow<M>> = None;
    for n in (a..=b).rev() {
        let mn = mu.eval(n)?;
        let g = mn.abs_diff(&mu_nxt);
        if g > best {
            best = g;
        }
        let r = best.div(&mn);
        match &mut out {
            None => {
                out = Some(NWindow { a, b, sup: r.clone(), argmax: n, inf: r, argmin: n });
            }
            Some(w) => {
                if r > w.sup {
                    w.sup = r.clone();
                    w.argmax = n;
                }
                if r < w.inf {
                    w.inf = r;
                    w.argmin = n;
                }
            }
        }
        if member > 0 && members[member - 1] == n {
            member -= 1;
            nxt = Some(n);
            mu_nxt = mn;
        }
    }
    debug_assert!(nxt.is_some() || members.is_empty());
    Ok(out.expect("window is nonempty"))
}

fn dyadic(j: u32) -> (u64, u64) {
    (1u64 << j, (1u64 << (j + 1)) - 1)
}

fn skippable(e: &Error) -> bool {
    e.is_budget() || matches!(e, Error::Horizon { .. })
}

/// Direct windowed profile over `n ∈ [2^j, 2^(j+1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfProfile<M> {
    pub windows: Vec<(u32, NWindow<M>)>,
    pub skipped: Vec<u32>,
    pub protocol: Protocol,
}

impl<M: Magnitude> InfProfile<M> {
    pub fn bracket(&self, side: Side) -> EstimateBracket<M> {
        let stats = self
            .windows
            .iter()
            .map(|(j, w)| WindowStat { j: *j, sup: w.sup.clone(), inf: w.inf.clone() })
            .collect();
        EstimateBracket::from_windows(
            side,
            stats,
            self.protocol.depth,
            self.protocol.tol,
            !self.skipped.is_empty(),
        )
        .expect("profile is nonempty")
    }
}

pub fn inf_profile<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<InfProfile<M>> {
    if proto.depth == 0 || proto.depth > 62 {
        return Err(Error::OutOfRange("depth must lie in 1..=62".into()));
    }
    let mut windows = Vec::new();
    let mut skipped = Vec::new();
    for j in proto.window_range() {
        let (a, b) = dyadic(j);
        match n_window(e, mu, a, b) {
            Ok(w) => windows.push((j, w)),
            Err(err) if skippable(&err) => skipped.push(j),
            Err(err) => return Err(err),
        }
    }
    if windows.is_empty() {
        return Err(Error::BudgetExhausted { budget: 0 });
    }
    Ok(InfProfile { windows, skipped, protocol: *proto })
}

/// Per-window extrema of `μ(n_k)/μ(n_{k−1})` over elements `n_k ∈ [2^j, 2^(j+1))`.
/// Windows without a ratio are omitted; a finite `E` yields nothing past its end.
pub fn ratio_windows<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<(Vec<WindowStat<M>>, bool)> {
    let mut out = Vec::new();
    let mut budget_hit = false;
    for j in proto.window_range() {
        let (a, b) = dyadic(j);
        let stat = (|| -> Result<Option<WindowStat<M>>> {
            let Some(mut i) = e.first_index_ge(a)? else { return Ok(None) };
            let mut stat: Option<WindowStat<M>> = None;
            while let Some(nk) = e.element(i)? {
                if nk > b {
                    break;
                }
                if i > 0 {
                    let prev = e.element(i - 1)?.expect("earlier element exists");
                    let r = mu.eval(nk)?.div(&mu.eval(prev)?);
                    stat = Some(match stat {
                        None => WindowStat { j, sup: r.clone(), inf: r },
                        Some(s) => WindowStat {
                            j,
                            sup: M::max_of(s.sup, r.clone()),
                            inf: if r < s.inf { r } else { s.inf },
                        },
                    });
                }
                i += 1;
            }
            Ok(stat)
        })();
        match stat {
            Ok(Some(s)) => out.push(s),
            Ok(None) => {}
            Err(err) if skippable(&err) => budget_hit = true,
            Err(err) => return Err(err),
        }
    }
    Ok((out, budget_hit))
}

/// Ratio statistics of consecutive elements, as brackets over the protocol windows.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioStats<M> {
    pub liminf: EstimateBracket<M>,
    pub limsup: EstimateBracket<M>,
}

pub fn ratio_stats<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<Option<RatioStats<M>>> {
    let (ws, hit) = ratio_windows(e, mu, proto)?;
    let lo = EstimateBracket::from_windows(Side::Lower, ws.clone(), proto.depth, proto.tol, hit);
    let hi = EstimateBracket::from_windows(Side::Upper, ws, proto.depth, proto.tol, hit);
    Ok(lo.zip(hi).map(|(liminf, limsup)| RatioStats { liminf, limsup }))
}

/// Upper porosity from the ratio formula `1 − liminf μ(n_k)/μ(n_{k−1})`.
pub fn upper_porosity_inf_ratio<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<Option<EstimateBracket<M>>> {
    let (ws, hit) = ratio_windows(e, mu, proto)?;
    let one = M::one();
    let mapped = ws
        .into_iter()
        .map(|w| WindowStat { j: w.j, sup: one.abs_diff(&w.inf), inf: one.abs_diff(&w.sup) })
        .collect();
    Ok(EstimateBracket::from_windows(Side::Upper, mapped, proto.depth, proto.tol, hit))
}

/// No element of `E` lies beyond the last window, so the ratio formula
/// (which needs an infinite set) does not apply.
fn ends_before_windows(e: &IntegerSet, proto: &Protocol) -> Result<bool> {
    match e.next_after((1u64 << proto.depth) - 1) {
        Ok(x) => Ok(x.is_none()),
        Err(Error::Horizon { .. }) => Ok(false),
        Err(err) => Err(err),
    }
}

fn spread<M: Magnitude>(b: &EstimateBracket<M>) -> f64 {
    let vals = b.windows.iter().map(|w| match b.side {
        Side::Upper => w.sup.to_f64(),
        Side::Lower => w.inf.to_f64(),
    });
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

fn cross_check<M: Magnitude>(
    direct: &EstimateBracket<M>,
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<()> {
    if ends_before_windows(e, proto)? {
        return Ok(());
    }
    if let Some(ratio) = upper_porosity_inf_ratio(e, mu, proto)? {
        let (d, f) = (direct.value(), ratio.value());
        // The two paths index windows one element apart; before convergence
        // they may differ by the spread of the window values.
        let slack = proto.tol + spread(direct).max(spread(&ratio));
        if (d - f).abs() > slack {
            return Err(Error::Disagreement { direct: d, formula: f, tol: proto.tol });
        }
    }
    Ok(())
}

/// Windowed upper porosity at infinity, cross-validated against the ratio formula.
pub fn upper_porosity_inf<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<EstimateBracket<M>> {
    let b = inf_profile(e, mu, proto)?.bracket(Side::Upper);
    cross_check(&b, e, mu, proto)?;
    Ok(b)
}

pub fn lower_porosity_inf<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<EstimateBracket<M>> {
    Ok(inf_profile(e, mu, proto)?.bracket(Side::Lower))
}

pub fn porosity_interval_inf<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<(EstimateBracket<M>, EstimateBracket<M>)> {
    let p = inf_profile(e, mu, proto)?;
    let upper = p.bracket(Side::Upper);
    cross_check(&upper, e, mu, proto)?;
    Ok((p.bracket(Side::Lower), upper))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfClass {
    Nonporous,
    Porous,
    StronglyPorous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfClassification<M> {
    pub class: InfClass,
    /// Upper porosity implied by the ratio statistics.
    pub upper: f64,
    /// Absent for finite sets.
    pub ratios: Option<RatioStats<M>>,
}

/// Three-way label from `p̄_μ(E) = 1 − liminf μ(n_k)/μ(n_{k−1})`:
/// nonporous when that is within `tol` of 0, strongly porous within `tol` of 1.
pub fn classify_inf<M: Magnitude>(
    e: &IntegerSet,
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<InfClassification<M>> {
    if ends_before_windows(e, proto)? {
        return Ok(InfClassification { class: InfClass::StronglyPorous, upper: 1.0, ratios: None });
    }
    let ratios = ratio_stats(e, mu, proto)?;
    let upper = match &ratios {
        Some(r) => 1.0 - r.liminf.value(),
        None => return Err(Error::OutOfRange("no consecutive elements in the windows".into())),
    };
    let decaying = ratios.as_ref().is_some_and(|r| geometric_decay(&r.liminf));
    let class = if upper <= proto.tol || decaying {
        InfClass::Nonporous
    } else if upper >= 1.0 - proto.tol {
        InfClass::StronglyPorous
    } else {
        InfClass::Porous
    };
    Ok(InfClassification { class, upper, ratios })
}

/// Per-window `1 − inf ratio` shrinking by a steady factor of at most
/// `DECAY_MAX` over the last windows, so it tends to 0.
fn geometric_decay<M: Magnitude>(liminf: &EstimateBracket<M>) -> bool {
    let u: Vec<f64> = liminf.windows.iter().rev().take(AGREEMENT + 1).map(|w| 1.0 - w.inf.to_f64()).collect();
    if u.len() < AGREEMENT + 1 || u.iter().any(|&x| x <= 0.0) {
        return false;
    }
    let rho: Vec<f64> = u.windows(2).map(|p| p[0] / p[1]).collect();
    let (lo, hi) = rho.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    hi <= DECAY_MAX && hi - lo <= DECAY_SPREAD
}

const DECAY_MAX: f64 = 0.9;
const DECAY_SPREAD: f64 = 0.05;

/// Compares `p̄(μ(E))` at 0 with `p̄_μ(E)` window by window.
///
/// For `n`-window `[a, b]`, `λ(μ(E), μ(n)) = λ_μ(E, n)` and `Φ` has no interior
/// maximum between consecutive `μ(n)`, so the sup of `Φ` over `[μ(b), μ(a)]`
/// must equal the sup of `λ_μ(E,n)/μ(n)` over `[a, b]`.
pub fn check_matched_scales<M: Magnitude>(
    e: Arc<IntegerSet>,
    mu: Arc<ScalingFunction<M>>,
    proto: &Protocol,
) -> Result<CheckReport> {
    let image = SetHandle::image(mu.clone(), e.clone());
    let direct = inf_profile(&e, &mu, proto)?;
    let mut lhs_stats = Vec::new();
    let mut gap = 0.0f64;
    for (j, w) in &direct.windows {
        let sup = if w.a == w.b {
            porosity0::phi(&image, &mu.eval(w.a)?)?
        } else {
            extrema_on(&image, &mu.eval(w.b)?, &mu.eval(w.a)?)?.sup
        };
        gap = gap.max(sup.abs_diff(&w.sup).to_f64());
        lhs_stats.push(WindowStat { j: *j, sup: sup.clone(), inf: sup });
    }
    let lhs = EstimateBracket::from_windows(Side::Upper, lhs_stats, proto.depth, proto.tol, false)
        .expect("profile is nonempty");
    let rhs = direct.bracket(Side::Upper);
    gap = gap.max(lhs.estimate.abs_diff(&rhs.estimate).to_f64());
    Ok(CheckReport {
        check: "matched-scales".into(),
        inputs: json!({ "set": e.spec(), "mu": mu.spec(), "mode": M::MODE }),
        lhs: lhs.estimate.render(),
        rhs: rhs.estimate.render(),
        gap,
        tol: proto.tol,
        pass: gap <= proto.tol,
        depth: proto.depth,
        converged: lhs.converged && rhs.converged,
        note: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equivalence<M> {
    /// Deviation in the deepest window is within tolerance.
    pub equivalent: bool,
    /// Per-window `max ρ / min ρ − 1` with `ρ = μ₁/μ₂`.
    pub deviation: EstimateBracket<M>,
    /// `μ₁(n_{k+1})μ₂(n_k) / (μ₁(n_k)μ₂(n_{k+1}))` along the given subsequence.
    pub alpha: Option<EstimateBracket<M>>,
}

/// Square-window estimate of `μ₁(n)μ₂(m)/(μ₂(n)μ₁(m)) → 1`.
pub fn scaling_equivalent<M: Magnitude>(
    mu1: &ScalingFunction<M>,
    mu2: &ScalingFunction<M>,
    proto: &Protocol,
    subsequence: Option<&IntegerSet>,
) -> Result<Equivalence<M>> {
    let mut devs = Vec::new();
    for j in proto.window_range() {
        let (a, b) = dyadic(j);
        let mut lo: Option<M> = None;
        let mut hi: Option<M> = None;
        for n in a..=b {
            let rho = mu1.eval(n)?.div(&mu2.eval(n)?);
            if lo.as_ref().is_none_or(|l| rho < *l) {
                lo = Some(rho.clone());
            }
            if hi.as_ref().is_none_or(|h| rho > *h) {
                hi = Some(rho);
            }
        }
        let (lo, hi) = (lo.expect("nonempty"), hi.expect("nonempty"));
        let dev = hi.div(&lo).abs_diff(&M::one());
        devs.push(WindowStat { j, sup: dev.clone(), inf: dev });
    }
    let equivalent = devs.last().is_some_and(|d| d.sup.to_f64() <= proto.tol);
    let deviation = EstimateBracket::from_windows(Side::Upper, devs, proto.depth, proto.tol, false)
        .ok_or_else(|| Error::OutOfRange("depth must be at least 1".into()))?;
    let alpha = match subsequence {
        None => None,
        Some(s) => {
            let mut ws = Vec::new();
            for j in proto.window_range() {
                let (a, b) = dyadic(j);
                let mut stat: Option<WindowStat<M>> = None;
                for nk in s.elements_in(a, b)? {
                    let Some(next) = s.next_after(nk)? else { break };
                    let v = mu1
                        .eval(next)?
                        .mul(&mu2.eval(nk)?)
                        .div(&mu1.eval(nk)?.mul(&mu2.eval(next)?));
                    stat = Some(match stat {
                        None => WindowStat { j, sup: v.clone(), inf: v },
                        Some(w) => WindowStat {
                            j,
                            sup: M::max_of(w.sup, v.clone()),
                            inf: if v < w.inf { v } else { w.inf },
                        },
                    });
                }
                ws.extend(stat);
            }
            EstimateBracket::from_windows(Side::Upper, ws, proto.depth, proto.tol, false)
        }
    };
    Ok(Equivalence { equivalent, deviation, alpha })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveForms<M> {
    /// `p_μ(ℕ) = 1 − limsup μ(n+1)/μ(n)`.
    pub p_mu_lower: EstimateBracket<M>,
    /// `p(μ(ℕ)) = p_μ(ℕ) / (1 + p_μ(ℕ))`.
    pub p_image_lower: EstimateBracket<M>,
    /// One past the last index in the scanned windows where
    /// `(μ(n−1) + μ(n+1))/2 ≥ μ(n)` fails.
    pub concavity_onset: Option<u64>,
}

/// Closed forms for lower porosity, available once the concavity inequality
/// holds throughout the deepest window.
pub fn eventually_concave_closed_forms<M: Magnitude>(
    mu: &ScalingFunction<M>,
    proto: &Protocol,
) -> Result<ConcaveForms<M>> {
    let two = M::ratio(2, 1);
    let one = M::one();
    let mut last_violation: Option<u64> = None;
    let mut p_ws = Vec::new();
    let mut img_ws = Vec::new();
    let deepest = proto.depth.saturating_sub(1);
    for j in proto.window_range() {
        let (a, b) = dyadic(j);
        let mut prev = mu.eval(a.max(2) - 1)?;
        let mut cur = mu.eval(a.max(2))?;
        let mut rmax: Option<M> = None;
        let mut rmin: Option<M> = None;
        if a == 1 {
            let r = cur.div(&prev);
            rmax = Some(r.clone());
            rmin = Some(r);
        }
        for n in a.max(2)..=b {
            let next = mu.eval(n + 1)?;
            if prev.add(&next) < two.mul(&cur) {
                last_violation = Some(n);
                if j == deepest {
                    return Err(Error::NotEventuallyConcave(n));
                }
            }
            let r = next.div(&cur);
            if rmax.as_ref().is_none_or(|m| r > *m) {
                rmax = Some(r.clone());
            }
            if rmin.as_ref().is_none_or(|m| r < *m) {
                rmin = Some(r);
            }
            prev = cur;
            cur = next;
        }
        let (rmax, rmin) = (rmax.expect("nonempty"), rmin.expect("nonempty"));
        let (p_hi, p_lo) = (one.abs_diff(&rmin), one.abs_diff(&rmax));
        let img = |p: &M| p.div(&one.add(p));
        img_ws.push(WindowStat { j, sup: img(&p_hi), inf: img(&p_lo) });
        p_ws.push(WindowStat { j, sup: p_hi, inf: p_lo });
    }
    let mk = |ws| {
        EstimateBracket::from_windows(Side::Lower, ws, proto.depth, proto.tol, false)
            .ok_or_else(|| Error::OutOfRange("depth must be at least 1".into()))
    };
    Ok(ConcaveForms {
        p_mu_lower: mk(p_ws)?,
        p_image_lower: mk(img_ws)?,
        concavity_onset: last_violation.map(|n| n + 1),
    })
}

#[derive(Debug)]
pub struct BuiltM {
    pub set: IntegerSet,
    pub horizon: u64,
    /// Intervals below the enumeration floor were declared present.
    pub budget_hit: bool,
}

/// `M ∩ [1, N]`: `m ≥ 2` belongs iff `E` meets `[μ(m+1), μ(m−1)]`,
/// and `1` belongs iff `E` meets `[μ(2), ∞)`.
pub fn build_m<M: Magnitude>(
    e_real: &SetHandle<M>,
    mu: &ScalingFunction<M>,
    n_max: u64,
) -> Result<BuiltM> {
    if n_max < 2 {
        return Err(Error::OutOfRange("N must be at least 2".into()));
    }
    let mut c = e_real.cursor();
    let mut members = Vec::new();
    let mut budget_hit = false;
    match c.get(0) {
        Ok(Some(x)) if *x >= mu.eval(2)? => members.push(1),
        Ok(_) => {}
        Err(err) if err.is_budget() => budget_hit = true,
        Err(err) => return Err(err),
    }
    let mut hi = mu.eval(1)?;
    for m in 2..=n_max {
        let lo = mu.eval(m + 1)?;
        let present = if budget_hit {
            true
        } else {
            match c.index_at_or_below(&hi) {
                Ok(Some(i)) => c.get(i)?.is_some_and(|x| *x >= lo),
                Ok(None) => false,
                Err(err) if err.is_budget() => {
                    budget_hit = true;
                    true
                }
                Err(err) => return Err(err),
            }
        };
        if present {
            members.push(m);
        }
        hi = mu.eval(m)?;
    }
    Ok(BuiltM { set: IntegerSet::truncated(members, n_max)?, horizon: n_max, budget_hit })
}

/// Compares `P(E)` at 0 with `P_μ(M_{E,μ})` at infinity.
pub fn check_built_set<M: Magnitude>(
    e_real: &SetHandle<M>,
    mu: Arc<ScalingFunction<M>>,
    n_max: u64,
    proto0: &Protocol,
    tol: f64,
) -> Result<CheckReport> {
    let ratio = mu.eval(n_max)?.div(&mu.eval(n_max - 1)?).to_f64();
    let slowly_varying = 1.0 - ratio <= tol;
    let built = build_m(e_real, &mu, n_max)?;
    let log2n = 63 - n_max.leading_zeros();
    let inf_proto = Protocol { depth: log2n.saturating_sub(2).max(1), windows: proto0.windows, tol };
    let (lo0, hi0) = porosity0::porosity_interval(e_real, proto0)?;
    let (loi, hii) = match built.set.element(0) {
        Err(Error::Horizon { .. }) => {
            // Empty M: every window is gap-only.
            let one = M::one();
            let w = vec![WindowStat { j: 0, sup: one.clone(), inf: one }];
            let b = EstimateBracket::from_windows(Side::Upper, w, inf_proto.depth, tol, false)
                .expect("nonempty");
            (EstimateBracket { side: Side::Lower, ..b.clone() }, b)
        }
        _ => {
            let p = inf_profile(&built.set, &mu, &inf_proto)?;
            (p.bracket(Side::Lower), p.bracket(Side::Upper))
        }
    };
    let gap = lo0
        .value()
        .sub_abs(loi.value())
        .max(hi0.value().sub_abs(hii.value()));
    Ok(CheckReport {
        check: "built-set".into(),
        inputs: json!({
            "set": e_real.spec(),
            "mu": mu.spec(),
            "n": n_max,
            "inf_depth": inf_proto.depth,
            "mode": M::MODE,
        }),
        lhs: render_interval(&lo0.estimate, &hi0.estimate),
        rhs: render_interval(&loi.estimate, &hii.estimate),
        gap,
        tol,
        pass: gap <= tol,
        depth: proto0.depth,
        converged: lo0.converged && hi0.converged && loi.converged && hii.converged,
        note: Some(format!(
            "mu(N)/mu(N-1) = {ratio}; ratio limit 1 {}{}",
            if slowly_varying { "holds" } else { "fails" },
            if built.budget_hit { "; M filled below the enumeration floor" } else { "" }
        )),
    })
}

trait SubAbs {
    fn sub_abs(self, other: f64) -> f64;
}

impl SubAbs for f64 {
    fn sub_abs(self, other: f64) -> f64 {
        (self - other).abs()
    }
}
