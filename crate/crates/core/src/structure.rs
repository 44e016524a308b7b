//! Complementary components of `E` near 0 and the structural criteria built
//! on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{EstimateBracket, Protocol, Side, WindowStat, AGREEMENT};
use crate::intset::IntegerSet;
use crate::porosity0::{self, extrema_on, lambda0};
use crate::porosity_inf::lower_porosity_inf;
use crate::scalar::Magnitude;
use crate::scaling::ScalingFunction;
use crate::setkit::SetHandle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl Verdict {
    fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Inconsistent, _) | (_, Inconsistent) => Inconsistent,
            (Consistent, Consistent) => Consistent,
            _ => Inconclusive,
        }
    }
}

/// Judges whether `values` tends to `target`: the last three within `tol`,
/// still strictly approaching, or neither.
pub fn judge(values: &[f64], target: f64, tol: f64) -> Verdict {
    if values.len() < AGREEMENT {
        return Verdict::Inconclusive;
    }
    let d: Vec<f64> = values[values.len() - AGREEMENT..].iter().map(|v| (v - target).abs()).collect();
    if d.iter().all(|&x| x <= tol) {
        Verdict::Consistent
    } else if d.windows(2).all(|w| w[1] < w[0]) {
        Verdict::Inconclusive
    } else {
        Verdict::Inconsistent
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component<M> {
    pub a: M,
    pub b: M,
    /// Touches `h` or reaches 0; its true extent is not known.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentChain<M> {
    /// Decreasing: `a_k ≥ b_{k+1} > a_{k+1}`.
    pub components: Vec<Component<M>>,
    pub floor: M,
    /// `E` has points below the floor.
    pub accumulates: bool,
}

impl<M: Magnitude> ComponentChain<M> {
    pub fn complete(&self) -> impl Iterator<Item = &Component<M>> {
        self.components.iter().filter(|c| !c.partial)
    }

    /// Every `stride`-th complete component, starting with the first.
    pub fn every(&self, stride: usize) -> ComponentChain<M> {
        ComponentChain {
            components: self.complete().step_by(stride.max(1)).cloned().collect(),
            floor: self.floor.clone(),
            accumulates: self.accumulates,
        }
    }
}

/// Maximal `E`-free open intervals of `(0, h)` whose left end is at least
/// `2^-depth`, largest first.
pub fn components<M: Magnitude>(e: &SetHandle<M>, h: &M, depth: u32) -> Result<ComponentChain<M>> {
    if h.is_zero() {
        return Err(Error::OutOfRange("h must be positive".into()));
    }
    let floor = M::pow2(-i64::from(depth));
    let mut c = e.cursor();
    let mut comps = Vec::new();
    let Some(mut i) = c.index_below(h)? else {
        comps.push(Component { a: M::zero(), b: h.clone(), partial: true });
        return Ok(ComponentChain { components: comps, floor, accumulates: false });
    };
    let mut upper = h.clone();
    let mut partial = true;
    let mut accumulates = true;
    loop {
        match c.get(i)? {
            Some(x) if *x >= floor => {
                comps.push(Component { a: x.clone(), b: upper, partial });
                upper = x.clone();
                partial = false;
                i += 1;
            }
            Some(_) => break,
            None => {
                comps.push(Component { a: M::zero(), b: upper, partial: true });
                accumulates = false;
                break;
            }
        }
    }
    Ok(ComponentChain { components: comps, floor, accumulates })
}

fn window_of<M: Magnitude>(x: &M) -> u32 {
    (-x.log2()).floor().max(0.0) as u32
}

/// Groups `(x, value)` by the dyadic window of `x`, keeping the value farthest from `target`.
fn by_window<M: Magnitude>(items: impl Iterator<Item = (M, f64)>, target: f64) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64)> = Vec::new();
    for (x, v) in items {
        let j = window_of(&x);
        match out.last_mut() {
            Some((lj, lv)) if *lj == j => {
                if (v - target).abs() > (*lv - target).abs() {
                    *lv = v;
                }
            }
            _ => out.push((j, v)),
        }
    }
    out
}

/// `limsup a_n / b_{n+1}` along the complete components, windowed by `a_n`.
pub fn chain_m<M: Magnitude>(chain: &ComponentChain<M>, tol: f64) -> Option<EstimateBracket<M>> {
    let comps: Vec<&Component<M>> = chain.complete().collect();
    let mut stats: Vec<WindowStat<M>> = Vec::new();
    for pair in comps.windows(2) {
        let r = pair[0].a.div(&pair[1].b);
        let j = window_of(&pair[0].a);
        match stats.last_mut() {
            Some(w) if w.j == j => {
                if r > w.sup {
                    w.sup = r.clone();
                }
                if r < w.inf {
                    w.inf = r;
                }
            }
            _ => stats.push(WindowStat { j, sup: r.clone(), inf: r }),
        }
    }
    let depth = window_of(&chain.floor);
    EstimateBracket::from_windows(Side::Upper, stats, depth, tol, false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspReport<M> {
    pub verdict: Verdict,
    pub m: Option<EstimateBracket<M>>,
    pub upper_porosity: f64,
}

/// Chain with finite `M(L̃)` plus the strong-porosity gate `p̄ = 1`.
pub fn classify_csp<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<CspReport<M>> {
    let chain = components(e, &M::one(), proto.depth)?;
    if !chain.accumulates {
        return Ok(CspReport { verdict: Verdict::Consistent, m: None, upper_porosity: 1.0 });
    }
    let upper = porosity0::upper_porosity0(e, proto)?;
    let m = chain_m(&chain, proto.tol);
    let gate = if upper.value() >= 1.0 - proto.tol {
        Verdict::Consistent
    } else if upper.converged {
        Verdict::Inconsistent
    } else {
        Verdict::Inconclusive
    };
    let finite_m = match &m {
        Some(b) if b.value().is_finite() => Verdict::Consistent,
        _ => Verdict::Inconclusive,
    };
    Ok(CspReport { verdict: gate.and(finite_m), m, upper_porosity: upper.value() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspReport {
    pub verdict: Verdict,
    /// `a_k → 0`
    pub left_ends: Vec<(u32, f64)>,
    /// `(b_k − a_k)/b_k → 1`
    pub relative_length: Vec<(u32, f64)>,
    /// `b_{k+1}/a_k → 1`
    pub adjacency: Vec<(u32, f64)>,
    pub chain_len: usize,
    /// `p_μ(ℕ)` when `E = μ(ℕ)`, with its own verdict.
    pub cross_check: Option<(f64, Verdict)>,
}

/// Tests the three limit conditions on the chain of all components below 1.
pub fn classify_ssp<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<SspReport> {
    let chain = components(e, &M::one(), proto.depth)?;
    let comps: Vec<&Component<M>> = chain.complete().collect();
    let left_ends = by_window(comps.iter().map(|c| (c.a.clone(), c.a.to_f64())), 0.0);
    let relative_length = by_window(
        comps.iter().map(|c| (c.a.clone(), c.b.abs_diff(&c.a).div(&c.b).to_f64())),
        1.0,
    );
    let adjacency =
        by_window(comps.windows(2).map(|p| (p[0].a.clone(), p[1].b.div(&p[0].a).to_f64())), 1.0);
    let verdict = if !chain.accumulates {
        Verdict::Consistent
    } else {
        let vals = |p: &[(u32, f64)]| p.iter().map(|x| x.1).collect::<Vec<_>>();
        judge(&vals(&left_ends), 0.0, proto.tol)
            .and(judge(&vals(&relative_length), 1.0, proto.tol))
            .and(judge(&vals(&adjacency), 1.0, proto.tol))
    };
    let cross_check = match e.spec().and_then(|s| s.image_of_all()) {
        None => None,
        Some(mu_spec) => {
            let mu = ScalingFunction::<M>::from_spec(mu_spec)?;
            let depth = match mu.max_argument() {
                Some(n) => (64 - (n + 1).leading_zeros()).saturating_sub(2).max(2),
                None => 12,
            };
            let p = Protocol { depth, windows: (depth / 2).max(1), tol: proto.tol };
            let lower = lower_porosity_inf(&IntegerSet::all(), &mu, &p)?;
            let v = lower.value();
            Some((v, if (v - 1.0).abs() <= proto.tol { Verdict::Consistent } else { Verdict::Inconsistent }))
        }
    };
    Ok(SspReport { verdict, left_ends, relative_length, adjacency, chain_len: comps.len(), cross_check })
}

/// `F(x, y) = |x − y| (x ∧ y) / (x ∨ y)²`.
pub fn f_value<M: Magnitude>(x: &M, y: &M) -> M {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    if hi.is_zero() {
        return M::zero();
    }
    hi.abs_diff(lo).mul(lo).div(&hi.mul(hi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FProfile<M> {
    /// `sup F(x, y)` over pairs with `x ∨ y ≤ 2^-j`.
    pub profile: Vec<(u32, M)>,
    pub verdict: Verdict,
}

/// Tail sups of `F` over pairs of points of `E`.
///
/// For fixed `y = x ∨ y`, `F` is concave in `x` with its peak at `y/2`, so
/// only the two points of `E` around `y/2` need checking.
pub fn f_criterion<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<FProfile<M>> {
    let floor = M::pow2(-i64::from(proto.depth));
    let range = proto.window_range();
    let top = M::pow2(-i64::from(range.start));
    let mut ys = e.points_in(&floor, &top)?;
    // Each tail must see at least one y, even below the floor.
    let mut c = e.cursor();
    if let Some(i) = c.index_below(&floor)? {
        ys.extend(c.get(i)?.cloned());
    }
    let mut best_for = Vec::with_capacity(ys.len());
    for y in &ys {
        let half = y.div(&M::ratio(2, 1));
        let mut best = M::zero();
        if let Some(i) = c.index_at_or_below(&half)? {
            best = M::max_of(best, f_value(c.get(i)?.expect("indexed point"), y));
        }
        if let Some(i) = c.index_below(y)? {
            if let Some(x) = c.get(i)? {
                if *x > half {
                    best = M::max_of(best, f_value(x, y));
                }
            }
            // The smallest point above y/2 is just above the one at or below it.
            if let Some(k) = c.index_at_or_below(&half)?.and_then(|k| k.checked_sub(1)) {
                if k >= i {
                    best = M::max_of(best, f_value(c.get(k)?.expect("indexed point"), y));
                }
            }
        }
        best_for.push(best);
    }
    drop(c);
    let mut profile = Vec::new();
    for j in range {
        let cap = M::pow2(-i64::from(j));
        let s = ys
            .iter()
            .zip(&best_for)
            .filter(|(y, _)| **y <= cap)
            .map(|(_, b)| b.clone())
            .max()
            .unwrap_or_else(M::zero);
        profile.push((j, s));
    }
    let vals: Vec<f64> = profile.iter().map(|p| p.1.to_f64()).collect();
    let verdict = judge(&vals, 0.0, proto.tol);
    Ok(FProfile { profile, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLawReport {
    pub lower: f64,
    pub accumulates: bool,
    /// `lower ≤ 1/2 + tol`.
    pub at_most_half: bool,
    /// `|lower − 1/2| ≤ tol`, asserted when the SSP verdict is consistent.
    pub equals_half: Option<bool>,
    /// Triples where the local-min location was checked, and how many matched.
    pub min_location_checked: usize,
    pub min_location_matched: usize,
}

/// Lower-porosity facts: at most 1/2 whenever 0 is an accumulation point,
/// exactly 1/2 for sets passing the SSP test, and on each `[a_k, a_{k−1}]`
/// the minimum of `Φ` at `2a_k − a_{k+1}` when gaps shrink downward.
pub fn half_law_checks<M: Magnitude>(
    e: &SetHandle<M>,
    proto: &Protocol,
    ssp: Verdict,
) -> Result<HalfLawReport> {
    let lower = porosity0::lower_porosity0(e, proto)?.value();
    let chain = components(e, &M::one(), proto.depth)?;
    let accumulates = chain.accumulates;
    let at_most_half = !accumulates || lower <= 0.5 + proto.tol;
    let equals_half = (accumulates && ssp == Verdict::Consistent).then(|| (lower - 0.5).abs() <= proto.tol);
    let pts: Vec<M> = chain.complete().map(|c| c.b.clone()).chain(chain.complete().last().map(|c| c.a.clone())).collect();
    let (mut checked, mut matched) = (0, 0);
    for t in pts.windows(3) {
        let (prev, ak, next) = (&t[0], &t[1], &t[2]);
        let step = ak.abs_diff(next);
        if step > prev.abs_diff(ak) {
            continue;
        }
        let g = lambda0(e, ak)?;
        if g.budget_hit || g.lambda != step {
            continue;
        }
        let target = ak.add(&step);
        if target > *prev {
            continue;
        }
        checked += 1;
        let w = extrema_on(e, ak, prev)?;
        if w.argmin == target || w.argmin.abs_diff(&target).div(&target).to_f64() <= 1e-9 {
            matched += 1;
        }
    }
    Ok(HalfLawReport {
        lower,
        accumulates,
        at_most_half,
        equals_half,
        min_location_checked: checked,
        min_location_matched: matched,
    })
}
