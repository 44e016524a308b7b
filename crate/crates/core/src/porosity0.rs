//! Porosity at 0: gap lengths `λ(E,h)`, the ratio `Φ(h) = λ(E,h)/h`, and
//! windowed upper and lower porosity.

use crate::error::{Error, Result};
use crate::estimate::{EstimateBracket, Protocol, Side, WindowStat};
use crate::scalar::Magnitude;
use crate::setkit::SetHandle;

/// The open interval `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gap<M> {
    pub a: M,
    pub b: M,
}

impl<M: Magnitude> Gap<M> {
    pub fn len(&self) -> M {
        self.b.abs_diff(&self.a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport<M> {
    pub h: M,
    pub lambda: M,
    pub witness: Gap<M>,
    /// The scan stopped on the budget; `lambda` is only a lower bound.
    pub budget_hit: bool,
}

fn check_h<M: Magnitude>(h: &M) -> Result<()> {
    if h.is_zero() {
        return Err(Error::OutOfRange("h must be positive".into()));
    }
    Ok(())
}

/// Largest `E`-free open subinterval of `(0, h)`.
///
/// Scans points below `h` downward and stops once the current point is no
/// longer than the best gap, since every gap below it is shorter. Sets with
/// nonincreasing gaps stop after the first interior gap. Ties go to the gap
/// with the larger left endpoint.
pub fn lambda0<M: Magnitude>(e: &SetHandle<M>, h: &M) -> Result<GapReport<M>> {
    check_h(h)?;
    let mut c = e.cursor();
    let Some(i0) = c.index_below(h)? else {
        return Ok(GapReport {
            h: h.clone(),
            lambda: h.clone(),
            witness: Gap { a: M::zero(), b: h.clone() },
            budget_hit: false,
        });
    };
    let mut prev = c.get(i0)?.expect("indexed point exists").clone();
    let mut best = h.abs_diff(&prev);
    let mut witness = Gap { a: prev.clone(), b: h.clone() };
    let mut budget_hit = false;
    let mut i = i0;
    while prev > best {
        match c.get(i + 1) {
            Ok(Some(x)) => {
                let g = prev.abs_diff(x);
                if g > best {
                    best = g;
                    witness = Gap { a: x.clone(), b: prev.clone() };
                }
                prev = x.clone();
                i += 1;
                if e.monotone_gaps() {
                    break;
                }
            }
            Ok(None) => {
                if prev > best {
                    best = prev.clone();
                    witness = Gap { a: M::zero(), b: prev.clone() };
                }
                break;
            }
            Err(err) if err.is_budget() => {
                budget_hit = true;
                break;
            }
            Err(err) => return Err(err),
        }
    }
    Ok(GapReport { h: h.clone(), lambda: best, witness, budget_hit })
}

/// `Φ(h) = λ(E,h)/h`.
pub fn phi<M: Magnitude>(e: &SetHandle<M>, h: &M) -> Result<M> {
    let r = lambda0(e, h)?;
    if r.budget_hit {
        return Err(Error::BudgetExhausted { budget: e.budget() });
    }
    Ok(r.lambda.div(h))
}

/// Exact extrema of `Φ` over `h ∈ (lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeExtrema<M> {
    pub lo: M,
    pub hi: M,
    pub sup: M,
    pub argmax: M,
    /// Largest gap of `(0, argmax)`.
    pub witness: Gap<M>,
    pub inf: M,
    pub argmin: M,
}

/// Extrema of `Φ` on `(lo, hi]`.
///
/// Between consecutive points `p1 < p0` of `E`, `λ(h) = max(h − p1, G)` with
/// `G = λ(E, p1)`, so `Φ` falls until `h = p1 + G` and rises after. The
/// extrema are therefore among the window ends, the points of `E` inside,
/// and those crossings. The value at `lo` is a limit (`Φ` is continuous).
pub fn extrema_on<M: Magnitude>(e: &SetHandle<M>, lo: &M, hi: &M) -> Result<RangeExtrema<M>> {
    check_h(lo)?;
    if lo >= hi {
        return Err(Error::OutOfRange("window needs lo < hi".into()));
    }
    // Points in (lo, hi) in decreasing order, then the first point <= lo.
    let (inside, below) = {
        let mut c = e.cursor();
        let mut inside = Vec::new();
        let mut below = None;
        if let Some(mut i) = c.index_below(hi)? {
            while let Some(x) = c.get(i)? {
                if x <= lo {
                    below = Some(x.clone());
                    break;
                }
                inside.push(x.clone());
                i += 1;
            }
        }
        (inside, below)
    };
    let (p_low, mut g, mut g_wit) = match below {
        Some(p) => {
            let r = lambda0(e, &p)?;
            if r.budget_hit {
                return Err(Error::BudgetExhausted { budget: e.budget() });
            }
            (p, r.lambda, r.witness)
        }
        None => (M::zero(), M::zero(), Gap { a: M::zero(), b: M::zero() }),
    };
    let mut ascending = Vec::with_capacity(inside.len() + 1);
    ascending.push(p_low);
    ascending.extend(inside.into_iter().rev());

    let mut best: Option<(M, M, Gap<M>)> = None;
    let mut worst: Option<(M, M)> = None;
    for k in 0..ascending.len() {
        let p1 = &ascending[k];
        let p0 = ascending.get(k + 1);
        let seg_lo = if p1 > lo { p1.clone() } else { lo.clone() };
        let seg_hi = p0.cloned().unwrap_or_else(|| hi.clone());
        let cross = p1.add(&g);
        let mut cands = vec![seg_lo.clone()];
        if cross > seg_lo && cross < seg_hi {
            cands.push(cross);
        }
        cands.push(seg_hi);
        for h in cands {
            let top = h.abs_diff(p1);
            let (lam, wit) = if top >= g {
                (top, Gap { a: p1.clone(), b: h.clone() })
            } else {
                (g.clone(), g_wit.clone())
            };
            let v = lam.div(&h);
            if best.as_ref().is_none_or(|(b, _, _)| v >= *b) {
                best = Some((v.clone(), h.clone(), wit));
            }
            if worst.as_ref().is_none_or(|(w, _)| v <= *w) {
                worst = Some((v, h));
            }
        }
        if let Some(p0) = p0 {
            let step = p0.abs_diff(p1);
            if step >= g {
                g = step;
                g_wit = Gap { a: p1.clone(), b: p0.clone() };
            }
        }
    }
    let (sup, argmax, witness) = best.expect("at least one candidate");
    let (inf, argmin) = worst.expect("at least one candidate");
    Ok(RangeExtrema { lo: lo.clone(), hi: hi.clone(), sup, argmax, witness, inf, argmin })
}

/// Extrema on the dyadic window `(2^-(j+1), 2^-j]`.
pub fn window_extrema<M: Magnitude>(e: &SetHandle<M>, j: u32) -> Result<RangeExtrema<M>> {
    extrema_on(e, &M::pow2(-(i64::from(j) + 1)), &M::pow2(-i64::from(j)))
}

/// Per-window extrema over the protocol's trailing windows.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile<M> {
    pub windows: Vec<(u32, RangeExtrema<M>)>,
    /// Windows dropped on budget exhaustion.
    pub skipped: Vec<u32>,
    pub protocol: Protocol,
}

pub fn profile<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<Profile<M>> {
    if proto.depth < 3 {
        return Err(Error::OutOfRange("depth must be at least 3".into()));
    }
    let mut windows = Vec::new();
    let mut skipped = Vec::new();
    for j in proto.window_range() {
        match window_extrema(e, j) {
            Ok(w) => windows.push((j, w)),
            Err(err) if err.is_budget() => skipped.push(j),
            Err(err) => return Err(err),
        }
    }
    if windows.is_empty() {
        return Err(Error::BudgetExhausted { budget: e.budget() });
    }
    Ok(Profile { windows, skipped, protocol: *proto })
}

impl<M: Magnitude> Profile<M> {
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

pub fn upper_porosity0<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<EstimateBracket<M>> {
    Ok(profile(e, proto)?.bracket(Side::Upper))
}

pub fn lower_porosity0<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<EstimateBracket<M>> {
    Ok(profile(e, proto)?.bracket(Side::Lower))
}

/// `[lower, upper]`. `Φ` is continuous, so every value in between is also a
/// limit point of `Φ` at 0.
pub fn porosity_interval<M: Magnitude>(
    e: &SetHandle<M>,
    proto: &Protocol,
) -> Result<(EstimateBracket<M>, EstimateBracket<M>)> {
    let p = profile(e, proto)?;
    Ok((p.bracket(Side::Lower), p.bracket(Side::Upper)))
}
