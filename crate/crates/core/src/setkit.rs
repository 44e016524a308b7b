//! Lazily enumerated point sets `E ⊆ [0, ∞)` accumulating only at 0.
//!
//! Positive points are produced in strictly decreasing order and memoized;
//! `0` is always treated as a point of the closure.

use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::intset::IntegerSet;
use crate::scalar::Magnitude;
use crate::scaling::ScalingFunction;
use crate::spec::{IntSpec, MuSpec, SetSpec};

/// Default cap on materialized points per set.
pub const DEFAULT_BUDGET: usize = 1_000_000;

type Source<M> = Box<dyn Iterator<Item = Result<M>> + Send>;

struct Cache<M> {
    points: Vec<M>,
    source: Source<M>,
    exhausted: bool,
}

pub struct SetHandle<M> {
    spec: Option<SetSpec>,
    budget: usize,
    monotone_gaps: bool,
    cache: Mutex<Cache<M>>,
}

impl<M> fmt::Debug for SetHandle<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetHandle")
            .field("spec", &self.spec)
            .field("budget", &self.budget)
            .field("monotone_gaps", &self.monotone_gaps)
            .finish()
    }
}

/// Holds the cache lock for a run of queries.
pub struct Cursor<'a, M> {
    set: &'a SetHandle<M>,
    cache: MutexGuard<'a, Cache<M>>,
}

impl<M: Magnitude> Cursor<'_, M> {
    fn fill(&mut self, i: usize) -> Result<bool> {
        while self.cache.points.len() <= i {
            if self.cache.exhausted {
                return Ok(false);
            }
            if self.cache.points.len() >= self.set.budget {
                return Err(Error::BudgetExhausted { budget: self.set.budget });
            }
            match self.cache.source.next() {
                Some(Ok(x)) => {
                    debug_assert!(self.cache.points.last().is_none_or(|l| *l > x));
                    self.cache.points.push(x);
                }
                Some(Err(e)) => return Err(e),
                None => self.cache.exhausted = true,
            }
        }
        Ok(true)
    }

    /// The `i`-th largest positive point.
    pub fn get(&mut self, i: usize) -> Result<Option<&M>> {
        Ok(if self.fill(i)? { Some(&self.cache.points[i]) } else { None })
    }

    /// Index of the first point `< h`, `None` if every point is `>= h`.
    pub fn index_below(&mut self, h: &M) -> Result<Option<usize>> {
        loop {
            let pts = &self.cache.points;
            if pts.last().is_some_and(|l| l < h) {
                return Ok(Some(pts.partition_point(|x| x >= h)));
            }
            let n = pts.len();
            if !self.fill(n)? {
                return Ok(None);
            }
        }
    }

    /// Index of the first point `<= h`.
    pub fn index_at_or_below(&mut self, h: &M) -> Result<Option<usize>> {
        loop {
            let pts = &self.cache.points;
            if pts.last().is_some_and(|l| l <= h) {
                return Ok(Some(pts.partition_point(|x| x > h)));
            }
            let n = pts.len();
            if !self.fill(n)? {
                return Ok(None);
            }
        }
    }

    /// Whether `x` is a point of the set (0 always is).
    pub fn contains(&mut self, x: &M) -> Result<bool> {
        if x.is_zero() {
            return Ok(true);
        }
        Ok(match self.index_at_or_below(x)? {
            Some(i) => self.get(i)? == Some(x),
            None => false,
        })
    }

    /// Enumerated length, and whether enumeration finished.
    pub fn known(&self) -> (usize, bool) {
        (self.cache.points.len(), self.cache.exhausted)
    }
}

impl<M: Magnitude> SetHandle<M> {
    fn new(spec: Option<SetSpec>, monotone_gaps: bool, source: Source<M>) -> Self {
        SetHandle {
            spec,
            budget: DEFAULT_BUDGET,
            monotone_gaps,
            cache: Mutex::new(Cache { points: Vec::new(), source, exhausted: false }),
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn spec(&self) -> Option<&SetSpec> {
        self.spec.as_ref()
    }

    /// Whether consecutive gaps `x_i − x_{i+1}` are known to be nonincreasing.
    pub fn monotone_gaps(&self) -> bool {
        self.monotone_gaps
    }

    pub fn cursor(&self) -> Cursor<'_, M> {
        Cursor { set: self, cache: self.cache.lock().unwrap_or_else(|p| p.into_inner()) }
    }

    pub fn point(&self, i: usize) -> Result<Option<M>> {
        Ok(self.cursor().get(i)?.cloned())
    }

    /// Positive points in `[lo, hi]`, largest first.
    pub fn points_in(&self, lo: &M, hi: &M) -> Result<Vec<M>> {
        let mut c = self.cursor();
        let mut out = Vec::new();
        let Some(mut i) = c.index_at_or_below(hi)? else { return Ok(out) };
        while let Some(x) = c.get(i)? {
            if x < lo {
                break;
            }
            out.push(x.clone());
            i += 1;
        }
        Ok(out)
    }

    /// Finite set from arbitrary points; zeros dropped, duplicates merged.
    pub fn explicit(points: Vec<M>) -> Self {
        let mut pts: Vec<M> = points.into_iter().filter(|x| !x.is_zero()).collect();
        pts.sort_unstable_by(|a, b| b.cmp(a));
        pts.dedup();
        Self::new(None, false, Box::new(pts.into_iter().map(Ok)))
    }

    /// `{μ(e) : e ∈ set}`.
    pub fn image(mu: Arc<ScalingFunction<M>>, set: Arc<IntegerSet>) -> Self {
        let monotone = mu.convex_closed_form()
            && matches!(set.spec(), Some(IntSpec::All | IntSpec::Arithmetic { .. }));
        let spec = set.spec().map(|s| SetSpec::Image { mu: mu.spec().clone(), set: s.clone() });
        let mut i = 0usize;
        let source = std::iter::from_fn(move || {
            let e = match set.element(i) {
                Ok(Some(e)) => e,
                Ok(None) => return None,
                Err(err) => return Some(Err(err)),
            };
            i += 1;
            Some(mu.eval(e))
        });
        Self::new(spec, monotone, Box::new(source))
    }

    /// Union of several sets, merged lazily.
    pub fn union(parts: Vec<Arc<SetHandle<M>>>) -> Self {
        let spec = parts
            .iter()
            .map(|p| p.spec.clone())
            .collect::<Option<Vec<_>>>()
            .map(|sets| SetSpec::Union { sets });
        let mut idx = vec![0usize; parts.len()];
        let source = std::iter::from_fn(move || {
            let mut best: Option<M> = None;
            for (p, &i) in parts.iter().zip(&idx) {
                match p.point(i) {
                    Ok(Some(x)) => {
                        if best.as_ref().is_none_or(|b| x > *b) {
                            best = Some(x);
                        }
                    }
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
            }
            let best = best?;
            for (p, i) in parts.iter().zip(idx.iter_mut()) {
                if let Ok(Some(x)) = p.point(*i) {
                    if x == best {
                        *i += 1;
                    }
                }
            }
            Some(Ok(best))
        });
        Self::new(spec, false, Box::new(source))
    }

    /// `{c·x : x ∈ set}` for `c > 0`.
    pub fn scaled(c: M, inner: Arc<SetHandle<M>>) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::OutOfRange("scale factor must be positive".into()));
        }
        let monotone = inner.monotone_gaps;
        let spec = inner.spec.clone().map(|s| SetSpec::Scaled {
            c: crate::spec::Lit::Str(c.render()),
            set: Box::new(s),
        });
        let mut i = 0usize;
        let source = std::iter::from_fn(move || match inner.point(i) {
            Ok(Some(x)) => {
                i += 1;
                Some(Ok(c.mul(&x)))
            }
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        });
        Ok(Self::new(spec, monotone, Box::new(source)))
    }

    pub fn from_spec(spec: &SetSpec) -> Result<Self> {
        let mu = |m: MuSpec| ScalingFunction::<M>::from_spec(&m).map(Arc::new);
        let mut out = match spec {
            SetSpec::Geometric { q } => {
                let r = q.rational()?;
                if !(r.is_positive() && r < num_rational::BigRational::one()) {
                    return Err(Error::OutOfRange("geometric ratio must lie in (0, 1)".into()));
                }
                let q = M::from_rational(&r)?;
                let mut cur = M::one();
                let source = std::iter::from_fn(move || {
                    let x = cur.clone();
                    cur = cur.mul(&q);
                    Some(Ok(x))
                });
                Self::new(None, true, Box::new(source))
            }
            SetSpec::Power { p } => {
                Self::image(mu(MuSpec::Power { p: p.clone() })?, Arc::new(IntegerSet::all()))
            }
            SetSpec::Supergeometric => {
                Self::image(mu(MuSpec::Supergeometric)?, Arc::new(IntegerSet::all()))
            }
            SetSpec::Factorial => {
                Self::image(mu(MuSpec::ReciprocalFactorial)?, Arc::new(IntegerSet::all()))
            }
            SetSpec::PrimeReciprocal => Self::image(
                mu(MuSpec::Power { p: 1.into() })?,
                Arc::new(IntegerSet::from_spec(&IntSpec::Primes)?),
            ),
            SetSpec::Image { mu: m, set } => {
                Self::image(mu(m.clone())?, Arc::new(IntegerSet::from_spec(set)?))
            }
            SetSpec::Union { sets } => {
                let parts =
                    sets.iter().map(|s| Self::from_spec(s).map(Arc::new)).collect::<Result<_>>()?;
                Self::union(parts)
            }
            SetSpec::Explicit { points } => {
                let mut pts = Vec::with_capacity(points.len());
                for p in points {
                    let r = p.rational()?;
                    if r.is_negative() {
                        return Err(Error::OutOfRange("points must be nonnegative".into()));
                    }
                    pts.push(M::from_rational(&r)?);
                }
                Self::explicit(pts)
            }
            SetSpec::Trivial => Self::new(None, true, Box::new(std::iter::empty())),
            SetSpec::Dense { per_octave } => {
                let n = u64::from(*per_octave);
                if n == 0 {
                    return Err(Error::OutOfRange("per_octave must be at least 1".into()));
                }
                let (mut j, mut i) = (0i64, n - 1);
                let source = std::iter::from_fn(move || {
                    let x = M::ratio(n + i, n).mul(&M::pow2(-j));
                    if i == 0 {
                        i = n - 1;
                        j += 1;
                    } else {
                        i -= 1;
                    }
                    Some(Ok(x))
                });
                Self::new(None, true, Box::new(source))
            }
            SetSpec::Scaled { c, set } => {
                let r = c.rational()?;
                if !r.is_positive() {
                    return Err(Error::OutOfRange("scale factor must be positive".into()));
                }
                Self::scaled(M::from_rational(&r)?, Arc::new(Self::from_spec(set)?))?
            }
            SetSpec::GeometricPerturbed { q } => {
                let r = q.rational()?;
                if !(r.is_positive() && r < num_rational::BigRational::one()) {
                    return Err(Error::OutOfRange("geometric ratio must lie in (0, 1)".into()));
                }
                let q = M::from_rational(&r)?;
                let mut k = 1u64;
                let mut qk = q.clone();
                let source = std::iter::from_fn(move || {
                    let x = qk.mul(&M::ratio(k + 1, k));
                    k += 1;
                    qk = qk.mul(&q);
                    Some(Ok(x))
                });
                Self::new(None, false, Box::new(source))
            }
        };
        out.spec = Some(spec.clone());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{parse_rational, Exact, Log2};

    fn q(s: &str) -> Exact {
        Exact(parse_rational(s).unwrap())
    }

    fn set(json: &str) -> SetHandle<Exact> {
        SetHandle::from_spec(&SetSpec::from_json(json).unwrap()).unwrap()
    }

    fn first(s: &SetHandle<Exact>, n: usize) -> Vec<Exact> {
        (0..n).map(|i| s.point(i).unwrap().unwrap()).collect()
    }

    #[test]
    fn enumerates_in_decreasing_order() {
        let g = set(r#"{"kind":"geometric","q":"1/3"}"#);
        assert_eq!(first(&g, 3), vec![q("1"), q("1/3"), q("1/9")]);
        let d = set(r#"{"kind":"dense","per_octave":2}"#);
        assert_eq!(first(&d, 4), vec![q("3/2"), q("1"), q("3/4"), q("1/2")]);
        let p = set(r#"{"kind":"prime_reciprocal"}"#);
        assert_eq!(first(&p, 3), vec![q("1/2"), q("1/3"), q("1/5")]);
        let gp = set(r#"{"kind":"geometric_perturbed","q":"1/2"}"#);
        assert_eq!(first(&gp, 2), vec![q("1"), q("3/8")]);
    }

    #[test]
    fn union_merges_and_dedups() {
        let u = set(
            r#"{"kind":"union","sets":[{"kind":"geometric","q":"1/2"},{"kind":"geometric","q":"1/4"}]}"#,
        );
        assert_eq!(first(&u, 4), vec![q("1"), q("1/2"), q("1/4"), q("1/8")]);
        assert!(!u.monotone_gaps());
    }

    #[test]
    fn explicit_and_trivial() {
        let e = set(r#"{"kind":"explicit","points":["1/2",0,1,"1/2"]}"#);
        assert_eq!(first(&e, 2), vec![q("1"), q("1/2")]);
        assert_eq!(e.point(2).unwrap(), None);
        let t = set(r#"{"kind":"trivial"}"#);
        assert_eq!(t.point(0).unwrap(), None);
        assert!(t.cursor().contains(&q("0")).unwrap());
    }

    #[test]
    fn cursor_queries() {
        let g = set(r#"{"kind":"geometric","q":"1/2"}"#);
        let mut c = g.cursor();
        assert_eq!(c.index_below(&q("1/2")).unwrap(), Some(2));
        assert_eq!(c.index_at_or_below(&q("1/2")).unwrap(), Some(1));
        assert!(c.contains(&q("1/8")).unwrap());
        assert!(!c.contains(&q("3/8")).unwrap());
    }

    #[test]
    fn budget_and_scaling() {
        let g = set(r#"{"kind":"power","p":1}"#).with_budget(5);
        assert_eq!(g.point(5), Err(Error::BudgetExhausted { budget: 5 }));
        let s = set(r#"{"kind":"scaled","c":"3","set":{"kind":"geometric","q":"1/2"}}"#);
        assert_eq!(first(&s, 2), vec![q("3"), q("3/2")]);
        assert!(s.monotone_gaps());
    }

    #[test]
    fn log_mode_supergeometric_goes_deep() {
        let s: SetHandle<Log2> = SetHandle::from_spec(&SetSpec::Supergeometric).unwrap();
        assert_eq!(s.point(99).unwrap().unwrap().exponent(), -(2f64.powi(100)));
        let e: SetHandle<Exact> = SetHandle::from_spec(&SetSpec::Supergeometric).unwrap();
        assert!(matches!(e.point(30), Err(Error::Unrepresentable(_))));
    }
}
