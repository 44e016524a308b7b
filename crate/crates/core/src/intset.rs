//! Strictly increasing subsets of ℕ = {1, 2, …}, finite or lazily infinite.

use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Error, Result};
use crate::spec::IntSpec;

/// Default cap on materialized elements per set.
pub const DEFAULT_INT_BUDGET: usize = 1 << 22;

type Source = Box<dyn Iterator<Item = Result<u64>> + Send>;

struct Cache {
    elems: Vec<u64>,
    source: Source,
    exhausted: bool,
}

/// A lazily enumerated `E ⊆ ℕ` with memoized prefix.
pub struct IntegerSet {
    spec: Option<IntSpec>,
    /// Membership is only known on `[1, horizon]` for truncated sets.
    horizon: Option<u64>,
    budget: usize,
    cache: Mutex<Cache>,
}

impl fmt::Debug for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegerSet")
            .field("spec", &self.spec)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl IntegerSet {
    fn with_source(spec: Option<IntSpec>, horizon: Option<u64>, source: Source) -> Self {
        IntegerSet {
            spec,
            horizon,
            budget: DEFAULT_INT_BUDGET,
            cache: Mutex::new(Cache { elems: Vec::new(), source, exhausted: false }),
        }
    }

    pub fn all() -> Self {
        Self::from_spec(&IntSpec::All).expect("ℕ is valid")
    }

    pub fn explicit(values: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut v: Vec<u64> = values.into_iter().collect();
        if v.contains(&0) {
            return Err(Error::OutOfRange("integer sets live in {1, 2, …}".into()));
        }
        v.sort_unstable();
        v.dedup();
        let spec = IntSpec::Explicit { values: v.clone() };
        Ok(Self::with_source(Some(spec), None, Box::new(v.into_iter().map(Ok))))
    }

    /// `E ∩ [1, horizon]`, with every query beyond `horizon` reported as unknown.
    pub fn truncated(values: impl IntoIterator<Item = u64>, horizon: u64) -> Result<Self> {
        let mut v: Vec<u64> = values.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.first() == Some(&0) || v.last().is_some_and(|&l| l > horizon) {
            return Err(Error::OutOfRange(format!("values must lie in [1, {horizon}]")));
        }
        Ok(Self::with_source(None, Some(horizon), Box::new(v.into_iter().map(Ok))))
    }

    pub fn from_spec(spec: &IntSpec) -> Result<Self> {
        let source: Source = match spec {
            IntSpec::All => Box::new((1u64..).map(Ok)),
            IntSpec::Arithmetic { a, d } => {
                if *a == 0 || *d == 0 {
                    return Err(Error::OutOfRange("arithmetic needs a ≥ 1 and d ≥ 1".into()));
                }
                let (a, d) = (*a, *d);
                Box::new((0u64..).map(move |k| {
                    k.checked_mul(d)
                        .and_then(|x| x.checked_add(a))
                        .ok_or_else(|| Error::Unrepresentable("arithmetic term overflows u64".into()))
                }))
            }
            IntSpec::Explicit { values } => return Self::explicit(values.iter().copied()),
            IntSpec::Recurrence { start, mul, add } => {
                let (start, mul, add) = (*start, *mul, *add);
                let grows = mul
                    .checked_mul(start)
                    .and_then(|x| x.checked_add(add))
                    .is_some_and(|next| next > start);
                if start == 0 || mul == 0 || !grows {
                    return Err(Error::OutOfRange(
                        "recurrence must start at ≥ 1 and be strictly increasing".into(),
                    ));
                }
                let mut cur = Some(start);
                Box::new(std::iter::from_fn(move || {
                    let x = cur?;
                    cur = x.checked_mul(mul).and_then(|y| y.checked_add(add));
                    Some(Ok(x))
                })
                .chain(std::iter::once(Err(Error::Unrepresentable(
                    "recurrence term overflows u64".into(),
                )))))
            }
            IntSpec::Primes => Box::new(Primes::default().map(Ok)),
            IntSpec::Complement { set } => {
                let inner = Arc::new(IntegerSet::from_spec(set)?);
                let cap = DEFAULT_INT_BUDGET as u64;
                let mut n = 0u64;
                Box::new(std::iter::from_fn(move || {
                    let mut skipped = 0u64;
                    loop {
                        n += 1;
                        match inner.contains(n) {
                            Ok(false) => return Some(Ok(n)),
                            Ok(true) => {}
                            Err(e) => return Some(Err(e)),
                        }
                        skipped += 1;
                        if skipped > cap {
                            return Some(Err(Error::BudgetExhausted { budget: cap as usize }));
                        }
                    }
                }))
            }
            IntSpec::Bfile { path } => {
                let text = std::fs::read_to_string(path)?;
                let values = parse_bfile(&text)?;
                return Ok(Self::with_source(
                    Some(spec.clone()),
                    None,
                    Box::new(values.into_iter().map(Ok)),
                ));
            }
        };
        Ok(Self::with_source(Some(spec.clone()), None, source))
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn spec(&self) -> Option<&IntSpec> {
        self.spec.as_ref()
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    fn lock(&self) -> MutexGuard<'_, Cache> {
        self.cache.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Extends the cache by one element; `Ok(false)` once the source is finished.
    fn pull(&self, c: &mut Cache) -> Result<bool> {
        if c.exhausted {
            return Ok(false);
        }
        if c.elems.len() >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        match c.source.next() {
            Some(Ok(x)) => {
                debug_assert!(c.elems.last().is_none_or(|&l| l < x));
                c.elems.push(x);
                Ok(true)
            }
            Some(Err(e)) => Err(e),
            None => {
                c.exhausted = true;
                Ok(false)
            }
        }
    }

    fn beyond_horizon(&self, at: u64) -> Error {
        Error::Horizon { horizon: self.horizon.unwrap_or(0), at }
    }

    /// The `i`-th element (0-based), `None` past the end of a finite set.
    pub fn element(&self, i: usize) -> Result<Option<u64>> {
        let mut c = self.lock();
        while c.elems.len() <= i {
            if !self.pull(&mut c)? {
                if let Some(h) = self.horizon {
                    return Err(self.beyond_horizon(h + 1));
                }
                return Ok(None);
            }
        }
        Ok(Some(c.elems[i]))
    }

    /// Index of the first element `>= m`.
    pub fn first_index_ge(&self, m: u64) -> Result<Option<usize>> {
        let mut c = self.lock();
        loop {
            if c.elems.last().is_some_and(|&l| l >= m) {
                return Ok(Some(c.elems.partition_point(|&x| x < m)));
            }
            if !self.pull(&mut c)? {
                return match self.horizon {
                    Some(h) if m > h => Err(self.beyond_horizon(m)),
                    Some(_) => Err(self.beyond_horizon(m)),
                    None => Ok(None),
                };
            }
        }
    }

    pub fn contains(&self, m: u64) -> Result<bool> {
        if let Some(h) = self.horizon {
            if m > h {
                return Err(self.beyond_horizon(m));
            }
            let mut c = self.lock();
            while !c.exhausted && c.elems.last().is_none_or(|&l| l < m) {
                self.pull(&mut c)?;
            }
            return Ok(c.elems.binary_search(&m).is_ok());
        }
        match self.first_index_ge(m)? {
            Some(i) => Ok(self.element(i)? == Some(m)),
            None => Ok(false),
        }
    }

    /// `min{e ∈ E : e > m}`, `None` when no such element exists.
    pub fn next_after(&self, m: u64) -> Result<Option<u64>> {
        match self.first_index_ge(m + 1)? {
            Some(i) => self.element(i),
            None => Ok(None),
        }
    }

    /// Elements in `[lo, hi]`, or everything up to `hi` for finite sets.
    pub fn elements_in(&self, lo: u64, hi: u64) -> Result<Vec<u64>> {
        let known = |r: Result<Option<usize>>| match r {
            Err(Error::Horizon { horizon, .. }) if hi <= horizon => Ok(None),
            other => other,
        };
        let mut out = Vec::new();
        let Some(mut i) = known(self.first_index_ge(lo))? else { return Ok(out) };
        loop {
            let e = match self.element(i) {
                Ok(Some(e)) => e,
                Ok(None) => break,
                Err(Error::Horizon { horizon, .. }) if hi <= horizon => break,
                Err(err) => return Err(err),
            };
            if e > hi {
                break;
            }
            out.push(e);
            i += 1;
        }
        Ok(out)
    }

    /// True once the whole set has been enumerated and it turned out finite.
    pub fn known_finite(&self) -> bool {
        let c = self.lock();
        c.exhausted && self.horizon.is_none()
    }

    /// Probes finiteness by trying to enumerate up to `probe` elements.
    pub fn is_finite(&self, probe: usize) -> Result<bool> {
        match self.element(probe) {
            Ok(x) => Ok(x.is_none()),
            Err(Error::BudgetExhausted { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

#[derive(Default)]
struct Primes {
    found: Vec<u64>,
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let mut n = match self.found.last() {
            None => 2,
            Some(2) => 3,
            Some(&p) => p + 2,
        };
        loop {
            let is_prime = self
                .found
                .iter()
                .take_while(|&&p| p * p <= n)
                .all(|&p| n % p != 0);
            if is_prime {
                self.found.push(n);
                return Some(n);
            }
            n += if n == 2 { 1 } else { 2 };
        }
    }
}

/// Parses an OEIS-style b-file into a strictly increasing positive sequence.
pub fn parse_bfile(text: &str) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (_, value) = match (fields.next(), fields.next()) {
            (Some(i), Some(v)) => (i, v),
            _ => return Err(Error::Malformed(format!("b-file line {}: expected `n a(n)`", lineno + 1))),
        };
        let v: u64 = value
            .parse()
            .map_err(|_| Error::Malformed(format!("b-file line {}: bad value `{value}`", lineno + 1)))?;
        if v == 0 || out.last().is_some_and(|&l| l >= v) {
            return Err(Error::OutOfRange(format!(
                "b-file line {}: values must be positive and strictly increasing",
                lineno + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}
