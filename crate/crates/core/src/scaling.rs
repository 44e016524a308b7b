//! Scaling functions `μ : ℕ → (0, ∞)`, strictly decreasing to 0.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::{Log2, Magnitude, Mode};
use crate::spec::MuSpec;

/// Largest `n` for which `2^(-2^n)` is materialized as an exact rational.
pub const EXACT_SUPERGEOMETRIC_MAX: u64 = 24;
/// Largest `n` for which `2^(-2^n)` has a finite f64 base-2 exponent.
pub const LOG_SUPERGEOMETRIC_MAX: u64 = 1023;

#[derive(Debug)]
enum Kind<M> {
    Geometric(M),
    /// Exponent as rational (exact mode requires an integer) and as f64.
    Power(BigRational, f64),
    Supergeometric,
    ReciprocalFactorial(Mutex<Vec<M>>),
    Tabulated(Vec<M>),
    Scaled(M, Box<ScalingFunction<M>>),
}

#[derive(Debug)]
pub struct ScalingFunction<M> {
    spec: MuSpec,
    kind: Kind<M>,
}

fn positive(r: &BigRational, what: &str) -> Result<()> {
    if r.is_positive() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{what} must be positive")))
    }
}

impl<M: Magnitude> ScalingFunction<M> {
    pub fn from_spec(spec: &MuSpec) -> Result<Self> {
        let kind = match spec {
            MuSpec::Geometric { q } => {
                let q = q.rational()?;
                if !(q.is_positive() && q < BigRational::one()) {
                    return Err(Error::OutOfRange("geometric ratio must lie in (0, 1)".into()));
                }
                Kind::Geometric(M::from_rational(&q)?)
            }
            MuSpec::Power { p } => {
                let p = p.rational()?;
                positive(&p, "power exponent")?;
                if M::MODE == Mode::Exact && !p.is_integer() {
                    return Err(Error::Unrepresentable(
                        "non-integer power exponent needs log-domain mode".into(),
                    ));
                }
                let pf = crate::scalar::rational_to_f64(&p);
                Kind::Power(p, pf)
            }
            MuSpec::Supergeometric => Kind::Supergeometric,
            MuSpec::ReciprocalFactorial => Kind::ReciprocalFactorial(Mutex::new(vec![M::one()])),
            MuSpec::Tabulated { values } => {
                let mut out: Vec<M> = Vec::with_capacity(values.len());
                for v in values {
                    let r = v.rational()?;
                    positive(&r, "tabulated value")?;
                    let m = M::from_rational(&r)?;
                    if out.last().is_some_and(|l| *l <= m) {
                        return Err(Error::OutOfRange("tabulated values must strictly decrease".into()));
                    }
                    out.push(m);
                }
                Kind::Tabulated(out)
            }
            MuSpec::Scaled { c, mu } => {
                let c = c.rational()?;
                positive(&c, "scale factor")?;
                Kind::Scaled(M::from_rational(&c)?, Box::new(Self::from_spec(mu)?))
            }
        };
        Ok(ScalingFunction { spec: spec.clone(), kind })
    }

    pub fn spec(&self) -> &MuSpec {
        &self.spec
    }

    /// `μ(n)` for `n ≥ 1`.
    pub fn eval(&self, n: u64) -> Result<M> {
        if n == 0 {
            return Err(Error::OutOfRange("scaling functions are defined on n ≥ 1".into()));
        }
        match &self.kind {
            Kind::Geometric(q) => Ok(q.powu(n)),
            Kind::Power(p, pf) => match M::MODE {
                Mode::Exact => {
                    let e = p.to_integer().to_u64().ok_or_else(|| {
                        Error::Unrepresentable("power exponent too large".into())
                    })?;
                    Ok(M::ratio(1, n).powu(e))
                }
                Mode::LogDomain => {
                    M::from_scalar(&Log2::from_log2(-pf * (n as f64).log2()).to_scalar())
                }
            },
            Kind::Supergeometric => {
                let limit = match M::MODE {
                    Mode::Exact => EXACT_SUPERGEOMETRIC_MAX,
                    Mode::LogDomain => LOG_SUPERGEOMETRIC_MAX,
                };
                if n > limit {
                    return Err(Error::Unrepresentable(format!(
                        "2^(-2^{n}) exceeds the {} range (n ≤ {limit})",
                        match M::MODE {
                            Mode::Exact => "exact",
                            Mode::LogDomain => "log-domain",
                        }
                    )));
                }
                match M::MODE {
                    Mode::Exact => Ok(M::pow2(-(1i64 << n))),
                    Mode::LogDomain => {
                        M::from_scalar(&Log2::from_log2(-(2f64.powi(n as i32))).to_scalar())
                    }
                }
            }
            Kind::ReciprocalFactorial(cache) => {
                let mut c = cache.lock().unwrap_or_else(|p| p.into_inner());
                while (c.len() as u64) < n {
                    let k = c.len() as u64 + 1;
                    let next = c[c.len() - 1].div(&M::ratio(k, 1));
                    c.push(next);
                }
                Ok(c[n as usize - 1].clone())
            }
            Kind::Tabulated(values) => {
                values.get(n as usize - 1).cloned().ok_or(Error::TableExhausted(n))
            }
            Kind::Scaled(c, inner) => Ok(c.mul(&inner.eval(n)?)),
        }
    }

    /// Number of defined values for tabulated functions.
    pub fn table_len(&self) -> Option<u64> {
        match &self.kind {
            Kind::Tabulated(v) => Some(v.len() as u64),
            Kind::Scaled(_, inner) => inner.table_len(),
            _ => None,
        }
    }

    /// Whether the closed form has nonincreasing first differences
    /// `μ(n) − μ(n+1)` for every `n ≥ 1`.
    pub fn convex_closed_form(&self) -> bool {
        match &self.kind {
            Kind::Tabulated(_) => false,
            Kind::Scaled(_, inner) => inner.convex_closed_form(),
            _ => true,
        }
    }

    /// Largest `n` for which `eval` can succeed in this mode, if bounded.
    pub fn max_argument(&self) -> Option<u64> {
        match &self.kind {
            Kind::Supergeometric => Some(match M::MODE {
                Mode::Exact => EXACT_SUPERGEOMETRIC_MAX,
                Mode::LogDomain => LOG_SUPERGEOMETRIC_MAX,
            }),
            Kind::Tabulated(v) => Some(v.len() as u64),
            Kind::Scaled(_, inner) => inner.max_argument(),
            _ => None,
        }
    }
}

/// Exact `n!` for tests and small arguments.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}
