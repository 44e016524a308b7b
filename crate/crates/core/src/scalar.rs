//! Nonnegative magnitudes in two interchangeable representations.
//!
//! Every analysis routine is generic over [`Magnitude`]. [`Exact`] keeps
//! arbitrary-precision rationals in lowest terms; [`Log2`] stores the base-2
//! logarithm of a positive value so that doubly exponential scales such as
//! `2^(-2^n)` stay representable. Values of different modes never meet inside
//! one computation; the dynamically typed [`Scalar`] refuses cross-mode
//! comparison.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    LogDomain,
}

/// Arithmetic needed by the porosity engines. All values are `>= 0`.
pub trait Magnitude: Clone + Ord + fmt::Debug + Send + Sync + 'static {
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &BigRational) -> Result<Self>;
    fn ratio(numer: u64, denom: u64) -> Self;
    /// `2^e`
    fn pow2(e: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    /// `|self - other|`
    fn abs_diff(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Panics in debug builds when `other` is zero.
    fn div(&self, other: &Self) -> Self;
    fn powu(&self, n: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn log2(&self) -> f64;
    /// Exact binary expansion of a finite nonnegative float.
    fn from_f64(x: f64) -> Self;
    fn to_scalar(&self) -> Scalar;
    fn from_scalar(s: &Scalar) -> Result<Self>;

    fn render(&self) -> String {
        self.to_scalar().to_string()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

/// Exact nonnegative rational.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Exact(BigRational::new(numer.into(), denom.into()))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Magnitude for Exact {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Exact(BigRational::zero())
    }

    fn one() -> Self {
        Exact(BigRational::one())
    }

    fn from_rational(r: &BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::OutOfRange(format!("negative magnitude {r}")));
        }
        Ok(Exact(r.clone()))
    }

    fn ratio(numer: u64, denom: u64) -> Self {
        Exact(BigRational::new(numer.into(), denom.into()))
    }

    fn pow2(e: i64) -> Self {
        let p = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            Exact(BigRational::from_integer(p))
        } else {
            Exact(BigRational::new_raw(BigInt::one(), p))
        }
    }

    fn add(&self, other: &Self) -> Self {
        Exact(&self.0 + &other.0)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self.0 >= other.0 {
            Exact(&self.0 - &other.0)
        } else {
            Exact(&other.0 - &self.0)
        }
    }

    fn mul(&self, other: &Self) -> Self {
        Exact(&self.0 * &other.0)
    }

    fn div(&self, other: &Self) -> Self {
        debug_assert!(!other.0.is_zero(), "division by zero magnitude");
        Exact(&self.0 / &other.0)
    }

    fn powu(&self, n: u64) -> Self {
        let n = u32::try_from(n).expect("exponent fits in u32");
        // powers of coprime integers stay coprime
        Exact(BigRational::new_raw(
            self.0.numer().pow(n),
            self.0.denom().pow(n),
        ))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let (nm, ne) = split_big(self.0.numer().magnitude());
        let (dm, de) = split_big(self.0.denom().magnitude());
        let e = ne - de;
        if e > 2000 {
            return f64::INFINITY;
        }
        if e < -2000 {
            return 0.0;
        }
        (nm / dm) * 2f64.powi(e as i32)
    }

    fn log2(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        big_log2(self.0.numer().magnitude()) - big_log2(self.0.denom().magnitude())
    }

    fn from_f64(x: f64) -> Self {
        Exact(BigRational::from_float(x).expect("finite float"))
    }

    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.0.clone())
    }

    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Exact(r) => Exact::from_rational(r),
            Scalar::Log(_) => Err(Error::ModeMismatch),
        }
    }
}

/// Splits `x` into `(m, e)` with `x ≈ m · 2^e` and `m` comfortably inside f64 range.
fn split_big(x: &BigUint) -> (f64, i64) {
    let bits = x.bits() as i64;
    if bits <= 900 {
        (x.to_f64().unwrap_or(f64::INFINITY), 0)
    } else {
        let shift = bits - 64;
        ((x >> shift as usize).to_f64().unwrap_or(0.0), shift)
    }
}

fn big_log2(x: &BigUint) -> f64 {
    let (m, e) = split_big(x);
    m.log2() + e as f64
}

/// Positive magnitude stored as its base-2 logarithm. `-inf` marks exact zero.
#[derive(Clone, Copy, Debug)]
pub struct Log2(f64);

impl Log2 {
    pub fn from_log2(l: f64) -> Self {
        debug_assert!(!l.is_nan());
        Log2(l)
    }

    pub fn exponent(&self) -> f64 {
        self.0
    }
}

impl PartialEq for Log2 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Log2 {}

impl PartialOrd for Log2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Log2 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Magnitude for Log2 {
    const MODE: Mode = Mode::LogDomain;

    fn zero() -> Self {
        Log2(f64::NEG_INFINITY)
    }

    fn one() -> Self {
        Log2(0.0)
    }

    fn from_rational(r: &BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::OutOfRange(format!("negative magnitude {r}")));
        }
        Ok(Log2(Exact(r.clone()).log2()))
    }

    fn ratio(numer: u64, denom: u64) -> Self {
        if numer == 0 {
            return Self::zero();
        }
        Log2((numer as f64).log2() - (denom as f64).log2())
    }

    fn pow2(e: i64) -> Self {
        Log2(e as f64)
    }

    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        Log2(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return Log2(hi);
        }
        if hi == lo {
            return Self::zero();
        }
        let d = lo - hi;
        Log2(hi + (-(d * std::f64::consts::LN_2).exp_m1()).log2())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Log2(self.0 + other.0)
    }

    fn div(&self, other: &Self) -> Self {
        debug_assert!(!other.is_zero(), "division by zero magnitude");
        if self.is_zero() {
            return Self::zero();
        }
        Log2(self.0 - other.0)
    }

    fn powu(&self, n: u64) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.is_zero() {
            return Self::zero();
        }
        Log2(self.0 * n as f64)
    }

    fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    fn to_f64(&self) -> f64 {
        self.0.exp2()
    }

    fn log2(&self) -> f64 {
        self.0
    }

    fn from_f64(x: f64) -> Self {
        Log2(x.log2())
    }

    fn to_scalar(&self) -> Scalar {
        Scalar::Log(*self)
    }

    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Log(l) => Ok(*l),
            Scalar::Exact(_) => Err(Error::ModeMismatch),
        }
    }
}

/// A magnitude tagged with its mode, used at I/O boundaries.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Log(Log2),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Log(_) => Mode::LogDomain,
        }
    }

    pub fn try_cmp(&self, other: &Scalar) -> Result<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(a.cmp(b)),
            (Scalar::Log(a), Scalar::Log(b)) => Ok(a.cmp(b)),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => Exact(r.clone()).to_f64(),
            Scalar::Log(l) => l.to_f64(),
        }
    }

    /// Reinterprets the value in `mode`; exact to log is lossy, log to exact is refused.
    pub fn into_mode(self, mode: Mode) -> Result<Scalar> {
        match (self, mode) {
            (s @ Scalar::Exact(_), Mode::Exact) | (s @ Scalar::Log(_), Mode::LogDomain) => Ok(s),
            (Scalar::Exact(r), Mode::LogDomain) => Ok(Scalar::Log(Log2::from_rational(&r)?)),
            (Scalar::Log(_), Mode::Exact) => Err(Error::ModeMismatch),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Log(l) if l.is_zero() => write!(f, "0"),
            Scalar::Log(l) => write!(f, "log2:{}", l.0),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("log2:") {
            let l: f64 = rest
                .parse()
                .map_err(|_| Error::Malformed(format!("bad log2 literal `{s}`")))?;
            if l.is_nan() || l == f64::INFINITY {
                return Err(Error::Malformed(format!("bad log2 literal `{s}`")));
            }
            return Ok(Scalar::Log(Log2(l)));
        }
        let r = parse_rational(s)?;
        if r.is_negative() {
            return Err(Error::OutOfRange(format!("negative magnitude {s}")));
        }
        Ok(Scalar::Exact(r))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Malformed(format!("bad rational literal `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if negative {
            n = -n;
        }
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// Exact `f64` image of a rational, rounded only at the end.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let v = Exact(r.abs()).to_f64();
    if r.numer().sign() == Sign::Minus {
        -v
    } else {
        v
    }
}
