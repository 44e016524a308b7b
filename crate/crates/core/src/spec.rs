//! JSON descriptions of point sets, integer sets and scaling functions.
//!
//! Every document is an object with a `"kind"` key. Rationals are written as
//! strings `"p/q"` (plain integers and decimals are accepted too). Scaling
//! functions nest under `"mu"`, integer sets under `"set"`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::parse_rational;

/// A rational literal: JSON string `"p/q"` or a JSON number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lit {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Lit {
    pub fn rational(&self) -> Result<BigRational> {
        match self {
            Lit::Int(i) => Ok(BigRational::from_integer((*i).into())),
            Lit::Float(x) => parse_rational(&x.to_string()),
            Lit::Str(s) => parse_rational(s),
        }
    }
}

impl From<&str> for Lit {
    fn from(s: &str) -> Self {
        Lit::Str(s.to_string())
    }
}

impl From<i64> for Lit {
    fn from(i: i64) -> Self {
        Lit::Int(i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// `{1, q, q², …}`
    Geometric { q: Lit },
    /// `{n^(-p) : n ≥ 1}`
    Power { p: Lit },
    /// `{2^(-2^n) : n ≥ 1}`
    Supergeometric,
    /// `{1/n! : n ≥ 1}`
    Factorial,
    /// `{1/p : p prime}`
    PrimeReciprocal,
    /// `{μ(e) : e ∈ set}`
    Image { mu: MuSpec, set: IntSpec },
    Union { sets: Vec<SetSpec> },
    Explicit { points: Vec<Lit> },
    /// `{0}`; the positive part is empty.
    #[serde(alias = "zero", alias = "empty")]
    Trivial,
    /// `{(1 + i/N)·2^(-j) : 0 ≤ i < N, j ≥ 0}`, a log-uniform grid that is
    /// relatively dense at every scale.
    Dense { per_octave: u32 },
    /// `{c·x : x ∈ set}`
    Scaled { c: Lit, set: Box<SetSpec> },
    /// `{q^k (1 + 1/k) : k ≥ 1}`
    GeometricPerturbed { q: Lit },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntSpec {
    All,
    /// `{a, a+d, a+2d, …}`
    Arithmetic { a: u64, d: u64 },
    Explicit { values: Vec<u64> },
    /// `x₀ = start`, `x_{k+1} = mul·x_k + add`
    Recurrence { start: u64, mul: u64, add: u64 },
    Primes,
    /// `ℕ \ set`
    Complement { set: Box<IntSpec> },
    /// Local b-file: lines `index value`, `#` comments.
    Bfile { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuSpec {
    /// `μ(n) = q^n`
    Geometric { q: Lit },
    /// `μ(n) = n^(-p)`
    Power { p: Lit },
    /// `μ(n) = 2^(-2^n)`
    Supergeometric,
    /// `μ(n) = 1/n!`
    ReciprocalFactorial,
    /// `μ(n) = values[n-1]`
    Tabulated { values: Vec<Lit> },
    /// `μ(n) = c·mu(n)`
    Scaled { c: Lit, mu: Box<MuSpec> },
}

fn map_serde(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("unknown variant `") {
        if let Some(end) = rest.find('`') {
            return Error::UnknownKind(rest[..end].to_string());
        }
    }
    Error::Malformed(msg)
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T> {
    if !v.is_object() {
        return Err(Error::Malformed("expected a JSON object".into()));
    }
    match v.get("kind") {
        Some(Value::String(_)) => {}
        _ => return Err(Error::Malformed("missing string field `kind`".into())),
    }
    serde_json::from_value(v).map_err(map_serde)
}

impl SetSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_value(serde_json::from_str(text).map_err(map_serde)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// `{μ(e) : e ∈ ℕ}` when this describes the image of all naturals.
    pub fn image_of_all(&self) -> Option<&MuSpec> {
        match self {
            SetSpec::Image { mu, set: IntSpec::All } => Some(mu),
            _ => None,
        }
    }
}

impl IntSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_value(serde_json::from_str(text).map_err(map_serde)?)
    }

    /// JSON document, or one of `all`, `primes`, `evens`, `odds`, `powers2`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return Self::from_json(t);
        }
        Ok(match t {
            "all" => IntSpec::All,
            "primes" => IntSpec::Primes,
            "evens" => IntSpec::Arithmetic { a: 2, d: 2 },
            "odds" => IntSpec::Arithmetic { a: 1, d: 2 },
            "powers2" => IntSpec::Recurrence { start: 1, mul: 2, add: 0 },
            other => return Err(Error::UnknownKind(other.to_string())),
        })
    }
}

impl MuSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_value(serde_json::from_str(text).map_err(map_serde)?)
    }

    /// JSON document, or `geometric:<q>`, `power:<p>`, `supergeometric`, `factorial`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return Self::from_json(t);
        }
        let (name, arg) = match t.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (t, None),
        };
        let need = |a: Option<&str>| {
            a.map(Lit::from)
                .ok_or_else(|| Error::Malformed(format!("`{name}` needs a parameter")))
        };
        Ok(match name {
            "geometric" => MuSpec::Geometric { q: need(arg)? },
            "power" => MuSpec::Power { p: need(arg)? },
            "supergeometric" => MuSpec::Supergeometric,
            "factorial" | "reciprocal_factorial" => MuSpec::ReciprocalFactorial,
            other => return Err(Error::UnknownKind(other.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let s = SetSpec::from_json(r#"{"kind":"geometric","q":"1/2"}"#).unwrap();
        assert_eq!(s, SetSpec::Geometric { q: "1/2".into() });
        let s = SetSpec::from_json(
            r#"{"kind":"image","mu":{"kind":"power","p":1},"set":{"kind":"primes"}}"#,
        )
        .unwrap();
        assert_eq!(
            s,
            SetSpec::Image { mu: MuSpec::Power { p: 1.into() }, set: IntSpec::Primes }
        );
        assert_eq!(SetSpec::from_json(r#"{"kind":"zero"}"#).unwrap(), SetSpec::Trivial);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert_eq!(
            SetSpec::from_json(r#"{"kind":"cantor"}"#),
            Err(Error::UnknownKind("cantor".into()))
        );
        assert!(matches!(SetSpec::from_json("[1,2]"), Err(Error::Malformed(_))));
        assert!(matches!(SetSpec::from_json(r#"{"q":"1/2"}"#), Err(Error::Malformed(_))));
        assert!(matches!(SetSpec::from_json(r#"{"kind":"geometric"}"#), Err(Error::Malformed(_))));
    }

    #[test]
    fn shorthands() {
        assert_eq!(IntSpec::parse("evens").unwrap(), IntSpec::Arithmetic { a: 2, d: 2 });
        assert_eq!(MuSpec::parse("geometric:1/2").unwrap(), MuSpec::Geometric { q: "1/2".into() });
        assert_eq!(MuSpec::parse("supergeometric").unwrap(), MuSpec::Supergeometric);
        assert!(MuSpec::parse("power").is_err());
        assert!(IntSpec::parse("squares").is_err());
    }

    #[test]
    fn literal_forms() {
        assert_eq!(Lit::Float(0.3).rational().unwrap(), parse_rational("3/10").unwrap());
        assert_eq!(Lit::Int(2).rational().unwrap(), parse_rational("2").unwrap());
    }
}
