//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the analysis modules.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pow2(k: i64) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    if k >= 0 {
        num_traits::pow(two, k as usize)
    } else {
        num_traits::pow(two, (-k) as usize).recip()
    }
}

pub fn parse(s: &str) -> BigRational {
    match s.split_once('/') {
        Some((n, d)) => BigRational::new(n.trim().parse().unwrap(), d.trim().parse().unwrap()),
        None => BigRational::from_integer(s.trim().parse().unwrap()),
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // Rescale both parts when they overflow f64.
        let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
        let n = (x.numer() >> shift).to_f64().unwrap();
        let d = (x.denom() >> shift).to_f64().unwrap();
        n / d
    })
}

/// Largest gap of `(pts ∩ (0, h)) ∪ {0, h}`.
pub fn gap(pts: &[BigRational], h: &BigRational) -> BigRational {
    let mut v: Vec<&BigRational> = pts.iter().filter(|p| p.is_positive() && *p < h).collect();
    v.sort();
    let mut prev = BigRational::zero();
    let mut best = BigRational::zero();
    for p in v {
        best = best.max(p - &prev);
        prev = p.clone();
    }
    best.max(h - prev)
}

pub fn gap_f64(sorted: &[f64], h: f64) -> f64 {
    let mut prev = 0.0f64;
    let mut best = 0.0f64;
    for &p in sorted.iter().filter(|&&p| p > 0.0 && p < h) {
        best = best.max(p - prev);
        prev = p;
    }
    best.max(h - prev)
}

/// `sup Φ` and `inf Φ` over a uniform grid of `k` points in `(lo, hi]`.
pub fn grid_extrema(sorted: &[f64], lo: f64, hi: f64, k: usize) -> (f64, f64) {
    let step = (hi - lo) / k as f64;
    let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 1..=k {
        let h = lo + step * i as f64;
        let v = gap_f64(sorted, h) / h;
        sup = sup.max(v);
        inf = inf.min(v);
    }
    (sup, inf)
}

#[derive(Clone, Copy, Debug)]
pub enum Mu {
    Geometric(i64, i64),
    Power(u32),
    Supergeometric,
}

impl Mu {
    pub fn eval(self, n: u64) -> BigRational {
        match self {
            Mu::Geometric(a, b) => num_traits::pow(r(a, b), n as usize),
            Mu::Power(p) => num_traits::pow(r(1, n as i64), p as usize),
            Mu::Supergeometric => pow2(-(1i64 << n)),
        }
    }

    pub fn spec(self) -> String {
        match self {
            Mu::Geometric(a, b) => format!("geometric:{a}/{b}"),
            Mu::Power(p) => format!("power:{p}"),
            Mu::Supergeometric => "supergeometric".into(),
        }
    }
}

/// Largest `E`-free part of `(0, μ(n)]` read off the points `μ(e)`, `e > n`.
pub fn lambda_mu(values: &[u64], mu: Mu, n: u64) -> BigRational {
    let pts: Vec<BigRational> = values.iter().filter(|&&v| v > n).map(|&v| mu.eval(v)).collect();
    gap(&pts, &mu.eval(n))
}

/// `F(x, y) = |x − y| min / max²`.
pub fn f_pair(x: &BigRational, y: &BigRational) -> BigRational {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    if hi.is_zero() {
        return BigRational::zero();
    }
    (hi - lo) * lo / (hi * hi)
}

/// Sup of `F` over all pairs `x < y` of `pts` with `y ≤ cap`.
pub fn f_sup_all_pairs(pts: &[BigRational], cap: &BigRational) -> BigRational {
    let mut best = BigRational::zero();
    for y in pts.iter().filter(|y| *y <= cap) {
        for x in pts.iter().filter(|x| *x < y) {
            best = best.max(f_pair(x, y));
        }
    }
    best
}

/// `{m ≤ N : E meets [μ(m+1), μ(m−1)]}` with `μ(0) = ∞`, by direct search.
pub fn brute_m(pts: &[BigRational], mu: Mu, n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for m in 1..=n_max {
        let lo = mu.eval(m + 1);
        let hit = if m == 1 {
            pts.iter().any(|p| *p >= lo)
        } else {
            let hi = mu.eval(m - 1);
            pts.iter().any(|p| *p >= lo && *p <= hi)
        };
        if hit {
            out.push(m);
        }
    }
    out
}

pub fn one() -> BigRational {
    BigRational::one()
}
