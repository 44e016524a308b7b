//! Rescaled views `E/r_n` of a set near 0 and what survives as `r_n → 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimate::{Protocol, AGREEMENT};
use crate::porosity0;
use crate::scalar::Magnitude;
use crate::setkit::SetHandle;

/// Default merge distance for clustering rescaled points.
pub const DEFAULT_EPS: f64 = 1.0 / 4096.0;

/// A strictly decreasing positive sequence `r_0 > r_1 > …`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizingSequence<M> {
    pub terms: Vec<M>,
    pub label: String,
}

impl<M: Magnitude> NormalizingSequence<M> {
    pub fn explicit(terms: Vec<M>) -> Result<Self> {
        if terms.iter().any(Magnitude::is_zero) {
            return Err(Error::OutOfRange("normalizing terms must be positive".into()));
        }
        if terms.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::OutOfRange("normalizing terms must strictly decrease".into()));
        }
        Ok(NormalizingSequence { terms, label: "explicit".into() })
    }

    /// `q^n` for `n ∈ [start, start + len)`.
    pub fn geometric(q: &M, start: u64, len: usize) -> Result<Self> {
        if q.is_zero() || *q >= M::one() {
            return Err(Error::OutOfRange("ratio must lie in (0, 1)".into()));
        }
        let terms = (0..len as u64).map(|k| q.powu(start + k)).collect();
        Ok(NormalizingSequence { terms, label: format!("geometric({})", q.render()) })
    }

    /// The points of `E` at the given increasing indices.
    pub fn from_set_points(e: &SetHandle<M>, indices: &[usize]) -> Result<Self> {
        let mut terms = Vec::with_capacity(indices.len());
        for &i in indices {
            let x = e
                .point(i)?
                .ok_or_else(|| Error::OutOfRange(format!("set has no point at index {i}")))?;
            terms.push(x);
        }
        let mut s = Self::explicit(terms)?;
        s.label = "set_points".into();
        Ok(s)
    }

    /// Checks that every term lies in `ground`.
    pub fn constrained_to(self, ground: &SetHandle<M>) -> Result<Self> {
        let mut c = ground.cursor();
        for (n, r) in self.terms.iter().enumerate() {
            if !c.contains(r)? {
                return Err(Error::OutOfRange(format!("term {n} = {} is not in the ground set", r.render())));
            }
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotOptions<M> {
    /// Keep rescaled points `≤ cap`.
    pub cap: M,
    /// Rescaled points below `floor` are represented by 0.
    pub floor: M,
    pub max_points: usize,
}

impl<M: Magnitude> SnapshotOptions<M> {
    pub fn new(cap: M) -> Self {
        SnapshotOptions { cap, floor: M::pow2(-24), max_points: 100_000 }
    }
}

impl<M: Magnitude> Default for SnapshotOptions<M> {
    fn default() -> Self {
        Self::new(M::ratio(4, 1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<M> {
    pub r: M,
    /// Ascending, starting with 0.
    pub points: Vec<M>,
    /// `max_points` was reached before the floor.
    pub truncated: bool,
}

/// `{x/r : x ∈ E, floor ≤ x/r ≤ cap} ∪ {0}`.
pub fn snapshot<M: Magnitude>(e: &SetHandle<M>, r: &M, opts: &SnapshotOptions<M>) -> Result<Snapshot<M>> {
    if r.is_zero() {
        return Err(Error::OutOfRange("r must be positive".into()));
    }
    if opts.cap < M::one() {
        return Err(Error::OutOfRange("cap must be at least 1".into()));
    }
    let top = opts.cap.mul(r);
    let bottom = opts.floor.mul(r);
    let mut c = e.cursor();
    let mut pts = Vec::new();
    let mut truncated = false;
    if let Some(mut i) = c.index_at_or_below(&top)? {
        while let Some(x) = c.get(i)? {
            if *x < bottom {
                break;
            }
            if pts.len() >= opts.max_points {
                truncated = true;
                break;
            }
            pts.push(x.div(r));
            i += 1;
        }
    }
    pts.push(M::zero());
    pts.reverse();
    Ok(Snapshot { r: r.clone(), points: pts, truncated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub lo: f64,
    pub hi: f64,
    /// Number of tail snapshots with a point in the cluster.
    pub hits: usize,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSetEstimate {
    pub clusters: Vec<Cluster>,
    pub snapshots: usize,
    pub eps: f64,
}

impl LimitSetEstimate {
    pub fn stable(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.stable)
    }
}

/// Clusters the points of the last `tail` snapshots: an ascending sweep
/// merges a point into the current cluster when it is within `eps` of it.
pub fn limit_set<M: Magnitude>(
    e: &SetHandle<M>,
    seq: &NormalizingSequence<M>,
    opts: &SnapshotOptions<M>,
    tail: usize,
    eps: f64,
) -> Result<LimitSetEstimate> {
    let tail = tail.min(seq.len());
    if tail == 0 {
        return Err(Error::OutOfRange("need at least one snapshot".into()));
    }
    let mut items: Vec<(f64, usize)> = Vec::new();
    for (sid, r) in seq.terms[seq.len() - tail..].iter().enumerate() {
        let s = snapshot(e, r, opts)?;
        items.extend(s.points.iter().map(|p| (p.to_f64(), sid)));
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut clusters: Vec<(f64, f64, Vec<bool>)> = Vec::new();
    for (v, sid) in items {
        match clusters.last_mut() {
            Some((_, hi, seen)) if v - *hi < eps => {
                *hi = v;
                seen[sid] = true;
            }
            _ => {
                let mut seen = vec![false; tail];
                seen[sid] = true;
                clusters.push((v, v, seen));
            }
        }
    }
    let clusters = clusters
        .into_iter()
        .map(|(lo, hi, seen)| {
            let hits = seen.iter().filter(|&&s| s).count();
            Cluster { lo, hi, hits, stable: hits == tail }
        })
        .collect();
    Ok(LimitSetEstimate { clusters, snapshots: tail, eps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Avoidance<M> {
    pub avoided: bool,
    /// First index `n` and rescaled point inside the shrunken interval.
    pub violation: Option<(usize, M)>,
}

/// Whether no snapshot `E/r_n` meets `((1+δ)a, (1−δ)b)`, for every term of `seq`.
pub fn interval_avoided<M: Magnitude>(
    e: &SetHandle<M>,
    seq: &NormalizingSequence<M>,
    a: &M,
    b: &M,
    delta: &M,
) -> Result<Avoidance<M>> {
    if a >= b || *b > M::one() {
        return Err(Error::OutOfRange("need 0 ≤ a < b ≤ 1".into()));
    }
    if *delta >= M::one() {
        return Err(Error::OutOfRange("margin must be below 1".into()));
    }
    let lo = a.mul(&M::one().add(delta));
    let hi = b.mul(&M::one().abs_diff(delta));
    if lo >= hi {
        return Ok(Avoidance { avoided: true, violation: None });
    }
    let mut c = e.cursor();
    for (n, r) in seq.terms.iter().enumerate() {
        let top = hi.mul(r);
        if let Some(i) = c.index_below(&top)? {
            let x = c.get(i)?.expect("indexed point exists");
            if *x > lo.mul(r) {
                return Ok(Avoidance { avoided: false, violation: Some((n, x.div(r))) });
            }
        }
    }
    Ok(Avoidance { avoided: true, violation: None })
}

/// Longest `(a, b) ⊆ (0, 1)` with endpoints among cluster ends, `{0, 1}` and
/// optional grid points `k/grid`, avoided by every snapshot. Ties go to the
/// smallest `a`. `None` when no candidate passes.
pub fn max_avoided_interval<M: Magnitude>(
    e: &SetHandle<M>,
    seq: &NormalizingSequence<M>,
    tail: usize,
    eps: f64,
    grid: Option<u32>,
    delta: &M,
) -> Result<Option<(M, M)>> {
    let ls = limit_set(e, seq, &SnapshotOptions::new(M::one()), tail, eps)?;
    let mut ends: Vec<f64> = vec![0.0, 1.0];
    for c in &ls.clusters {
        ends.extend([c.lo, c.hi].into_iter().filter(|v| (0.0..=1.0).contains(v)));
    }
    if let Some(g) = grid.filter(|&g| g > 0) {
        ends.extend((1..g).map(|k| f64::from(k) / f64::from(g)));
    }
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (i, &a) in ends.iter().enumerate() {
        for &b in &ends[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs.sort_by(|x, y| (y.1 - y.0).total_cmp(&(x.1 - x.0)).then(x.0.total_cmp(&y.0)));
    for (a, b) in pairs {
        let (a, b) = (M::from_f64(a), M::from_f64(b));
        if interval_avoided(e, seq, &a, &b, delta)?.avoided {
            return Ok(Some((a, b)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PorosityWitness<M> {
    /// Maximizing scales `h_m`, one per selected window.
    pub sequence: NormalizingSequence<M>,
    /// Intersection of the rescaled witness gaps `(a_m/h_m, b_m/h_m)`.
    pub interval: (M, M),
    /// The last three rescaled gaps agree within tolerance.
    pub converged: bool,
    pub avoided: bool,
    pub windows: Vec<u32>,
}

/// Picks the windows whose sup of `Φ` is within `tol` of the upper porosity,
/// uses their maximizers as the normalizing sequence and rescales the gaps
/// realizing each maximum.
pub fn porosity_witness<M: Magnitude>(e: &SetHandle<M>, proto: &Protocol) -> Result<PorosityWitness<M>> {
    let prof = porosity0::profile(e, proto)?;
    let upper = prof.windows.iter().map(|(_, w)| w.sup.to_f64()).fold(f64::NEG_INFINITY, f64::max);
    let mut terms: Vec<M> = Vec::new();
    let mut gaps: Vec<(M, M)> = Vec::new();
    let mut windows = Vec::new();
    for (j, w) in &prof.windows {
        if upper - w.sup.to_f64() > proto.tol {
            continue;
        }
        if terms.last() == Some(&w.argmax) {
            continue;
        }
        gaps.push((w.witness.a.div(&w.argmax), w.witness.b.div(&w.argmax)));
        terms.push(w.argmax.clone());
        windows.push(*j);
    }
    let a = gaps.iter().map(|g| g.0.clone()).max().expect("some window attains the max");
    let b = gaps.iter().map(|g| g.1.clone()).min().expect("some window attains the max");
    let tail: Vec<&(M, M)> = gaps.iter().rev().take(AGREEMENT).collect();
    let spread = |f: fn(&(M, M)) -> f64| {
        let v: Vec<f64> = tail.iter().map(|g| f(g)).collect();
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let converged = tail.len() == AGREEMENT
        && spread(|g| g.0.to_f64()) <= proto.tol
        && spread(|g| g.1.to_f64()) <= proto.tol;
    let sequence = NormalizingSequence { terms, label: "gap_witness".into() };
    let avoided = a < b && interval_avoided(e, &sequence, &a, &b, &M::zero())?.avoided;
    Ok(PorosityWitness { sequence, interval: (a, b), converged, avoided, windows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CardProbe {
    /// Stable clusters in `[0, 1]`.
    pub lower: usize,
    /// `lower` plus `⌊span/ε⌋` for every stable cluster of positive width.
    pub upper: usize,
}

pub fn omega_card_probe<M: Magnitude>(
    e: &SetHandle<M>,
    seq: &NormalizingSequence<M>,
    tail: usize,
    eps: f64,
) -> Result<CardProbe> {
    let ls = limit_set(e, seq, &SnapshotOptions::new(M::one()), tail, eps)?;
    let mut lower = 0;
    let mut extra = 0;
    for c in ls.stable() {
        lower += 1;
        extra += ((c.hi - c.lo) / eps).floor() as usize;
    }
    Ok(CardProbe { lower, upper: lower + extra })
}

/// Sequences `r_n = x_{i_n}` along random increasing indices below `max_index`.
pub fn sample_sequences<M: Magnitude>(
    e: &SetHandle<M>,
    samples: usize,
    len: usize,
    max_index: usize,
    seed: u64,
) -> Result<Vec<NormalizingSequence<M>>> {
    if len == 0 || max_index < 2 * len {
        return Err(Error::OutOfRange("need max_index ≥ 2·len ≥ 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut idx = rng.gen_range(0..max_index / 2);
        let step = ((max_index - idx) / len).max(1);
        let mut indices = Vec::with_capacity(len);
        for _ in 0..len {
            indices.push(idx);
            idx += rng.gen_range(1..=step);
        }
        out.push(NormalizingSequence::from_set_points(e, &indices)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RStar {
    /// Largest stable cluster value over the sampled limit sets.
    pub upper: f64,
    /// Smallest nonzero stable cluster value; `+∞` when every cluster is `{0}`.
    pub lower: f64,
    pub samples: usize,
}

/// `R*` and `R_*` over sequences drawn from the points of `E`, so that 1 is
/// always a limit point.
pub fn r_star_quantities<M: Magnitude>(
    seqs: &[NormalizingSequence<M>],
    e: &SetHandle<M>,
    opts: &SnapshotOptions<M>,
    eps: f64,
) -> Result<RStar> {
    let mut upper = 0.0f64;
    let mut lower = f64::INFINITY;
    for s in seqs {
        let ls = limit_set(e, s, opts, s.len(), eps)?;
        for c in ls.stable() {
            upper = upper.max(c.hi);
            if c.lo >= eps {
                lower = lower.min(c.lo);
            }
        }
    }
    Ok(RStar { upper, lower, samples: seqs.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preceq {
    /// Per window `j`: sup over `e ∈ E ∩ (2^-(j+1), 2^-j]` of the smallest `|e/t − 1|`, `t ∈ T`.
    pub profile: Vec<(u32, f64)>,
    pub consistent: bool,
}

/// Surrogate for `E ⪯ T`: every point of `E` is eventually relatively close
/// to a point of `T`. Consistent when the last three windows are all within
/// `tol` or strictly decreasing.
pub fn preceq_surrogate<M: Magnitude>(e: &SetHandle<M>, t: &SetHandle<M>, proto: &Protocol) -> Result<Preceq> {
    let mut profile = Vec::new();
    for j in proto.window_range() {
        let lo = M::pow2(-(i64::from(j) + 1));
        let hi = M::pow2(-i64::from(j));
        let pts: Vec<M> = e.points_in(&lo, &hi)?.into_iter().filter(|x| *x > lo).collect();
        if pts.is_empty() {
            continue;
        }
        let mut c = t.cursor();
        let mut worst = 0.0f64;
        for x in &pts {
            let mut best = f64::INFINITY;
            if let Some(i) = c.index_at_or_below(x)? {
                let below = c.get(i)?.expect("indexed point").clone();
                best = best.min(x.div(&below).abs_diff(&M::one()).to_f64());
                if i > 0 {
                    let above = c.get(i - 1)?.expect("earlier point").clone();
                    best = best.min(x.div(&above).abs_diff(&M::one()).to_f64());
                }
            } else if let Some(n) = c.known().0.checked_sub(1) {
                // Every point of T lies above x; the smallest is the nearest.
                let last = c.get(n)?.expect("known point").clone();
                best = best.min(x.div(&last).abs_diff(&M::one()).to_f64());
            }
            worst = worst.max(best);
        }
        profile.push((j, worst));
    }
    let tail: Vec<f64> = profile.iter().rev().take(AGREEMENT).map(|p| p.1).rev().collect();
    let consistent = tail.len() == AGREEMENT
        && (tail.iter().all(|&v| v <= proto.tol)
            || tail.windows(2).all(|w| w[1] < w[0]));
    Ok(Preceq { profile, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{parse_rational, Exact, Log2};
    use crate::spec::SetSpec;

    fn q(s: &str) -> Exact {
        Exact(parse_rational(s).unwrap())
    }

    fn set(json: &str) -> SetHandle<Exact> {
        SetHandle::from_spec(&SetSpec::from_json(json).unwrap()).unwrap()
    }

    const HALF: &str = r#"{"kind":"geometric","q":"1/2"}"#;

    fn halves(len: usize) -> NormalizingSequence<Exact> {
        NormalizingSequence::geometric(&q("1/2"), 1, len).unwrap()
    }

    #[test]
    fn snapshot_examples() {
        let e = set(HALF);
        let mut opts = SnapshotOptions::new(q("2"));
        opts.floor = q("1/16");
        let s = snapshot(&e, &q("1/32"), &opts).unwrap();
        assert_eq!(s.points, vec![q("0"), q("1/16"), q("1/8"), q("1/4"), q("1/2"), q("1"), q("2")]);
        let z = snapshot(&set(r#"{"kind":"zero"}"#), &q("1/8"), &opts).unwrap();
        assert_eq!(z.points, vec![q("0")]);
    }

    #[test]
    fn avoidance_examples() {
        let e = set(HALF);
        let seq = halves(40);
        let z = q("0");
        assert!(interval_avoided(&e, &seq, &q("1/2"), &q("1"), &z).unwrap().avoided);
        let v = interval_avoided(&e, &seq, &q("1/4"), &q("7/8"), &z).unwrap();
        assert_eq!(v.violation, Some((0, q("1/2"))));
        let empty = set(r#"{"kind":"trivial"}"#);
        assert!(interval_avoided(&empty, &seq, &z, &q("1"), &z).unwrap().avoided);
    }

    #[test]
    fn max_avoided_examples() {
        let seq = halves(24);
        let z = q("0");
        let got = max_avoided_interval(&set(HALF), &seq, 8, DEFAULT_EPS, None, &z).unwrap();
        assert_eq!(got, Some((q("1/2"), q("1"))));
        let got = max_avoided_interval(&set(r#"{"kind":"trivial"}"#), &seq, 8, DEFAULT_EPS, None, &z).unwrap();
        assert_eq!(got, Some((q("0"), q("1"))));
    }

    #[test]
    fn witness_for_geometric_half() {
        let w = porosity_witness(&set(HALF), &Protocol::new(40)).unwrap();
        assert_eq!(w.interval, (q("1/2"), q("1")));
        assert!(w.avoided && w.converged);
        assert_eq!(w.sequence.terms[0], Exact::pow2(-32));
    }

    #[test]
    fn witness_for_supergeometric_is_nearly_full() {
        let e: SetHandle<Log2> = SetHandle::from_spec(&SetSpec::Supergeometric).unwrap();
        let w = porosity_witness(&e, &Protocol::new(64).windows(32)).unwrap();
        assert!(w.avoided);
        assert!(w.interval.1.to_f64() - w.interval.0.to_f64() > 0.999);
    }

    #[test]
    fn card_probes() {
        let seq = halves(24);
        let p = omega_card_probe(&set(HALF), &seq, 8, DEFAULT_EPS).unwrap();
        assert!(p.lower >= 3);
        let z = omega_card_probe(&set(r#"{"kind":"zero"}"#), &seq, 8, DEFAULT_EPS).unwrap();
        assert_eq!(z, CardProbe { lower: 1, upper: 1 });
        let sg: SetHandle<Log2> = SetHandle::from_spec(&SetSpec::Supergeometric).unwrap();
        let seqs = sample_sequences(&sg, 5, 8, 400, 7).unwrap();
        for s in &seqs {
            assert_eq!(omega_card_probe(&sg, s, 8, DEFAULT_EPS).unwrap().lower, 2);
        }
        let r = r_star_quantities(&seqs, &sg, &SnapshotOptions::default(), DEFAULT_EPS).unwrap();
        assert_eq!((r.upper, r.lower), (1.0, 1.0));
    }

    #[test]
    fn limit_set_of_geometric_is_constant() {
        let ls = limit_set(&set(HALF), &halves(20), &SnapshotOptions::new(q("2")), 8, DEFAULT_EPS).unwrap();
        let stable: Vec<f64> = ls.stable().map(|c| c.hi).collect();
        assert!(stable.ends_with(&[0.25, 0.5, 1.0, 2.0]));
        assert!(ls.clusters.iter().all(|c| c.stable));
    }

    #[test]
    fn preceq_examples() {
        let p = Protocol::new(40).windows(12);
        let e = set(HALF);
        assert!(preceq_surrogate(&e, &e, &p).unwrap().consistent);
        let pert = set(r#"{"kind":"geometric_perturbed","q":"1/2"}"#);
        assert!(preceq_surrogate(&e, &pert, &p).unwrap().consistent);
        let thirds = set(r#"{"kind":"geometric","q":"1/3"}"#);
        let r = preceq_surrogate(&e, &thirds, &p).unwrap();
        assert!(!r.consistent, "{r:?}");
    }
}
