mod common;

use std::sync::Arc;

use num_rational::BigRational;
use proptest::prelude::*;

use common::{gap, lambda_mu, pow2, r, Mu};
use porosity::estimate::Protocol;
use porosity::intset::IntegerSet;
use porosity::porosity0::{lambda0, window_extrema};
use porosity::porosity_inf::{build_m, lambda_inf};
use porosity::scaling::ScalingFunction;
use porosity::setkit::SetHandle;
use porosity::spec::{MuSpec, SetSpec};
use porosity::structure::{components, f_criterion};
use porosity::{Exact, Magnitude};

fn explicit(pts: &[BigRational]) -> SetHandle<Exact> {
    SetHandle::explicit(pts.iter().cloned().map(Exact).collect())
}

fn set(json: &str) -> SetHandle<Exact> {
    SetHandle::from_spec(&SetSpec::from_json(json).unwrap()).unwrap()
}

fn rational() -> impl Strategy<Value = BigRational> {
    (2i64..200).prop_flat_map(|d| (1..d).prop_map(move |n| r(n, d)))
}

fn points() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(rational(), 0..16)
}

fn mu_strategy() -> impl Strategy<Value = Mu> {
    prop_oneof![
        Just(Mu::Geometric(1, 2)),
        Just(Mu::Geometric(2, 3)),
        Just(Mu::Power(1)),
        Just(Mu::Power(2)),
    ]
}

fn geometric_points(q: &BigRational, floor: &BigRational) -> Vec<BigRational> {
    let mut out = vec![common::one()];
    while out.last().unwrap() > floor {
        let next = out.last().unwrap() * q;
        out.push(next);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambda0_is_the_largest_gap(pts in points(), h in rational()) {
        let got = lambda0(&explicit(&pts), &Exact(h.clone())).unwrap();
        prop_assert_eq!(got.lambda.0, gap(&pts, &h));
    }

    #[test]
    fn lambda0_on_geometric_sets(a in 1i64..9, h in rational()) {
        let q = r(a, 10);
        let e = set(&format!(r#"{{"kind":"geometric","q":"{a}/10"}}"#));
        let pts = geometric_points(&q, &(&h * pow2(-30)));
        prop_assert_eq!(lambda0(&e, &Exact(h.clone())).unwrap().lambda.0, gap(&pts, &h));
    }

    #[test]
    fn lambda_inf_is_the_largest_image_gap(
        values in prop::collection::btree_set(1u64..60, 1..10),
        mu in mu_strategy(),
        n in 1u64..64,
    ) {
        let values: Vec<u64> = values.into_iter().collect();
        let e = IntegerSet::explicit(values.iter().copied()).unwrap();
        let m = ScalingFunction::<Exact>::from_spec(&MuSpec::parse(&mu.spec()).unwrap()).unwrap();
        prop_assert_eq!(lambda_inf(&e, &m, n).unwrap().lambda_mu.0, lambda_mu(&values, mu, n));
    }

    #[test]
    fn window_extrema_bracket_a_grid(pts in prop::collection::vec(rational(), 1..10), j in 0u32..5) {
        let w = window_extrema(&explicit(&pts), j).unwrap();
        let mut fp: Vec<f64> = pts.iter().map(common::to_f64).collect();
        fp.sort_by(f64::total_cmp);
        let lo = 0.5f64.powi(j as i32 + 1);
        let k = 4000;
        let (gsup, ginf) = common::grid_extrema(&fp, lo, 2.0 * lo, k);
        let slack = 2.0 / k as f64 + 1e-12;
        let (sup, inf) = (w.sup.to_f64(), w.inf.to_f64());
        prop_assert!(gsup <= sup + 1e-12 && sup - gsup <= slack, "sup {} grid {}", sup, gsup);
        prop_assert!(ginf >= inf - 1e-12 && ginf - inf <= slack, "inf {} grid {}", inf, ginf);
    }

    #[test]
    fn f_pruning_matches_all_pairs(pts in prop::collection::vec(rational(), 2..14)) {
        let e = explicit(&pts);
        let f = f_criterion(&e, &Protocol::new(12)).unwrap();
        for (j, v) in &f.profile {
            let want = common::f_sup_all_pairs(&pts, &pow2(-i64::from(*j)));
            prop_assert_eq!(&v.0, &want, "window {}", j);
        }
    }

    #[test]
    fn components_are_maximal_gaps(pts in points(), h in rational()) {
        let e = explicit(&pts);
        let chain = components(&e, &Exact(h.clone()), 12).unwrap();
        let inside = |a: &BigRational, b: &BigRational| pts.iter().any(|p| p > a && p < b);
        for c in &chain.components {
            prop_assert!(c.a < c.b);
            prop_assert!(!inside(&c.a.0, &c.b.0));
            prop_assert!(c.b.0 == h || pts.contains(&c.b.0));
            prop_assert!(c.a.0 == BigRational::from_integer(0.into()) || pts.contains(&c.a.0));
        }
        for w in chain.components.windows(2) {
            prop_assert!(w[0].a >= w[1].b && w[1].b > w[1].a);
        }
    }

    #[test]
    fn built_m_matches_direct_search(pts in prop::collection::vec(rational(), 0..10), mu in mu_strategy()) {
        let m = ScalingFunction::<Exact>::from_spec(&MuSpec::parse(&mu.spec()).unwrap()).unwrap();
        let got = build_m(&explicit(&pts), &m, 40).unwrap().set.elements_in(1, 40).unwrap();
        prop_assert_eq!(got, common::brute_m(&pts, mu, 40));
    }
}

#[test]
fn built_m_on_geometric_matches_direct_search() {
    let q = r(1, 2);
    let pts = geometric_points(&q, &r(1, 1 << 20));
    let m = ScalingFunction::<Exact>::from_spec(&MuSpec::parse("power:1").unwrap()).unwrap();
    let got = build_m(&set(r#"{"kind":"geometric","q":"1/2"}"#), &m, 2000).unwrap();
    assert_eq!(got.set.elements_in(1, 2000).unwrap(), common::brute_m(&pts, Mu::Power(1), 2000));
}

#[test]
fn image_enumeration_is_pointwise() {
    for mu in [Mu::Power(1), Mu::Geometric(1, 2)] {
        let m = Arc::new(ScalingFunction::<Exact>::from_spec(&MuSpec::parse(&mu.spec()).unwrap()).unwrap());
        let e = SetHandle::image(m, Arc::new(IntegerSet::all()));
        let n = if matches!(mu, Mu::Power(_)) { 10_000 } else { 500 };
        for i in 0..n {
            assert_eq!(e.point(i).unwrap().unwrap().0, mu.eval(i as u64 + 1), "{mu:?} at {i}");
        }
    }
}

#[test]
fn union_is_a_sorted_merge() {
    let a = set(r#"{"kind":"geometric","q":"1/2"}"#);
    let b = set(r#"{"kind":"geometric","q":"1/3"}"#);
    let u = set(r#"{"kind":"union","sets":[{"kind":"geometric","q":"1/2"},{"kind":"geometric","q":"1/3"}]}"#);
    let floor = Exact(pow2(-40));
    let top = Exact::one();
    let mut want: Vec<BigRational> = a
        .points_in(&floor, &top)
        .unwrap()
        .into_iter()
        .chain(b.points_in(&floor, &top).unwrap())
        .map(|x| x.0)
        .collect();
    want.sort_by(|x, y| y.cmp(x));
    want.dedup();
    let got: Vec<BigRational> = u.points_in(&floor, &top).unwrap().into_iter().map(|x| x.0).collect();
    assert_eq!(got, want);
    assert!(got.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn enumerations_strictly_decrease() {
    for spec in [
        r#"{"kind":"power","p":1}"#,
        r#"{"kind":"factorial"}"#,
        r#"{"kind":"prime_reciprocal"}"#,
        r#"{"kind":"dense","per_octave":7}"#,
        r#"{"kind":"geometric_perturbed","q":"1/2"}"#,
        r#"{"kind":"scaled","c":"3","set":{"kind":"geometric","q":"1/2"}}"#,
    ] {
        let e = set(spec);
        let pts: Vec<Exact> = (0..300).map_while(|i| e.point(i).unwrap()).collect();
        assert!(pts.windows(2).all(|w| w[0] > w[1]), "{spec}");
    }
}
