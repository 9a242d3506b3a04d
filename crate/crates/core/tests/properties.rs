use proptest::prelude::*;

use steplab::davis::{gauge_with, DavisModel, GaugeOptions};
use steplab::dense_sets::{build_rado, RadoSet};
use steplab::graph::{sample_graph, PointTable};
use steplab::numerics::{distance_key, distance_lt, floor_distance};
use steplab::step_iso::{c0_counterexample, check_step_isometry, Sign, StepIsoMap1D};
use steplab::{NormSpec, Rational, Vector};

fn rational() -> impl Strategy<Value = Rational> {
    (1i64..=12, -60i64..=60).prop_map(|(d, n)| Rational::new(n, d))
}

fn vector(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(rational(), dim).prop_map(|v| Vector::from_dense(1, &v))
}

fn exact_norm() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::l1()),
        Just(NormSpec::l2()),
        Just(NormSpec::lp(3).unwrap()),
        Just(NormSpec::LInfinity),
    ]
}

fn step_map() -> impl Strategy<Value = StepIsoMap1D> {
    (
        prop::collection::btree_set(1i64..24, 0..4),
        prop::collection::btree_set(1i64..24, 0..4),
        any::<bool>(),
        rational(),
    )
        .prop_filter_map("same breakpoint count", |(ts, gs, neg, off)| {
            if ts.len() != gs.len() {
                return None;
            }
            let mut bps = vec![(Rational::zero(), Rational::zero())];
            bps.extend(ts.iter().zip(&gs).map(|(&t, &g)| (Rational::new(t, 24), Rational::new(g, 24))));
            bps.push((Rational::one(), Rational::one()));
            let sign = if neg { Sign::Minus } else { Sign::Plus };
            StepIsoMap1D::new(bps, sign, off).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric(x in vector(3), y in vector(3), norm in exact_norm()) {
        prop_assert_eq!(distance_key(&x, &y, &norm).unwrap(), distance_key(&y, &x, &norm).unwrap());
    }

    #[test]
    fn distance_is_translation_invariant(x in vector(3), y in vector(3), z in vector(3), norm in exact_norm()) {
        prop_assert_eq!(
            distance_key(&(&x + &z), &(&y + &z), &norm).unwrap(),
            distance_key(&x, &y, &norm).unwrap()
        );
    }

    #[test]
    fn distance_ignores_coordinate_order(x in vector(4), y in vector(4), norm in exact_norm(), shift in 0usize..4) {
        let perm = |i: usize| (i - 1 + shift) % 4 + 1;
        prop_assert_eq!(
            distance_key(&x.relabel(perm), &y.relabel(perm), &norm).unwrap(),
            distance_key(&x, &y, &norm).unwrap()
        );
    }

    #[test]
    fn floor_agrees_with_strict_comparison(x in vector(3), y in vector(3), norm in exact_norm()) {
        let k = floor_distance(&x, &y, &norm).unwrap();
        prop_assert!(!distance_lt(&x, &y, &Rational::integer(k as i64), &norm).unwrap());
        prop_assert!(distance_lt(&x, &y, &Rational::integer(k as i64 + 1), &norm).unwrap());
    }

    #[test]
    fn floors_obey_triangle_inequality(x in vector(2), y in vector(2), z in vector(2), norm in exact_norm()) {
        let xz = floor_distance(&x, &z, &norm).unwrap();
        let xy = floor_distance(&x, &y, &norm).unwrap();
        let yz = floor_distance(&y, &z, &norm).unwrap();
        prop_assert!(xz <= xy + yz + 1);
    }

    #[test]
    fn larger_p_gives_smaller_distance(x in vector(3), y in vector(3), r in rational()) {
        let r = r.abs();
        let l1 = NormSpec::l1();
        let l2 = NormSpec::l2();
        let linf = NormSpec::LInfinity;
        if distance_lt(&x, &y, &r, &l1).unwrap() {
            prop_assert!(distance_lt(&x, &y, &r, &l2).unwrap());
        }
        if distance_lt(&x, &y, &r, &l2).unwrap() {
            prop_assert!(distance_lt(&x, &y, &r, &linf).unwrap());
        }
        prop_assert!(floor_distance(&x, &y, &linf).unwrap() <= floor_distance(&x, &y, &l2).unwrap());
    }

    #[test]
    fn integer_gaps_are_preserved(h in step_map(), x in rational(), k in 0i64..=10) {
        let y = &x + &Rational::integer(k);
        prop_assert_eq!((h.eval(&y) - h.eval(&x)).abs(), Rational::integer(k));
    }

    #[test]
    fn step_maps_invert(h in step_map(), x in rational()) {
        prop_assert_eq!(h.eval_inverse(&h.eval(&x)), x);
    }

    #[test]
    fn step_maps_are_step_isometries_of_the_line(h in step_map(), xs in prop::collection::btree_set(rational(), 2..6)) {
        let pts: Vec<Vector> = xs.iter().map(|x| Vector::from_pairs([(1, x.clone())])).collect();
        let imgs: Vec<Vector> = xs.iter().map(|x| Vector::from_pairs([(1, h.eval(x))])).collect();
        prop_assert!(check_step_isometry(&pts, &imgs, &NormSpec::l1()).unwrap().is_ok());
    }

    #[test]
    fn c0_map_is_a_step_isometry(pts in prop::collection::btree_set(vector(4), 2..6)) {
        let pts: Vec<Vector> = pts.into_iter().collect();
        let imgs: Vec<Vector> = pts.iter().map(c0_counterexample).collect();
        prop_assert!(check_step_isometry(&pts, &imgs, &NormSpec::LInfinity).unwrap().is_ok());
    }
}

fn rado2() -> RadoSet {
    build_rado(2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn edges_grow_with_p(seed in any::<u64>(), a in 0i64..=8, b in 0i64..=8) {
        let rado = rado2();
        let table = PointTable::from_rado(&rado);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g_lo = sample_graph(&table, &NormSpec::l2(), &Rational::new(lo, 8), seed).unwrap();
        let g_hi = sample_graph(&table, &NormSpec::l2(), &Rational::new(hi, 8), seed).unwrap();
        for (u, v) in g_lo.edges() {
            prop_assert!(g_hi.has_edge(u, v));
        }
    }

    #[test]
    fn edges_are_eligible(seed in any::<u64>()) {
        let rado = rado2();
        let table = PointTable::from_rado(&rado);
        let g = sample_graph(&table, &NormSpec::LInfinity, &Rational::new(1, 2), seed).unwrap();
        for (u, v) in g.edges() {
            let (x, y) = (table.get(u).unwrap(), table.get(v).unwrap());
            prop_assert!(distance_lt(x, y, &Rational::one(), &NormSpec::LInfinity).unwrap());
        }
    }
}

fn davis_vector() -> impl Strategy<Value = Vector> {
    prop::collection::vec((1i64..=10, -20i64..=20), 4)
        .prop_map(|v| Vector::from_pairs(v.into_iter().enumerate().map(|(i, (d, n))| (i, Rational::new(n, d)))))
}

fn gauge_bounds(x: &Vector, model: &DavisModel) -> (f64, f64) {
    let opts = GaugeOptions { restarts: 8, iterations: 3000, seed: 1 };
    let g = gauge_with(x, model, &Rational::new(1, 10_000), &opts).unwrap();
    (g.lower, g.value)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_is_homogeneous(x in davis_vector(), lam in (-6i64..=6, 1i64..=4)) {
        let model = DavisModel::new(3).unwrap();
        let lam = Rational::new(lam.0, lam.1);
        let (lo, hi) = gauge_bounds(&x, &model);
        let (slo, shi) = gauge_bounds(&x.scale(&lam), &model);
        let a = lam.abs().to_f64();
        let slack = 1e-9 * (1.0 + hi * a);
        prop_assert!(slo <= a * hi + slack && a * lo <= shi + slack, "[{slo}, {shi}] vs {a}·[{lo}, {hi}]");
    }

    #[test]
    fn gauge_is_symmetric(x in davis_vector()) {
        let model = DavisModel::new(3).unwrap();
        let (lo, hi) = gauge_bounds(&x, &model);
        let (nlo, nhi) = gauge_bounds(&-&x, &model);
        prop_assert!(nlo <= hi + 1e-9 && lo <= nhi + 1e-9);
        prop_assert!((hi - nhi).abs() <= 2e-4 + (hi - lo) + (nhi - nlo));
    }

    #[test]
    fn gauge_is_subadditive(x in davis_vector(), y in davis_vector()) {
        let model = DavisModel::new(3).unwrap();
        let (sum_lo, _) = gauge_bounds(&(&x + &y), &model);
        let (_, x_hi) = gauge_bounds(&x, &model);
        let (_, y_hi) = gauge_bounds(&y, &model);
        prop_assert!(sum_lo <= x_hi + y_hi + 2e-4);
    }
}
