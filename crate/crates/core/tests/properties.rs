use kmfix::km::{km_iterate, LambdaSeq, Schedule};
use kmfix::maps::catalog::random_box_map;
use kmfix::numeric::Rational;
use kmfix::rates::{alpha_hat, AlphaFn, BigCount};
use kmfix::spaces::{make_circle, make_interval, make_poincare_disk, make_star_tree, product, Point, Space};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn sup_distance_is_the_larger_component(x in 0.0..1.0f64, u in 0.0..1.0f64, y in 0.0..1.0f64, v in 0.0..1.0f64) {
        let i = make_interval(0.0, 1.0).unwrap();
        let h = product(i.clone(), i.clone());
        let d = h.distance(&Point::pair(Point::real(x), Point::real(u)), &Point::pair(Point::real(y), Point::real(v)));
        prop_assert_eq!(d, (x - y).abs().max((u - v).abs()));
    }

    #[test]
    fn sup_distance_with_a_circle_factor(x in -5.0..5.0f64, y in -5.0..5.0f64, p in 0.0..6.28f64, q in 0.0..6.28f64) {
        let h = product(Space::Euclidean { dim: 1 }, make_circle());
        let a = Point::pair(Point::real(x), Point::Angle(p));
        let b = Point::pair(Point::real(y), Point::Angle(q));
        let arc = make_circle().distance(&Point::Angle(p), &Point::Angle(q));
        prop_assert_eq!(h.distance(&a, &b), (x - y).abs().max(arc));
    }

    #[test]
    fn convex_combination_is_symmetric(seed in any::<u64>(), lambda in 0.0..=1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in [make_poincare_disk(), make_star_tree(4, 2.0).unwrap()] {
            let x = s.sample(&mut rng);
            let y = s.sample(&mut rng);
            let a = s.convex_comb(&x, &y, lambda).unwrap();
            let b = s.convex_comb(&y, &x, 1.0 - lambda).unwrap();
            prop_assert!(s.distance(&a, &b) <= 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn residuals_never_rise(seed in any::<u64>(), num in 1i64..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_box_map(&mut rng, 3);
        let x = t.domain().sample(&mut rng);
        // λ ≤ 9/10, so K = 10 bounds it away from 1.
        let sched = Schedule::new(LambdaSeq::Constant { value: Rational::new(num, 10) }, 10, AlphaFn::Linear { factor: 10 });
        let trace = km_iterate(t.domain(), &t, &x, &sched, 60).unwrap();
        for w in trace.residuals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn deep_alpha_hat_uses_exact_closed_forms(i in 4097u64..1_000_000, n in 0u64..1000) {
        let got = alpha_hat(&AlphaFn::Identity, i, n).unwrap();
        prop_assert_eq!(got, BigCount::exact(BigUint::from(i + 1) * BigUint::from(n + 1)));
    }

    #[test]
    fn rationals_round_trip_through_json(p in -1000i64..1000, q in 1i64..1000) {
        let r = Rational::new(p, q);
        let text = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&text).unwrap(), r);
    }
}

#[test]
fn big_counts_round_trip_through_json() {
    let exact = alpha_hat(&AlphaFn::Linear { factor: 2 }, 64u64, 3u64).unwrap();
    let text = serde_json::to_string(&exact).unwrap();
    assert_eq!(serde_json::from_str::<BigCount>(&text).unwrap(), exact);
}
