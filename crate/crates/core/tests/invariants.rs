use std::sync::OnceLock;

use num_bigint::BigInt;
use proptest::prelude::*;

use toral_rigidity::analysis::{classify_point, Classification, ClassifyOptions, TransverseFrame};
use toral_rigidity::ball::Ball;
use toral_rigidity::experiments::{cubic_cartan, octic};
use toral_rigidity::orbit::{act, partial_orbit_of, OrbitMeta, TorusPoint};
use toral_rigidity::slice::{build_context, enumerate_slice, SliceQuery};
use toral_rigidity::Action;

fn cubic() -> &'static Action {
    static A: OnceLock<Action> = OnceLock::new();
    A.get_or_init(|| cubic_cartan().unwrap())
}

fn oct() -> &'static Action {
    static A: OnceLock<Action> = OnceLock::new();
    A.get_or_init(|| octic().unwrap())
}

fn point(num: &[i64], den: i64) -> TorusPoint {
    TorusPoint::exact_i64(num, den)
}

fn add(m: &[i64], n: &[i64]) -> Vec<i64> {
    m.iter().zip(n).map(|(a, b)| a + b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cubic_homomorphism(
        m in proptest::collection::vec(-8i64..=8, 2),
        n in proptest::collection::vec(-8i64..=8, 2),
        num in proptest::collection::vec(-50i64..50, 3),
        den in 1i64..60,
    ) {
        let a = cubic();
        let x = point(&num, den);
        let lhs = act(a, &add(&m, &n), &x).unwrap();
        let rhs = act(a, &m, &act(a, &n, &x).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        let neg: Vec<i64> = n.iter().map(|k| -k).collect();
        prop_assert_eq!(act(a, &neg, &act(a, &n, &x).unwrap()).unwrap(), x);
    }

    #[test]
    fn octic_homomorphism(
        m in proptest::collection::vec(-3i64..=3, 4),
        n in proptest::collection::vec(-3i64..=3, 4),
        num in proptest::collection::vec(0i64..30, 8),
        den in 1i64..30,
    ) {
        let a = oct();
        let x = point(&num, den);
        let lhs = act(a, &add(&m, &n), &x).unwrap();
        let rhs = act(a, &m, &act(a, &n, &x).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn denominators_are_preserved(
        n in proptest::collection::vec(-10i64..=10, 2),
        num in proptest::collection::vec(0i64..100, 3),
        den in 1i64..100,
    ) {
        let x = point(&num, den);
        let y = act(cubic(), &n, &x).unwrap();
        prop_assert_eq!(y.denominator(), x.denominator());
    }

    #[test]
    fn norm_balance(n in proptest::collection::vec(-20i64..=20, 4)) {
        let a = oct();
        let l = a.lyapunov_f64(&n);
        let f = a.field();
        let s: f64 = l.iter().enumerate().map(|(i, x)| f.multiplicity(i) as f64 * x).sum();
        let scale = 1.0 + n.iter().map(|x| x.abs() as f64).sum::<f64>();
        prop_assert!(s.abs() < 1e-9 * scale);
    }

    #[test]
    fn torsion_orbits_are_finite(
        num in proptest::collection::vec(0i64..7, 3),
        q in 2i64..8,
    ) {
        let a = cubic();
        let x = point(&num, q);
        let els: Vec<Vec<i64>> = (-4..=4).flat_map(|i| (-4..=4).map(move |j| vec![i, j])).collect();
        let o = partial_orbit_of(a, &x, &els, OrbitMeta::default()).unwrap();
        prop_assert!(o.distinct_count() as i64 <= q.pow(3));
    }

    #[test]
    fn lyapunov_slices_are_symmetric(eps in 0.1f64..2.0, place in 0usize..3) {
        let a = cubic();
        let el = enumerate_slice(a, &SliceQuery::new(&[place], eps, 6, 2, false)).unwrap();
        let ids: Vec<Vec<i64>> = el.iter().map(|e| e.n.clone()).collect();
        for n in &ids {
            let neg: Vec<i64> = n.iter().map(|k| -k).collect();
            prop_assert!(ids.contains(&neg));
        }
    }

    #[test]
    fn classify_round_trip(
        num in proptest::collection::vec(0i64..12, 3),
        q in 1i64..12,
        place in 0usize..3,
        w in prop_oneof![-1e-2f64..-1e-4, 1e-4f64..1e-2],
    ) {
        let a = cubic();
        let ctx = build_context(a, &[place]).unwrap();
        let frame = TransverseFrame::new(a, &ctx);
        let center = point(&num, q);
        let shift = frame.w_vector(&[w]);
        let balls: Vec<Ball> = center
            .coords_f64()
            .iter()
            .zip(&shift)
            .map(|(c, s)| Ball::from_f64((c + s).rem_euclid(1.0), 128))
            .collect();
        let x = TorusPoint::guarded(&balls, 96);
        match classify_point(a, &ctx, &x, ClassifyOptions { tol: 1e-9, ..Default::default() }) {
            Classification::TranslatedTorsion { center: c, v, .. } => {
                prop_assert_eq!(c, center.clone());
                prop_assert!((v[0] - w).abs() < 1e-8);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn exact_classification_keeps_denominator() {
    let a = cubic();
    let ctx = build_context(a, &[]).unwrap();
    let c = classify_point(a, &ctx, &point(&[2, 4, 6], 10), ClassifyOptions::default());
    assert_eq!(c, Classification::Torsion { q: BigInt::from(5), exact: true, distance: 0.0 });
}
