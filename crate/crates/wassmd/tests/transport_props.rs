//! Property tests for the transport distances and Orlicz norms.

use proptest::prelude::*;
use wassmd::dist::{orlicz_norm, DistSpec};
use wassmd::wasserstein::{wp_assignment, wp_empirical_1d, Points};

fn small_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empirical_symmetric_and_nonnegative(xs in small_vec(24), ys in small_vec(24), pk in 0usize..4) {
        let p = [1.0, 1.5, 2.0, 3.0][pk];
        let a = wp_empirical_1d(&xs, &ys, p).unwrap();
        let b = wp_empirical_1d(&ys, &xs, p).unwrap();
        prop_assert_eq!(a.distance.to_bits(), b.distance.to_bits());
        prop_assert!(a.distance >= 0.0);
        prop_assert!((a.distance - a.plan_cost.powf(1.0 / p)).abs() <= 1e-12 * (1.0 + a.distance));
    }

    #[test]
    fn empirical_identity_of_indiscernibles(xs in small_vec(16)) {
        let d = wp_empirical_1d(&xs, &xs, 2.0).unwrap().distance;
        prop_assert_eq!(d, 0.0);
    }

    #[test]
    fn empirical_monotone_in_p(xs in small_vec(20), ys in small_vec(20)) {
        let mut last = 0.0;
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
            let d = wp_empirical_1d(&xs, &ys, p).unwrap().distance;
            prop_assert!(d >= last - 1e-9 * (1.0 + last));
            last = d;
        }
    }

    #[test]
    fn empirical_triangle(a in small_vec(12), b in small_vec(12), c in small_vec(12)) {
        for p in [1.0, 2.0] {
            let ab = wp_empirical_1d(&a, &b, p).unwrap().distance;
            let bc = wp_empirical_1d(&b, &c, p).unwrap().distance;
            let ac = wp_empirical_1d(&a, &c, p).unwrap().distance;
            prop_assert!(ac <= ab + bc + 1e-10);
        }
    }

    #[test]
    fn assignment_translation(rows in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 2..20),
                              shift in prop::collection::vec(-5.0..5.0f64, 3)) {
        let x = Points::from_rows(&rows).unwrap();
        let translated: Vec<Vec<f64>> = rows.iter()
            .map(|r| r.iter().zip(&shift).map(|(a, s)| a + s).collect())
            .collect();
        let y = Points::from_rows(&translated).unwrap();
        let norm = shift.iter().map(|s| s * s).sum::<f64>().sqrt();
        let d = wp_assignment(&x, &y, 2.0).unwrap().distance;
        prop_assert!((d - norm).abs() <= 1e-10 * (1.0 + norm), "{} vs {}", d, norm);
    }

    #[test]
    fn orlicz_positively_homogeneous(c in 0.1..5.0f64, s in 0.1..10.0f64, pr in 0.05..0.95f64) {
        // two-point lattice with mean zero: values -c p/(1-p) weighted
        let v1 = -c * pr / (1.0 - pr);
        let base = DistSpec::lattice(&[(v1, 1.0 - pr), (c, pr)]).unwrap();
        let scaled = DistSpec::lattice(&[(v1 * s, 1.0 - pr), (c * s, pr)]).unwrap();
        let t1 = orlicz_norm(&base, 1.0).unwrap();
        let ts = orlicz_norm(&scaled, 1.0).unwrap();
        prop_assert!((ts - s * t1).abs() <= 1e-8 * (1.0 + s * t1).max(s), "{} vs {}", ts, s * t1);
    }
}
