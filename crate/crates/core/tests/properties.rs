use charged_capillarity::capillarity::{bbeta_pbeta, pbeta};
use charged_capillarity::fixtures::random_sessile_polygon;
use charged_capillarity::geometry::{convex_project, hausdorff_distance, symdiff_area};
use charged_capillarity::potential::log_energy;
use charged_capillarity::{HalfPlanePolygon, Point, Vec2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape(seed: u64) -> HalfPlanePolygon {
    random_sessile_polygon(&mut ChaCha8Rng::seed_from_u64(seed), 12, 1.0)
}

proptest! {
    #[test]
    fn hull_is_idempotent(pts in prop::collection::vec((-3.0..3.0f64, -1.0..3.0f64), 3..40)) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        if let Ok(h) = convex_project(&pts) {
            let again = convex_project(h.vertices()).unwrap();
            prop_assert_eq!(h.vertices(), again.vertices());
            prop_assert!(h.vertices().iter().all(|v| v.y >= 0.0));
        }
    }

    #[test]
    fn symdiff_is_a_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (a, b, c) = (shape(a), shape(b), shape(c));
        prop_assert!(symdiff_area(&a, &a) < 1e-12);
        prop_assert!((symdiff_area(&a, &b) - symdiff_area(&b, &a)).abs() < 1e-12);
        prop_assert!(symdiff_area(&a, &c) <= symdiff_area(&a, &b) + symdiff_area(&b, &c) + 1e-12);
    }

    #[test]
    fn hausdorff_of_a_translate_is_the_shift(seed in any::<u64>(), dx in -2.0..2.0f64) {
        let p = shape(seed);
        let q = p.translated(Vec2::new(dx, 0.0)).unwrap();
        prop_assert!((hausdorff_distance(&p, &q) - dx.abs()).abs() < 1e-9);
    }

    #[test]
    fn perimeter_bounds(seed in any::<u64>(), beta in -0.95..0.95f64) {
        let p = shape(seed);
        let m = p.boundary_measures();
        let pb = pbeta(&p, beta).unwrap();
        prop_assert!(m.free_perimeter > m.wetted_length);
        prop_assert!(pb > 0.0);
        prop_assert!(p.perimeter() <= 2.0 / (1.0 - beta.abs()) * pb + 1e-12);
        prop_assert!(p.diameter() <= 0.5 * p.perimeter() + 1e-12);
        // truncated balls minimise P_beta at fixed area
        prop_assert!(pb >= bbeta_pbeta(beta, p.area()) - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn robin_constant_scales_and_translates(seed in any::<u64>(), lam in 0.3..4.0f64, dx in -5.0..5.0f64) {
        let p = shape(seed);
        let base = log_energy(&p, 128).unwrap();
        let scaled = p.scaled_about(Point::origin(), lam).unwrap();
        prop_assert!((log_energy(&scaled, 128).unwrap() - (base - lam.ln())).abs() < 1e-8);
        let moved = p.translated(Vec2::new(dx, 0.0)).unwrap();
        prop_assert!((log_energy(&moved, 128).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn robin_constant_drops_under_dilation(seed in any::<u64>(), s in 1.05..2.0f64) {
        let p = shape(seed);
        let c = p.centroid();
        let big = p.scaled_about(Point::new(c.x, 0.0), s).unwrap();
        prop_assert!(log_energy(&big, 128).unwrap() < log_energy(&p, 128).unwrap());
    }
}
