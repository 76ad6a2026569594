use coarse_lp::kernel_sphere_maps::{build_family, KernelKind};
use coarse_lp::lp_core::{distance_p, norm_p, PExponent};
use coarse_lp::mazur::{mazur_bounds, mazur_map, random_unit_vector, transport_conditions};
use coarse_lp::metric_spaces::{generate, FiniteMetricSpace, SpaceKind, SpaceMeta};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRID: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

fn p(x: f64) -> PExponent {
    PExponent::new(x).unwrap()
}

#[test]
fn sphere_preservation_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for &a in &GRID {
        for &b in &GRID {
            for _ in 0..1000 {
                let x = random_unit_vector(&mut rng, 24, p(a));
                let m = mazur_map(&x, p(a), p(b)).unwrap();
                assert!((norm_p(&m, p(b)) - 1.0).abs() <= 1e-12);
                let back = mazur_map(&m, p(b), p(a)).unwrap();
                for (u, v) in x.as_slice().iter().zip(back.as_slice()) {
                    assert!((u - v).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn two_sided_estimates_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &a in &GRID {
        for &b in &GRID {
            let bounds = mazur_bounds(p(a), p(b));
            for _ in 0..500 {
                let x = random_unit_vector(&mut rng, 16, p(a));
                let y = random_unit_vector(&mut rng, 16, p(a));
                let d = distance_p(&x, &y, p(a)).unwrap();
                let image = distance_p(
                    &mazur_map(&x, p(a), p(b)).unwrap(),
                    &mazur_map(&y, p(a), p(b)).unwrap(),
                    p(b),
                )
                .unwrap();
                assert!(bounds.lower(d) <= image + 1e-12, "({a},{b})");
                assert!(image <= bounds.upper(d) + 1e-12, "({a},{b})");
            }
        }
    }
}

#[test]
fn nearby_pairs_respect_estimates() {
    // Small perturbations probe the Hölder regime of the upper bound.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (a, b) in [(1.0, 2.0), (1.0, 3.0), (2.0, 3.0), (3.0, 1.0)] {
        let bounds = mazur_bounds(p(a), p(b));
        for k in 0..200 {
            let x = random_unit_vector(&mut rng, 8, p(a));
            let mut coeffs = x.as_slice().to_vec();
            coeffs[k % 8] = -coeffs[k % 8] * (1.0 + 1e-3 * (k as f64));
            let y = coarse_lp::lp_core::normalize(&coarse_lp::LpVector::new(coeffs).unwrap(), p(a)).unwrap();
            let d = distance_p(&x, &y, p(a)).unwrap();
            let mx = mazur_map(&x, p(a), p(b)).unwrap();
            let my = mazur_map(&y, p(a), p(b)).unwrap();
            let image = distance_p(&mx, &my, p(b)).unwrap();
            assert!(bounds.lower(d) <= image + 1e-12);
            assert!(image <= bounds.upper(d) + 1e-12);
        }
    }
}

fn two_points() -> FiniteMetricSpace {
    FiniteMetricSpace::from_rows(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        SpaceMeta::default(),
    )
    .unwrap()
}

#[test]
fn identity_transport_is_unchanged() {
    let s = generate(SpaceKind::Path, 10, None).unwrap();
    let family = build_family(&s, 3, p(2.0), 1.0, KernelKind::Laplacian).unwrap();
    assert_eq!(transport_conditions(&family, p(2.0), &s).unwrap(), family);
}

#[test]
fn two_point_transport_measures_image_distance() {
    let s = two_points();
    let family = build_family(&s, 2, p(2.0), 1.0, KernelKind::Laplacian).unwrap();
    let moved = transport_conditions(&family, p(1.0), &s).unwrap();
    for (before, after) in family.levels.iter().zip(&moved.levels) {
        let a = mazur_map(&before.images[0], p(2.0), p(1.0)).unwrap();
        let b = mazur_map(&before.images[1], p(2.0), p(1.0)).unwrap();
        let want = distance_p(&a, &b, p(1.0)).unwrap();
        assert_eq!(after.transport.unwrap().measured_sup, want);
        assert_eq!(after.epsilon, want);
    }
}

#[test]
fn transported_parameters_follow_the_estimates() {
    let s = generate(SpaceKind::Path, 24, None).unwrap();
    let family = build_family(&s, 4, p(2.0), 1.0, KernelKind::Laplacian).unwrap();
    for q in [1.0, 1.5, 3.0] {
        let bounds = mazur_bounds(p(2.0), p(q));
        let moved = transport_conditions(&family, p(q), &s).unwrap();
        assert!(moved.delta > 0.0);
        assert_eq!(moved.delta, bounds.lower(1.0));
        if q > 2.0 {
            assert!((moved.delta - 2.0 / q).abs() < 1e-15);
        }
        for (before, after) in family.levels.iter().zip(&moved.levels) {
            let record = after.transport.unwrap();
            assert_eq!(record.bound_epsilon, bounds.upper(before.epsilon));
            assert!(record.measured_sup <= record.bound_epsilon + 1e-12);
            if !before.is_saturated() {
                assert!(record.measured_inf >= bounds.lower(before.measured_inf()) - 1e-12);
                assert!(record.measured_inf >= record.bound_delta_half - 1e-12);
            }
            after.check(&s).unwrap();
        }
    }
}
