use coarse_lp::distortion_report::{empirical_profile, verify_bounds};
use coarse_lp::kernel_sphere_maps::{build_sphere_map, kernel_matrix, measure_conditions, KernelKind};
use coarse_lp::lp_core::{distance_pow_p, PExponent};
use coarse_lp::metric_spaces::{generate, SpaceKind};
use coarse_lp::{build_embedding, CoarseEmbedding, EmbeddingConfig};

fn p(x: f64) -> PExponent {
    PExponent::new(x).unwrap()
}

/// Envelopes recomputed from the schedule alone.
fn oracle_envelope(e: &CoarseEmbedding, d: f64) -> (f64, f64) {
    let pv = e.p().value();
    let count = e.schedule().iter().filter(|l| l.separation.is_some_and(|s| s <= d)).count() as f64;
    let lower = count * (e.delta() / 2.0).powf(pv);
    let upper = 2f64.powf(pv) * d.powf(pv) + 1.0;
    (lower, upper)
}

#[test]
fn hypercube_six_pairs_sit_inside_envelopes() {
    let s = generate(SpaceKind::Hypercube, 6, None).unwrap();
    let e = build_embedding(&s, &EmbeddingConfig::new(p(1.0)).levels(8).delta(1.0)).unwrap();
    let family = e.family().unwrap();
    let n = s.len();
    let mut checked = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            // Sum over the raw level maps, not the assembled blocks.
            let direct: f64 = family
                .levels
                .iter()
                .map(|l| distance_pow_p(&l.images[i], &l.images[j], e.p()).unwrap())
                .sum();
            let assembled = e.pair_distance_pow_p(i, j).unwrap();
            assert!((direct - assembled).abs() <= 1e-10);
            let (lower, upper) = oracle_envelope(&e, s.dist(i, j));
            assert!(direct >= lower - 1e-9 && direct <= upper + 1e-9);
            let env = e.theoretical_bounds(s.dist(i, j));
            let norm = assembled;
            assert!(env.rho1 <= norm + 1e-9 && norm <= env.rho2 + 1e-9);
            checked += 1;
        }
    }
    assert_eq!(checked, 64 * 63 / 2);
    assert!(verify_bounds(&e).unwrap().is_clean());
}

#[test]
fn level_conditions_hold_on_remeasurement() {
    let s = generate(SpaceKind::Gaussian, 60, Some(4)).unwrap();
    for pv in [1.0, 1.5, 3.0] {
        let e = build_embedding(&s, &EmbeddingConfig::new(p(pv))).unwrap();
        let family = e.family().unwrap();
        assert!(family.separations_increasing());
        for level in &family.levels {
            assert!(level.epsilon <= level.epsilon_target());
            let radius = level.level as f64;
            let c = measure_conditions(&level.images, &s, radius, level.separation, e.p()).unwrap();
            assert!(c.sup_close <= (-radius).exp2());
            if !level.is_saturated() {
                assert!(c.inf_far >= 0.5);
            }
            level.check(&s).unwrap();
        }
    }
}

#[test]
fn gram_reconstruction_on_gaussian_cloud() {
    let s = generate(SpaceKind::Gaussian, 120, Some(42)).unwrap();
    for t in [1e-6, 0.01, 0.3, 2.0] {
        let images = build_sphere_map(&s, t, KernelKind::Gaussian).unwrap();
        let k = kernel_matrix(&s, t, KernelKind::Gaussian);
        for i in 0..s.len() {
            for j in 0..s.len() {
                let dot: f64 = images[i].as_slice().iter().zip(images[j].as_slice()).map(|(a, b)| a * b).sum();
                assert!((dot - k[(i, j)]).abs() <= 1e-8, "t={t}");
            }
        }
    }
}

#[test]
fn base_change_translates_images() {
    let s = generate(SpaceKind::Cycle, 14, None).unwrap();
    let a = build_embedding(&s, &EmbeddingConfig::new(p(1.5)).base(0)).unwrap();
    let b = build_embedding(&s, &EmbeddingConfig::new(p(1.5)).base(5)).unwrap();
    // Phi_b(x) = Phi_a(x) - Phi_a(x_5).
    let shift = a.image(5).unwrap();
    for x in 0..s.len() {
        for (n, block) in b.image(x).unwrap().blocks().iter().enumerate() {
            let want = a.image(x).unwrap().blocks()[n].sub(&shift.blocks()[n]).unwrap();
            for (u, v) in block.as_slice().iter().zip(want.as_slice()) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn hypercube_five_profile_matches_exhaustive_scan() {
    let s = generate(SpaceKind::Hypercube, 5, None).unwrap();
    let e = build_embedding(&s, &EmbeddingConfig::new(p(1.0))).unwrap();
    let buckets = 10;
    let profile = empirical_profile(&e, buckets).unwrap();
    let width = s.diameter() / buckets as f64;
    for (k, bucket) in profile.buckets.iter().enumerate() {
        let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
        let values: Vec<f64> = (0..s.len())
            .flat_map(|i| ((i + 1)..s.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let d = s.dist(i, j);
                d >= lo && (d < hi || (k == buckets - 1 && d <= hi))
            })
            .map(|(i, j)| e.image(i).unwrap().distance_p(e.image(j).unwrap(), e.p()).unwrap())
            .collect();
        assert_eq!(bucket.pair_count, values.len());
        let min = values.iter().copied().reduce(f64::min);
        let max = values.iter().copied().reduce(f64::max);
        assert_eq!(bucket.emp_min, min);
        assert_eq!(bucket.emp_max, max);
    }
}

#[test]
fn profile_invariants() {
    let s = generate(SpaceKind::Gaussian, 70, Some(12)).unwrap();
    let e = build_embedding(&s, &EmbeddingConfig::new(p(2.0))).unwrap();
    let profile = empirical_profile(&e, 12).unwrap();
    assert!(profile.violations.is_empty());
    let total: usize = profile.buckets.iter().map(|b| b.pair_count).sum();
    assert_eq!(total, 70 * 69 / 2);
    assert!(profile.rho1_theory.windows(2).all(|w| w[0] <= w[1]));
    assert!(profile.rho2_theory.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(profile.buckets.first().unwrap().t_lo, 0.0);
    assert_eq!(profile.buckets.last().unwrap().t_hi, s.diameter());
    for (k, b) in profile.buckets.iter().enumerate() {
        if let (Some(lo), Some(hi)) = (b.emp_min, b.emp_max) {
            assert!(lo <= hi);
            assert!(profile.rho1_theory[k] <= lo + 1e-9);
            assert!(hi <= profile.rho2_theory[k + 1] + 1e-9);
        }
    }
}
