use coarse_lp::metric_spaces::{generate, validate, SpaceKind};

#[test]
fn generated_spaces_are_metrics() {
    let cases = [
        (SpaceKind::Hypercube, 1, None),
        (SpaceKind::Hypercube, 5, None),
        (SpaceKind::Cycle, 1, None),
        (SpaceKind::Cycle, 2, None),
        (SpaceKind::Cycle, 31, None),
        (SpaceKind::Path, 1, None),
        (SpaceKind::Path, 40, None),
        (SpaceKind::Gaussian, 60, Some(1)),
        (SpaceKind::Gaussian, 2, Some(77)),
    ];
    for (kind, param, seed) in cases {
        let s = generate(kind, param, seed).unwrap();
        let report = validate(&s);
        assert!(report.is_valid(), "{kind:?}({param}): {:?}", report.violations);
    }
}

#[test]
fn hamming_equals_l1_of_bit_vectors() {
    for k in 1..=8 {
        let s = generate(SpaceKind::Hypercube, k, None).unwrap();
        assert_eq!(s.diameter(), k as f64);
        for i in 0..s.len() {
            for j in 0..s.len() {
                let l1: u32 = s.labels()[i]
                    .bytes()
                    .zip(s.labels()[j].bytes())
                    .map(|(a, b)| (a as i32 - b as i32).unsigned_abs())
                    .sum();
                assert_eq!(s.dist(i, j), l1 as f64);
            }
        }
    }
}

#[test]
fn gaussian_distances_recompute_from_coordinates() {
    let s = generate(SpaceKind::Gaussian, 80, Some(42)).unwrap();
    let coords = s.coords().unwrap();
    for i in 0..s.len() {
        for j in 0..s.len() {
            let naive: f64 = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((s.dist(i, j) - naive).abs() <= 1e-12);
        }
    }
}
