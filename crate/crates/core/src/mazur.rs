//! The Mazur map `M_{p,q}(x)_i = |x_i|^{p/q} sign(x_i)` between unit spheres,
//! its two-sided distance estimates, and transport of sphere-map families
//! from one exponent to another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_sphere_maps::{FarProfile, SphereMapFamily, SphereMapLevel};
use crate::lp_core::{abs_pow, distance_p, norm_p, normalize, LpVector, PExponent};
use crate::metric_spaces::FiniteMetricSpace;

/// Inputs must lie this close to the unit sphere.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

// Norms within a few ulps of 1 are left alone; dividing by them would only
// add noise to the dominant coordinate.
const RENORMALIZE_SLACK: f64 = 4.0 * f64::EPSILON;

/// Maps a unit vector of `l_p` to the unit sphere of `l_q`.
pub fn mazur_map(x: &LpVector, p: PExponent, q: PExponent) -> Result<LpVector> {
    let norm = norm_p(x, p);
    if (norm - 1.0).abs() > SPHERE_TOLERANCE {
        return Err(Error::OffSphere { p: p.value(), norm });
    }
    if p == q {
        return Ok(x.clone());
    }
    let renormalized;
    let x = if (norm - 1.0).abs() > RENORMALIZE_SLACK {
        renormalized = normalize(x, p)?;
        &renormalized
    } else {
        x
    };
    let e = p.value() / q.value();
    let coeffs = x
        .as_slice()
        .iter()
        .map(|&c| abs_pow(c, e).copysign(c))
        .map(|c| if c == 0.0 { 0.0 } else { c })
        .collect();
    Ok(LpVector::from_finite(coeffs))
}

/// Applies [`mazur_map`] to every vector of a family of images.
pub fn transport_images(images: &[LpVector], p: PExponent, q: PExponent) -> Result<Vec<LpVector>> {
    images.iter().map(|x| mazur_map(x, p, q)).collect()
}

/// Two-sided envelope for `||M_{p,q}(x) - M_{p,q}(y)||_q` as a function of
/// `d = ||x - y||_p` on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazurBounds {
    pub p: PExponent,
    pub q: PExponent,
    /// `2^{1 - min(p,q)/max(p,q)}`; 1 when `p == q`.
    pub constant_c: f64,
}

impl MazurBounds {
    fn ratio(&self) -> f64 {
        self.p.value() / self.q.value()
    }

    pub fn is_identity(&self) -> bool {
        self.p == self.q
    }

    pub fn lower(&self, d: f64) -> f64 {
        let r = self.ratio();
        if self.is_identity() {
            d
        } else if r < 1.0 {
            r * d
        } else {
            abs_pow(d / self.constant_c, r)
        }
    }

    pub fn upper(&self, d: f64) -> f64 {
        let r = self.ratio();
        if self.is_identity() {
            d
        } else if r < 1.0 {
            self.constant_c * abs_pow(d, r)
        } else {
            r * d
        }
    }

    /// Largest `d` with `upper(d) <= target`.
    pub fn upper_inverse(&self, target: f64) -> f64 {
        let r = self.ratio();
        if self.is_identity() {
            target
        } else if r < 1.0 {
            abs_pow(target / self.constant_c, 1.0 / r)
        } else {
            target / r
        }
    }

    /// Smallest `d` with `lower(d) >= target`.
    pub fn lower_inverse(&self, target: f64) -> f64 {
        let r = self.ratio();
        if self.is_identity() {
            target
        } else if r < 1.0 {
            target / r
        } else {
            self.constant_c * abs_pow(target, 1.0 / r)
        }
    }
}

/// The Mazur distance estimates for the pair `(p, q)`.
pub fn mazur_bounds(p: PExponent, q: PExponent) -> MazurBounds {
    let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
    let constant_c = if p == q {
        1.0
    } else {
        2f64.powf(1.0 - lo.value() / hi.value())
    };
    MazurBounds { p, q, constant_c }
}

/// Bound-derived and measured post-transport constants of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportRecord {
    pub from: PExponent,
    /// `upper(eps_n)` from the Mazur estimates.
    pub bound_epsilon: f64,
    /// `lower(delta/2)` from the Mazur estimates.
    pub bound_delta_half: f64,
    pub measured_sup: f64,
    pub measured_inf: f64,
}

/// Moves a sphere-map family from its exponent to `q` through the Mazur map.
///
/// Every level keeps its separation threshold; the transported level
/// carries the exactly re-measured sup/inf on `space`, while the
/// bound-derived values are kept in its [`TransportRecord`].
pub fn transport_conditions(
    family: &SphereMapFamily,
    q: PExponent,
    space: &FiniteMetricSpace,
) -> Result<SphereMapFamily> {
    let p = family.exponent;
    if p == q {
        return Ok(family.clone());
    }
    let bounds = mazur_bounds(p, q);
    let pairs = space.sorted_pairs();
    let levels = family
        .levels
        .iter()
        .map(|level| {
            let images = transport_images(&level.images, p, q)?;
            let profile = FarProfile::measure(&images, &pairs, q)?;
            let measured_sup = profile.sup_within(level.level as f64);
            let measured_inf = profile.inf_beyond(level.separation);
            let record = TransportRecord {
                from: p,
                bound_epsilon: bounds.upper(level.epsilon),
                bound_delta_half: bounds.lower(level.delta_half),
                measured_sup,
                measured_inf,
            };
            let delta_half = if level.separation.is_finite() {
                measured_inf
            } else {
                record.bound_delta_half
            };
            Ok(SphereMapLevel {
                exponent: q,
                images,
                epsilon: measured_sup,
                delta_half,
                transport: Some(record),
                profile,
                ..level.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SphereMapFamily {
        levels,
        exponent: q,
        delta: bounds.lower(family.delta),
    })
}

/// Draws a uniformly-directed Gaussian vector and projects it onto `S(l_p)`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize, p: PExponent) -> LpVector {
    loop {
        let coeffs: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(v) = normalize(&LpVector::from_finite(coeffs), p) {
            return v;
        }
    }
}

/// Outcome of a randomized check of the Mazur estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazurCheck {
    pub p: PExponent,
    pub q: PExponent,
    pub dim: usize,
    pub samples: usize,
    pub constant_c: f64,
    /// `min ||M(x)-M(y)||_q / lower(||x-y||_p)`; should be at least 1.
    pub worst_lower_ratio: f64,
    /// `max ||M(x)-M(y)||_q / upper(||x-y||_p)`; should be at most 1.
    pub worst_upper_ratio: f64,
    pub lower_failures: usize,
    pub upper_failures: usize,
    /// Largest coordinate error of `M_{q,p}(M_{p,q}(x))` against `x`.
    pub round_trip_error: f64,
    /// Largest `| ||M(x)||_q - 1 |`.
    pub sphere_error: f64,
}

impl MazurCheck {
    pub fn passed(&self) -> bool {
        self.lower_failures == 0 && self.upper_failures == 0
    }
}

/// Samples `samples` random pairs on `S(l_p^dim)` and checks both estimates
/// with an additive slack of `1e-12`.
pub fn check_estimates(
    p: PExponent,
    q: PExponent,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<MazurCheck> {
    if dim == 0 || samples == 0 {
        return Err(Error::InvalidInput("dim and samples must be positive".into()));
    }
    const SLACK: f64 = 1e-12;
    let bounds = mazur_bounds(p, q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = MazurCheck {
        p,
        q,
        dim,
        samples,
        constant_c: bounds.constant_c,
        worst_lower_ratio: f64::INFINITY,
        worst_upper_ratio: 0.0,
        lower_failures: 0,
        upper_failures: 0,
        round_trip_error: 0.0,
        sphere_error: 0.0,
    };
    for _ in 0..samples {
        let x = random_unit_vector(&mut rng, dim, p);
        let y = random_unit_vector(&mut rng, dim, p);
        let mx = mazur_map(&x, p, q)?;
        let my = mazur_map(&y, p, q)?;
        let d = distance_p(&x, &y, p)?;
        let image = distance_p(&mx, &my, q)?;
        let (lo, hi) = (bounds.lower(d), bounds.upper(d));
        if lo > 0.0 {
            check.worst_lower_ratio = check.worst_lower_ratio.min(image / lo);
        }
        if hi > 0.0 {
            check.worst_upper_ratio = check.worst_upper_ratio.max(image / hi);
        }
        if lo > image + SLACK {
            check.lower_failures += 1;
        }
        if image > hi + SLACK {
            check.upper_failures += 1;
        }
        for (v, mv) in [(&x, &mx), (&y, &my)] {
            check.sphere_error = check.sphere_error.max((norm_p(mv, q) - 1.0).abs());
            let back = mazur_map(mv, q, p)?;
            let err = v
                .as_slice()
                .iter()
                .zip(back.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            check.round_trip_error = check.round_trip_error.max(err);
        }
    }
    Ok(check)
}
