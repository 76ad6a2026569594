//! Sphere maps `phi: X -> S(l_p)` built from positive-semidefinite kernels.
//!
//! For a kernel `K(x,y) = exp(-t * g(d(x,y)))` we produce unit vectors whose
//! Gram matrix is `K`, so `||phi(x) - phi(y)||_2 = sqrt(2 (1 - K(x,y)))`.
//! The factorization pivots on point 0 first: with `a_x = 1 - K(x,0)` the
//! Schur complement `H = K - K[.,0] K[0,.]` has entries
//! `a_x + a_y - (1 - K(x,y)) - a_x a_y`, all computed from `expm1`, so the
//! geometry stays accurate even when the bandwidth is so small that every
//! kernel entry rounds to 1. `H` is positive semidefinite exactly when `K`
//! is, and `phi(x) = (K(x,0), rows of H^{1/2})`.
//!
//! A level `n` of a family is calibrated so that, after Mazur transport to
//! the target exponent, pairs at distance at most `n` land within `2^-n`
//! while pairs beyond a threshold `S_n` stay at least `delta/2` apart.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_core::{distance_p, norm_p, CompensatedSum, LpVector, PExponent};
use crate::mazur::{mazur_bounds, transport_images, TransportRecord};
use crate::metric_spaces::{FiniteMetricSpace, Pair};

/// Negative eigenvalues smaller than this fraction of the largest are
/// treated as roundoff and clipped.
pub const EIGEN_FLOOR: f64 = 1e-8;

/// Every image must have unit norm within this tolerance.
pub const UNIT_TOLERANCE: f64 = 1e-9;

// Kernel entries at the bandwidth cap are at most exp(-40).
const BANDWIDTH_CAP_EXPONENT: f64 = 40.0;
const MAX_SEARCH_STEPS: usize = 40;
const MAX_SHRINK_STEPS: usize = 400;
const BRACKET_RATIO: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `exp(-t d^2)`, positive definite on Euclidean data.
    Gaussian,
    /// `exp(-t d)`, positive semidefinite on `l_1`-embeddable metrics.
    Laplacian,
}

impl KernelKind {
    #[inline]
    pub fn profile(self, d: f64) -> f64 {
        match self {
            KernelKind::Gaussian => d * d,
            KernelKind::Laplacian => d,
        }
    }

    /// Gaussian for spaces sampled from Euclidean space, Laplacian otherwise.
    pub fn default_for(space: &FiniteMetricSpace) -> KernelKind {
        match space.meta().kind.as_deref() {
            Some("gaussian") => KernelKind::Gaussian,
            _ => KernelKind::Laplacian,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Laplacian => "laplacian",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "laplacian" => Ok(KernelKind::Laplacian),
            other => Err(Error::InvalidInput(format!("unknown kernel {other:?}"))),
        }
    }
}

/// The dense kernel matrix `K(x,y) = exp(-t g(d(x,y)))`.
pub fn kernel_matrix(space: &FiniteMetricSpace, t: f64, kind: KernelKind) -> DMatrix<f64> {
    let n = space.len();
    DMatrix::from_fn(n, n, |i, j| (-t * kind.profile(space.dist(i, j))).exp())
}

fn check_bandwidth(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("bandwidth must be positive, got {t}")))
    }
}

/// Factors the kernel into per-point unit vectors of `l_2`.
pub fn build_sphere_map(space: &FiniteMetricSpace, t: f64, kind: KernelKind) -> Result<Vec<LpVector>> {
    check_bandwidth(t)?;
    let n = space.len();
    // 1 - K(x, y), accurate for tiny exponents.
    let gap = |x: usize, y: usize| -(-t * kind.profile(space.dist(x, y))).exp_m1();
    let a: Vec<f64> = (0..n).map(|x| gap(x, 0)).collect();

    let m = n - 1;
    let schur = DMatrix::from_fn(m, m, |i, j| {
        let (x, y) = (i + 1, j + 1);
        if x == y {
            a[x] * (2.0 - a[x])
        } else {
            a[x] + a[y] - gap(x, y) - a[x] * a[y]
        }
    });
    let scale = schur.iter().fold(0.0f64, |s, v| s.max(v.abs()));

    let tail: Vec<Vec<f64>> = if m == 0 || scale == 0.0 {
        vec![Vec::new(); m]
    } else {
        let eigen = SymmetricEigen::new(schur / scale);
        let largest = eigen.eigenvalues.max();
        let smallest = eigen.eigenvalues.min();
        if smallest < -EIGEN_FLOOR * largest {
            return Err(Error::NotNegativeType {
                eigenvalue: smallest * scale,
                largest: largest * scale,
            });
        }
        let kept: Vec<(usize, f64)> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(k, &l)| (k, (l * scale).sqrt()))
            .collect();
        (0..m)
            .map(|i| kept.iter().map(|&(k, s)| eigen.eigenvectors[(i, k)] * s).collect())
            .collect()
    };
    let width = 1 + tail.first().map_or(0, Vec::len);

    let mut images = Vec::with_capacity(n);
    let mut head = vec![0.0; width];
    head[0] = 1.0;
    images.push(LpVector::from_finite(head));
    for (i, mut coords) in tail.into_iter().enumerate() {
        let x = i + 1;
        let k0 = 1.0 - a[x];
        // Put the tail back on the sphere without touching the dominant
        // first coordinate: ||tail||^2 must equal 1 - K(x,0)^2.
        let target = a[x] * (2.0 - a[x]);
        let have: f64 = coords.iter().map(|c| c * c).collect::<CompensatedSum>().total();
        let mut v = Vec::with_capacity(width);
        if have > 0.0 {
            let s = (target / have).sqrt();
            coords.iter_mut().for_each(|c| *c *= s);
            v.push(k0);
            v.extend(coords);
        } else {
            v.push(1.0);
            v.resize(width, 0.0);
        }
        images.push(LpVector::from_finite(v));
    }
    Ok(images)
}

/// Condition values of a map on a finite space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditions {
    /// `sup ||phi(x)-phi(y)||_p` over pairs with `d <= R`; 0 when empty.
    pub sup_close: f64,
    /// `inf ||phi(x)-phi(y)||_p` over pairs with `d >= S`; `+inf` when empty.
    pub inf_far: f64,
}

/// Exact close-pair sup and far-pair inf of `images` on `space`.
pub fn measure_conditions(
    images: &[LpVector],
    space: &FiniteMetricSpace,
    r: f64,
    s: f64,
    p: PExponent,
) -> Result<Conditions> {
    check_images(images, space)?;
    let mut out = Conditions { sup_close: 0.0, inf_far: f64::INFINITY };
    let n = space.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = space.dist(i, j);
            if d > r && d < s {
                continue;
            }
            let e = distance_p(&images[i], &images[j], p)?;
            if d <= r {
                out.sup_close = out.sup_close.max(e);
            }
            if d >= s {
                out.inf_far = out.inf_far.min(e);
            }
        }
    }
    Ok(out)
}

fn check_images(images: &[LpVector], space: &FiniteMetricSpace) -> Result<()> {
    if images.len() != space.len() {
        return Err(Error::LengthMismatch { left: images.len(), right: space.len() });
    }
    Ok(())
}

/// Image distances summarized over the distinct source distances of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct FarProfile {
    distances: Vec<f64>,
    prefix_max: Vec<f64>,
    suffix_min: Vec<f64>,
}

impl FarProfile {
    /// `pairs` must be sorted by ascending distance.
    pub fn measure(images: &[LpVector], pairs: &[Pair], p: PExponent) -> Result<FarProfile> {
        let mut distances = Vec::new();
        let mut group_max = Vec::new();
        let mut group_min = Vec::new();
        for pair in pairs {
            let e = distance_p(&images[pair.i], &images[pair.j], p)?;
            if distances.last() != Some(&pair.d) {
                distances.push(pair.d);
                group_max.push(e);
                group_min.push(e);
            } else {
                let k = distances.len() - 1;
                group_max[k] = group_max[k].max(e);
                group_min[k] = group_min[k].min(e);
            }
        }
        let mut prefix_max = group_max;
        for k in 1..prefix_max.len() {
            prefix_max[k] = prefix_max[k].max(prefix_max[k - 1]);
        }
        let mut suffix_min = group_min;
        for k in (0..suffix_min.len().saturating_sub(1)).rev() {
            suffix_min[k] = suffix_min[k].min(suffix_min[k + 1]);
        }
        Ok(FarProfile { distances, prefix_max, suffix_min })
    }

    /// Sup over pairs with `d <= r`.
    pub fn sup_within(&self, r: f64) -> f64 {
        let k = self.distances.partition_point(|&d| d <= r);
        if k == 0 {
            0.0
        } else {
            self.prefix_max[k - 1]
        }
    }

    /// Inf over pairs with `d >= s`.
    pub fn inf_beyond(&self, s: f64) -> f64 {
        let k = self.distances.partition_point(|&d| d < s);
        self.suffix_min.get(k).copied().unwrap_or(f64::INFINITY)
    }

    /// Smallest distinct distance `s > floor` whose far-pair inf reaches
    /// `target`.
    pub fn threshold(&self, target: f64, floor: f64) -> Option<f64> {
        let start = self.distances.partition_point(|&d| d <= floor);
        (start..self.distances.len())
            .find(|&k| self.suffix_min[k] >= target)
            .map(|k| self.distances[k])
    }
}

/// One calibrated map `phi_n: X -> S(l_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMapLevel {
    pub level: usize,
    pub exponent: PExponent,
    pub images: Vec<LpVector>,
    /// Measured sup over pairs with `d <= level`.
    pub epsilon: f64,
    /// `S_n`; `+inf` for a saturated level.
    pub separation: f64,
    /// Far pairs beyond `separation` are at least this far apart.
    pub delta_half: f64,
    pub bandwidth: f64,
    pub kernel: KernelKind,
    pub transport: Option<TransportRecord>,
    pub profile: FarProfile,
}

impl SphereMapLevel {
    pub fn is_saturated(&self) -> bool {
        !self.separation.is_finite()
    }

    pub fn epsilon_target(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Inf over pairs at distance at least `S_n`, as measured.
    pub fn measured_inf(&self) -> f64 {
        self.profile.inf_beyond(self.separation)
    }

    /// Re-measures the level on `space` without the cached profile.
    pub fn check(&self, space: &FiniteMetricSpace) -> std::result::Result<(), String> {
        for (x, v) in self.images.iter().enumerate() {
            let norm = norm_p(v, self.exponent);
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(format!("image {x} has norm {norm}"));
            }
        }
        let c = measure_conditions(&self.images, space, self.level as f64, self.separation, self.exponent)
            .map_err(|e| e.to_string())?;
        if c.sup_close > self.epsilon {
            return Err(format!("sup {} exceeds epsilon {}", c.sup_close, self.epsilon));
        }
        if c.inf_far < self.delta_half {
            return Err(format!("inf {} below delta/2 = {}", c.inf_far, self.delta_half));
        }
        Ok(())
    }
}

/// The sequence of level maps with a common exponent and separation `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMapFamily {
    pub levels: Vec<SphereMapLevel>,
    pub exponent: PExponent,
    pub delta: f64,
}

impl SphereMapFamily {
    /// Thresholds of non-saturated levels are strictly increasing.
    pub fn separations_increasing(&self) -> bool {
        let finite: Vec<f64> = self
            .levels
            .iter()
            .filter(|l| !l.is_saturated())
            .map(|l| l.separation)
            .collect();
        finite.windows(2).all(|w| w[0] < w[1])
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delta must be positive, got {delta}")))
    }
}

/// Calibrates the level-`n` map at exponent `target`.
///
/// The bandwidth is the largest one found (to about 1%) for which the
/// transported images keep every pair at distance at most `n` within `2^-n`.
pub fn calibrate_level(
    space: &FiniteMetricSpace,
    n: usize,
    target: PExponent,
    delta: f64,
    kind: KernelKind,
) -> Result<SphereMapLevel> {
    let pairs = space.sorted_pairs();
    calibrate_with_pairs(space, &pairs, n, target, delta, kind)
}

fn calibrate_with_pairs(
    space: &FiniteMetricSpace,
    pairs: &[Pair],
    n: usize,
    target: PExponent,
    delta: f64,
    kind: KernelKind,
) -> Result<SphereMapLevel> {
    if n == 0 {
        return Err(Error::InvalidInput("levels start at 1".into()));
    }
    check_delta(delta)?;
    let fail = |reason: String| Error::Calibration { level: n, reason };
    let epsilon = (-(n as f64)).exp2();
    let bounds = mazur_bounds(PExponent::TWO, target);

    // Kernel images at l_2 are never more than sqrt(2) apart.
    let ceiling = bounds.upper(std::f64::consts::SQRT_2).min(2.0);
    if delta / 2.0 >= ceiling {
        return Err(fail(format!(
            "delta/2 = {} is unreachable at p = {target} (ceiling {ceiling})",
            delta / 2.0
        )));
    }

    let radius = n as f64;
    let close = &pairs[..pairs.partition_point(|pair| pair.d <= radius)];
    let min_profile = pairs
        .iter()
        .find(|pair| pair.d > 0.0)
        .map_or(1.0, |pair| kind.profile(pair.d));
    let t_cap = BANDWIDTH_CAP_EXPONENT / min_profile;

    let images_at = |t: f64| -> Result<Vec<LpVector>> {
        transport_images(&build_sphere_map(space, t, kind)?, PExponent::TWO, target)
    };
    let sup_of = |images: &[LpVector]| -> Result<f64> {
        close.iter().try_fold(0.0f64, |m, pair| {
            Ok(m.max(distance_p(&images[pair.i], &images[pair.j], target)?))
        })
    };

    let (t, images, sup) = match close.last() {
        None => {
            let images = images_at(t_cap)?;
            (t_cap, images, 0.0)
        }
        Some(widest) => {
            let g = kind.profile(widest.d);
            // Bandwidth at which the widest close pair sits at l_2 distance d2.
            let t_for = |d2: f64| {
                let half_sq = d2 * d2 / 2.0;
                if half_sq >= 1.0 {
                    t_cap
                } else {
                    (-(-half_sq).ln_1p() / g).min(t_cap)
                }
            };
            let mut t_lo = t_for(bounds.upper_inverse(epsilon) * (1.0 - 1e-9));
            let mut t_hi = t_for(bounds.lower_inverse(epsilon) * (1.0 + 1e-9)).max(t_lo);

            let mut lo_images = images_at(t_lo)?;
            let mut sup_lo = sup_of(&lo_images)?;
            let mut shrink = 0;
            while sup_lo > epsilon {
                shrink += 1;
                if shrink > MAX_SHRINK_STEPS {
                    return Err(fail(format!("no bandwidth reaches epsilon {epsilon}")));
                }
                t_hi = t_lo;
                t_lo /= 2.0;
                lo_images = images_at(t_lo)?;
                sup_lo = sup_of(&lo_images)?;
            }

            let hi_images = images_at(t_hi)?;
            let mut sup_hi = sup_of(&hi_images)?;
            if sup_hi <= epsilon {
                (t_hi, hi_images, sup_hi)
            } else {
                let mut steps = 0;
                let mut side = 0i8;
                let (mut f_lo, mut f_hi) = (log_gap(sup_lo, epsilon), log_gap(sup_hi, epsilon));
                while t_hi / t_lo > BRACKET_RATIO && steps < MAX_SEARCH_STEPS {
                    steps += 1;
                    let (x_lo, x_hi) = (t_lo.ln(), t_hi.ln());
                    let width = x_hi - x_lo;
                    let guess = if f_lo.is_finite() && f_hi > f_lo {
                        x_lo - f_lo * width / (f_hi - f_lo)
                    } else {
                        x_lo + width / 2.0
                    };
                    let x = guess.clamp(x_lo + 0.05 * width, x_hi - 0.05 * width);
                    let t = x.exp();
                    let images = images_at(t)?;
                    let sup = sup_of(&images)?;
                    let f = log_gap(sup, epsilon);
                    if sup <= epsilon {
                        t_lo = t;
                        sup_lo = sup;
                        lo_images = images;
                        f_lo = f;
                        // Illinois step: damp the stale endpoint.
                        if side == -1 {
                            f_hi /= 2.0;
                        }
                        side = -1;
                    } else {
                        t_hi = t;
                        sup_hi = sup;
                        f_hi = f;
                        if side == 1 && f_lo.is_finite() {
                            f_lo /= 2.0;
                        }
                        side = 1;
                    }
                }
                let _ = sup_hi;
                (t_lo, lo_images, sup_lo)
            }
        }
    };

    let profile = FarProfile::measure(&images, pairs, target)?;
    let separation = profile.threshold(delta / 2.0, f64::NEG_INFINITY).unwrap_or(f64::INFINITY);
    let transport = (target != PExponent::TWO).then(|| {
        let l2 = |d: f64| (-2.0 * (-t * kind.profile(d)).exp_m1()).sqrt();
        let l2_sup = close.last().map_or(0.0, |pair| l2(pair.d));
        let l2_inf = pairs
            .iter()
            .find(|pair| pair.d >= separation)
            .map_or(f64::INFINITY, |pair| l2(pair.d));
        TransportRecord {
            from: PExponent::TWO,
            bound_epsilon: bounds.upper(l2_sup),
            bound_delta_half: bounds.lower(l2_inf),
            measured_sup: sup,
            measured_inf: profile.inf_beyond(separation),
        }
    });
    Ok(SphereMapLevel {
        level: n,
        exponent: target,
        images,
        epsilon: sup,
        separation,
        delta_half: delta / 2.0,
        bandwidth: t,
        kernel: kind,
        transport,
        profile,
    })
}

fn log_gap(sup: f64, epsilon: f64) -> f64 {
    if sup > 0.0 {
        (sup / epsilon).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Calibrates levels `1..=levels` and forces the non-saturated thresholds
/// to increase strictly.
pub fn build_family(
    space: &FiniteMetricSpace,
    levels: usize,
    target: PExponent,
    delta: f64,
    kind: KernelKind,
) -> Result<SphereMapFamily> {
    let pairs = space.sorted_pairs();
    let mut out = Vec::with_capacity(levels);
    let mut floor = f64::NEG_INFINITY;
    for n in 1..=levels {
        let mut level = calibrate_with_pairs(space, &pairs, n, target, delta, kind)?;
        if !level.is_saturated() && level.separation <= floor {
            level.separation = level.profile.threshold(delta / 2.0, floor).unwrap_or(f64::INFINITY);
            if let Some(record) = level.transport.as_mut() {
                record.measured_inf = level.profile.inf_beyond(level.separation);
            }
        }
        if !level.is_saturated() {
            floor = level.separation;
        }
        out.push(level);
    }
    Ok(SphereMapFamily { levels: out, exponent: target, delta })
}
