//! Empirical compression/expansion profiles and envelope verification.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coarse_embedder::CoarseEmbedding;
use crate::error::{Error, Result};
use crate::lp_core::{root, PExponent};

/// Violations within this much of their bound are only counted as marginal.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// A pair whose image distance leaves its envelope. `measured` and `bound`
/// are `p`-th powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub pair: (usize, usize),
    pub distance: f64,
    pub measured: f64,
    pub bound: f64,
    pub side: Side,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub violations: Vec<Violation>,
    /// Pairs outside an envelope by no more than the tolerance.
    pub marginal: usize,
}

impl Verification {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct PairSample {
    i: usize,
    j: usize,
    d: f64,
    pow: f64,
}

fn scan_pairs(e: &CoarseEmbedding) -> Result<Vec<PairSample>> {
    let n = e.space().len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(PairSample { i, j, d: e.space().dist(i, j), pow: e.pair_distance_pow_p(i, j)? });
        }
    }
    Ok(out)
}

fn classify(samples: &[PairSample], e: &CoarseEmbedding) -> Verification {
    let p = e.p().value();
    let half_pow = (e.delta() / 2.0).powf(p);
    let mut out = Verification::default();
    let mut check = |s: &PairSample, measured: f64, bound: f64, side: Side| {
        let excess = match side {
            Side::Upper => measured - bound,
            Side::Lower => bound - measured,
        };
        if excess > VIOLATION_TOLERANCE {
            out.violations.push(Violation { pair: (s.i, s.j), distance: s.d, measured, bound, side });
        } else if excess > 0.0 {
            out.marginal += 1;
        }
    };
    for s in samples {
        let upper = (2.0 * s.d).powf(p) + 1.0;
        check(s, s.pow, upper, Side::Upper);
        let count = e.certified_levels(s.d);
        if count > 0 {
            check(s, s.pow, count as f64 * half_pow, Side::Lower);
        }
    }
    out
}

/// Checks every pair against `2^p d^p + 1` and `c(d) (delta/2)^p`.
pub fn verify_bounds(e: &CoarseEmbedding) -> Result<Verification> {
    Ok(classify(&scan_pairs(e)?, e))
}

/// Image distances of the pairs whose source distance falls in `[t_lo, t_hi)`
/// (the last bucket is closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub t_lo: f64,
    pub t_hi: f64,
    pub emp_min: Option<f64>,
    pub emp_max: Option<f64>,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    pub p: PExponent,
    pub delta: f64,
    pub buckets: Vec<Bucket>,
    /// Envelopes sampled at the `bucket_count + 1` bucket edges.
    pub rho1_theory: Vec<f64>,
    pub rho2_theory: Vec<f64>,
    /// The `delta k^{1/p}` compression form at the same edges.
    pub rho1_displayed: Vec<f64>,
    pub violations: Vec<Violation>,
    pub marginal: usize,
}

impl DistortionProfile {
    pub fn from_json(bytes: &[u8]) -> Result<DistortionProfile> {
        serde_json::from_slice(bytes).map_err(|e| Error::InvalidInput(format!("profile JSON: {e}")))
    }
}

/// Buckets all pairs by source distance over `[0, diameter]`.
pub fn empirical_profile(e: &CoarseEmbedding, bucket_count: usize) -> Result<DistortionProfile> {
    if bucket_count == 0 {
        return Err(Error::InvalidInput("bucket count must be positive".into()));
    }
    let samples = scan_pairs(e)?;
    let diameter = e.space().diameter();
    let width = diameter / bucket_count as f64;
    let edges: Vec<f64> = (0..=bucket_count)
        .map(|k| if k == bucket_count { diameter } else { k as f64 * width })
        .collect();
    let mut buckets: Vec<Bucket> = edges
        .windows(2)
        .map(|w| Bucket { t_lo: w[0], t_hi: w[1], emp_min: None, emp_max: None, pair_count: 0 })
        .collect();
    for s in &samples {
        let k = if diameter > 0.0 {
            ((s.d / width) as usize).min(bucket_count - 1)
        } else {
            0
        };
        let b = &mut buckets[k];
        let value = root(s.pow, e.p());
        b.emp_min = Some(b.emp_min.map_or(value, |m| m.min(value)));
        b.emp_max = Some(b.emp_max.map_or(value, |m| m.max(value)));
        b.pair_count += 1;
    }
    let verification = classify(&samples, e);
    Ok(DistortionProfile {
        p: e.p(),
        delta: e.delta(),
        rho1_theory: edges.iter().map(|&t| e.theoretical_bounds(t).rho1).collect(),
        rho2_theory: edges.iter().map(|&t| e.theoretical_bounds(t).rho2).collect(),
        rho1_displayed: edges.iter().map(|&t| e.rho1_displayed(t)).collect(),
        buckets,
        violations: verification.violations,
        marginal: verification.marginal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "t_lo,t_hi,pair_count,emp_min,emp_max,rho1,rho2";

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

/// Renders a profile. CSV rows carry `rho1` at `t_lo` and `rho2` at `t_hi`.
pub fn export(profile: &DistortionProfile, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Json => serde_json::to_vec_pretty(profile).expect("profile serializes"),
        ExportFormat::Csv => {
            let mut out = String::new();
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (k, b) in profile.buckets.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(b.t_lo),
                    num(b.t_hi),
                    b.pair_count,
                    b.emp_min.map(num).unwrap_or_default(),
                    b.emp_max.map(num).unwrap_or_default(),
                    num(profile.rho1_theory[k]),
                    num(profile.rho2_theory[k + 1]),
                );
            }
            out.into_bytes()
        }
    }
}
