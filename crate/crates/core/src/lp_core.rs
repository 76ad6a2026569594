//! Finite-dimensional `l_p` arithmetic.
//!
//! Everything here works on dense coefficient vectors. Powers `|x|^p` go
//! through `exp(p * ln|x|)` with an explicit zero guard, and every sum is
//! accumulated with Neumaier compensation so that norms stay accurate to
//! roughly one ulp at dimensions in the tens of thousands.

use std::fmt;
use std::ops::{AddAssign, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real exponent `p` in `[1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent(f64);

impl PExponent {
    pub const ONE: PExponent = PExponent(1.0);
    pub const TWO: PExponent = PExponent(2.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 1.0 {
            Ok(PExponent(value))
        } else {
            Err(Error::InvalidExponent(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        PExponent::new(value)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.0
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Neumaier's improvement of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for CompensatedSum {
    #[inline]
    fn add_assign(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc += v;
        }
        acc
    }
}

/// `|x|^e` computed as `exp(e * ln|x|)`, with `|0|^e = 0`.
///
/// Exponents 1 and 2 take the exact arithmetic path.
#[inline]
pub fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else {
        (e * a.ln()).exp()
    }
}

/// Compensated `sum_i |x_i|^p`.
pub fn power_sum(coeffs: &[f64], p: PExponent) -> f64 {
    coeffs
        .iter()
        .map(|&x| abs_pow(x, p.value()))
        .collect::<CompensatedSum>()
        .total()
}

/// Compensated `sum_i |x_i - y_i|^p`. Lengths are not checked.
fn power_sum_diff(x: &[f64], y: &[f64], p: PExponent) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| abs_pow(a - b, p.value()))
        .collect::<CompensatedSum>()
        .total()
}

/// Inverse of `power_sum`: `s^(1/p)`.
#[inline]
pub fn root(s: f64, p: PExponent) -> f64 {
    if s == 0.0 {
        0.0
    } else if p.value() == 1.0 {
        s
    } else if p.value() == 2.0 {
        s.sqrt()
    } else {
        (s.ln() / p.value()).exp()
    }
}

/// A finite coefficient sequence standing in for an element of `l_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LpVector(Vec<f64>);

impl LpVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(LpVector(coeffs))
    }

    pub fn zeros(len: usize) -> Self {
        LpVector(vec![0.0; len])
    }

    /// Wraps coefficients already known to be finite.
    pub(crate) fn from_finite(coeffs: Vec<f64>) -> Self {
        debug_assert!(coeffs.iter().all(|v| v.is_finite()));
        LpVector(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Result<LpVector> {
        LpVector::new(self.0.iter().map(|v| v * alpha).collect())
    }

    pub fn sub(&self, other: &LpVector) -> Result<LpVector> {
        check_len(self, other)?;
        Ok(LpVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// `| ||x||_p - 1 | <= tol`.
    pub fn is_on_sphere(&self, p: PExponent, tol: f64) -> bool {
        (norm_p(self, p) - 1.0).abs() <= tol
    }
}

impl TryFrom<Vec<f64>> for LpVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        LpVector::new(v)
    }
}

impl From<LpVector> for Vec<f64> {
    fn from(v: LpVector) -> Vec<f64> {
        v.0
    }
}

impl Index<usize> for LpVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_len(x: &LpVector, y: &LpVector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    Ok(())
}

/// `(sum_i |x_i|^p)^(1/p)`.
pub fn norm_p(x: &LpVector, p: PExponent) -> f64 {
    root(power_sum(x.as_slice(), p), p)
}

/// `||x - y||_p`.
pub fn distance_p(x: &LpVector, y: &LpVector, p: PExponent) -> Result<f64> {
    check_len(x, y)?;
    Ok(root(power_sum_diff(x.as_slice(), y.as_slice(), p), p))
}

/// `||x - y||_p^p`, the quantity the block bounds are stated in.
pub fn distance_pow_p(x: &LpVector, y: &LpVector, p: PExponent) -> Result<f64> {
    check_len(x, y)?;
    Ok(power_sum_diff(x.as_slice(), y.as_slice(), p))
}

/// Projects `x` radially onto the unit sphere of `l_p`.
pub fn normalize(x: &LpVector, p: PExponent) -> Result<LpVector> {
    let n = norm_p(x, p);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(LpVector(x.0.iter().map(|v| v / n).collect()))
}

/// An element of the `p`-direct sum of finitely many `l_p` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockVector {
    blocks: Vec<LpVector>,
}

impl BlockVector {
    pub fn blocks(&self) -> &[LpVector] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn into_blocks(self) -> Vec<LpVector> {
        self.blocks
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(LpVector::is_zero)
    }

    /// `sum_n ||block_n||_p^p`.
    pub fn norm_pow_p(&self, p: PExponent) -> f64 {
        self.blocks
            .iter()
            .map(|b| power_sum(b.as_slice(), p))
            .collect::<CompensatedSum>()
            .total()
    }

    pub fn norm_p(&self, p: PExponent) -> f64 {
        root(self.norm_pow_p(p), p)
    }

    /// Per-block `||x_n - y_n||_p^p`.
    pub fn block_distances_pow_p(&self, other: &BlockVector, p: PExponent) -> Result<Vec<f64>> {
        self.check_shape(other)?;
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| distance_pow_p(a, b, p))
            .collect()
    }

    /// `||x - y||_p^p` in the direct sum.
    pub fn distance_pow_p(&self, other: &BlockVector, p: PExponent) -> Result<f64> {
        Ok(self
            .block_distances_pow_p(other, p)?
            .into_iter()
            .collect::<CompensatedSum>()
            .total())
    }

    pub fn distance_p(&self, other: &BlockVector, p: PExponent) -> Result<f64> {
        Ok(root(self.distance_pow_p(other, p)?, p))
    }

    pub fn scaled(&self, alpha: f64) -> Result<BlockVector> {
        Ok(BlockVector {
            blocks: self.blocks.iter().map(|b| b.scaled(alpha)).collect::<Result<_>>()?,
        })
    }

    fn check_shape(&self, other: &BlockVector) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::LengthMismatch {
                left: self.blocks.len(),
                right: other.blocks.len(),
            });
        }
        Ok(())
    }
}

/// Assembles blocks into an element of `(sum X_n)_p`.
///
/// `p` is accepted for symmetry with the other operations; the block
/// structure itself does not depend on it.
pub fn direct_sum(blocks: Vec<LpVector>, _p: PExponent) -> BlockVector {
    BlockVector { blocks }
}
