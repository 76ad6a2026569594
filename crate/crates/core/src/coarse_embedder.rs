//! Assembly of `Phi(x) = (phi_n(x) - phi_n(x_0))_n` in the `p`-direct sum
//! and its compression/expansion envelopes.
//!
//! For a pair at distance `d` let `c(d)` count the non-saturated levels with
//! `S_n <= d`. Every counted level contributes at least `(delta/2)^p` to
//! `||Phi(x) - Phi(y)||_p^p`, and levels with `n >= d` contribute at most
//! `2^{-np}` each, which gives
//!
//! ```text
//! c(d) (delta/2)^p  <=  ||Phi(x) - Phi(y)||_p^p  <=  2^p d^p + 1.
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_sphere_maps::{build_family, KernelKind, SphereMapFamily};
use crate::lp_core::{direct_sum, root, BlockVector, LpVector, PExponent};
use crate::metric_spaces::{validate, FiniteMetricSpace};

pub const MAX_LEVELS: usize = 64;
pub const DEFAULT_DELTA: f64 = 1.0;

/// Build parameters. `levels` and `kernel` fall back to space-dependent
/// defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub p: PExponent,
    pub levels: Option<usize>,
    pub delta: f64,
    pub base: usize,
    pub kernel: Option<KernelKind>,
}

impl EmbeddingConfig {
    pub fn new(p: PExponent) -> Self {
        EmbeddingConfig { p, levels: None, delta: DEFAULT_DELTA, base: 0, kernel: None }
    }

    pub fn levels(mut self, levels: usize) -> Self {
        self.levels = Some(levels);
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn base(mut self, base: usize) -> Self {
        self.base = base;
        self
    }

    pub fn kernel(mut self, kernel: KernelKind) -> Self {
        self.kernel = Some(kernel);
        self
    }
}

/// `ceil(diameter) + 2`, clamped to the supported range.
pub fn default_levels(space: &FiniteMetricSpace) -> usize {
    ((space.diameter().ceil() as usize) + 2).clamp(1, MAX_LEVELS)
}

/// Per-level record of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub n: usize,
    /// Certified sup over pairs with `d <= n`.
    pub eps: f64,
    /// Separation threshold; `None` for saturated levels.
    #[serde(rename = "S")]
    pub separation: Option<f64>,
    pub t: f64,
    pub kernel: KernelKind,
}

/// `rho1 <= ||Phi(x) - Phi(y)||_p <= rho2` at a given source distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rho1: f64,
    pub rho2: f64,
}

/// The assembled embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseEmbedding {
    space: FiniteMetricSpace,
    p: PExponent,
    base: usize,
    delta: f64,
    /// Absent when the embedding was read back from JSON.
    family: Option<SphereMapFamily>,
    images: Vec<BlockVector>,
    schedule: Vec<LevelSchedule>,
    separations: Vec<f64>,
}

/// Builds `Phi` on a validated space.
pub fn build_embedding(space: &FiniteMetricSpace, config: &EmbeddingConfig) -> Result<CoarseEmbedding> {
    let report = validate(space);
    if let Some(first) = report.violations.first() {
        return Err(Error::InvalidInput(format!("not a metric space: {first}")));
    }
    let levels = config.levels.unwrap_or_else(|| default_levels(space));
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidInput(format!("levels must be in 1..={MAX_LEVELS}, got {levels}")));
    }
    if config.base >= space.len() {
        return Err(Error::InvalidInput(format!(
            "base index {} out of range for {} points",
            config.base,
            space.len()
        )));
    }
    let kernel = config.kernel.unwrap_or_else(|| KernelKind::default_for(space));
    let family = build_family(space, levels, config.p, config.delta, kernel)?;

    let images = (0..space.len())
        .map(|x| {
            let blocks = family
                .levels
                .iter()
                .map(|level| level.images[x].sub(&level.images[config.base]))
                .collect::<Result<Vec<LpVector>>>()?;
            Ok(direct_sum(blocks, config.p))
        })
        .collect::<Result<Vec<_>>>()?;
    let schedule = family
        .levels
        .iter()
        .map(|level| LevelSchedule {
            n: level.level,
            eps: level.epsilon,
            separation: (!level.is_saturated()).then_some(level.separation),
            t: level.bandwidth,
            kernel: level.kernel,
        })
        .collect::<Vec<_>>();
    Ok(CoarseEmbedding {
        space: space.clone(),
        p: config.p,
        base: config.base,
        delta: config.delta,
        separations: separations_of(&schedule),
        family: Some(family),
        images,
        schedule,
    })
}

fn separations_of(schedule: &[LevelSchedule]) -> Vec<f64> {
    let mut s: Vec<f64> = schedule.iter().filter_map(|l| l.separation).collect();
    s.sort_by(f64::total_cmp);
    s
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingFile {
    p: PExponent,
    base: usize,
    delta: f64,
    schedule: Vec<LevelSchedule>,
    images: BTreeMap<String, Vec<Vec<f64>>>,
}

impl CoarseEmbedding {
    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn p(&self) -> PExponent {
        self.p
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn family(&self) -> Option<&SphereMapFamily> {
        self.family.as_ref()
    }

    pub fn schedule(&self) -> &[LevelSchedule] {
        &self.schedule
    }

    pub fn level_count(&self) -> usize {
        self.schedule.len()
    }

    pub fn images(&self) -> &[BlockVector] {
        &self.images
    }

    pub fn image(&self, index: usize) -> Result<&BlockVector> {
        self.images.get(index).ok_or_else(|| Error::UnknownPoint(index.to_string()))
    }

    /// The image of the point with the given label.
    pub fn evaluate(&self, label: &str) -> Result<&BlockVector> {
        let index = self.space.index_of(label).ok_or_else(|| Error::UnknownPoint(label.to_string()))?;
        Ok(&self.images[index])
    }

    /// Overwrites one image; the block layout must match.
    pub fn set_image(&mut self, index: usize, image: BlockVector) -> Result<()> {
        let current = self.image(index)?;
        if current.block_count() != image.block_count()
            || current.blocks().iter().zip(image.blocks()).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::InvalidInput("image layout does not match the schedule".into()));
        }
        self.images[index] = image;
        Ok(())
    }

    /// `||Phi(x_i) - Phi(x_j)||_p^p`.
    pub fn pair_distance_pow_p(&self, i: usize, j: usize) -> Result<f64> {
        self.image(i)?.distance_pow_p(self.image(j)?, self.p)
    }

    /// Number of non-saturated levels with `S_n <= d`.
    pub fn certified_levels(&self, d: f64) -> usize {
        self.separations.partition_point(|&s| s <= d)
    }

    /// `rho1(d) = (delta/2) c(d)^{1/p}`, `rho2(d) = (2^p d^p + 1)^{1/p}`.
    pub fn theoretical_bounds(&self, d: f64) -> Envelope {
        let p = self.p.value();
        let count = self.certified_levels(d) as f64;
        Envelope {
            rho1: self.delta / 2.0 * root(count, self.p),
            rho2: root((2.0 * d).powf(p) + 1.0, self.p),
        }
    }

    /// Compression function in the form `delta * k^{1/p}` on `[S_{k-1}, S_k)`,
    /// reported next to the one the level estimates actually support.
    pub fn rho1_displayed(&self, d: f64) -> f64 {
        self.delta * root(self.certified_levels(d) as f64 + 1.0, self.p)
    }

    /// `sum_{n > N} 2^{-np} = 2^{-Np} / (2^p - 1)`.
    pub fn tail_bound(&self) -> f64 {
        let p = self.p.value();
        (-(self.level_count() as f64) * p).exp2() / (p.exp2() - 1.0)
    }

    pub fn to_json(&self) -> String {
        let images = self
            .space
            .labels()
            .iter()
            .zip(&self.images)
            .map(|(label, image)| {
                let blocks = image.blocks().iter().map(|b| b.as_slice().to_vec()).collect();
                (label.clone(), blocks)
            })
            .collect();
        let file = EmbeddingFile {
            p: self.p,
            base: self.base,
            delta: self.delta,
            schedule: self.schedule.clone(),
            images,
        };
        serde_json::to_string(&file).expect("embedding serializes")
    }

    /// Reads an embedding written by [`CoarseEmbedding::to_json`] for `space`.
    pub fn from_json(text: &str, space: &FiniteMetricSpace) -> Result<CoarseEmbedding> {
        let bad = |msg: String| Error::InvalidInput(format!("embedding JSON: {msg}"));
        let mut file: EmbeddingFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.base >= space.len() {
            return Err(bad(format!("base {} out of range", file.base)));
        }
        if !(file.delta.is_finite() && file.delta > 0.0) {
            return Err(bad(format!("delta {} must be positive", file.delta)));
        }
        if file.images.len() != space.len() {
            return Err(bad(format!("{} images for {} points", file.images.len(), space.len())));
        }
        let levels = file.schedule.len();
        let mut images = Vec::with_capacity(space.len());
        for label in space.labels() {
            let blocks = file.images.remove(label).ok_or_else(|| bad(format!("no image for {label:?}")))?;
            if blocks.len() != levels {
                return Err(bad(format!("{label:?} has {} blocks, schedule has {levels}", blocks.len())));
            }
            let blocks = blocks.into_iter().map(LpVector::new).collect::<Result<Vec<_>>>()?;
            images.push(direct_sum(blocks, file.p));
        }
        for level in 0..levels {
            let width = images[0].blocks()[level].len();
            if images.iter().any(|im: &BlockVector| im.blocks()[level].len() != width) {
                return Err(bad(format!("block {} has inconsistent widths", level + 1)));
            }
        }
        Ok(CoarseEmbedding {
            space: space.clone(),
            p: file.p,
            base: file.base,
            delta: file.delta,
            family: None,
            images,
            separations: separations_of(&file.schedule),
            schedule: file.schedule,
        })
    }
}
