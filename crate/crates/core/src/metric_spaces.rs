//! Finite metric spaces: dense distance matrices, generators for the test
//! corpora (Hamming cubes, cycles, paths, Gaussian clouds) and validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_core::CompensatedSum;

/// Largest supported number of points.
pub const MAX_POINTS: usize = 4096;
pub const MAX_HYPERCUBE_DIM: usize = 12;
pub const DEFAULT_GAUSSIAN_DIM: usize = 8;

const TRIANGLE_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const MAX_LISTED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Hypercube,
    Cycle,
    Gaussian,
    Path,
}

impl SpaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpaceKind::Hypercube => "hypercube",
            SpaceKind::Cycle => "cycle",
            SpaceKind::Gaussian => "gaussian",
            SpaceKind::Path => "path",
        }
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypercube" => Ok(SpaceKind::Hypercube),
            "cycle" => Ok(SpaceKind::Cycle),
            "gaussian" => Ok(SpaceKind::Gaussian),
            "path" => Ok(SpaceKind::Path),
            other => Err(Error::InvalidInput(format!("unknown space kind {other:?}"))),
        }
    }
}

/// Provenance recorded alongside generated spaces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceMeta {
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub param: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A finite set of labelled points with a dense distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    meta: SpaceMeta,
    coords: Option<Vec<Vec<f64>>>,
}

/// One unordered pair `i < j` at distance `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub d: f64,
}

impl FiniteMetricSpace {
    /// Builds a space from a square matrix. Only the shape and finiteness are
    /// checked here; metric axioms are reported by [`validate`].
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>, meta: SpaceMeta) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidInput("a metric space needs at least one point".into()));
        }
        if n > MAX_POINTS {
            return Err(Error::InvalidInput(format!("{n} points exceeds the limit of {MAX_POINTS}")));
        }
        if rows.len() != n {
            return Err(Error::InvalidInput(format!("{n} labels but {} matrix rows", rows.len())));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            dist.extend(row);
        }
        if let Some(idx) = dist.iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFinite { index: idx, value: dist[idx] });
        }
        Ok(FiniteMetricSpace { labels, dist, meta, coords: None })
    }

    fn from_fn(labels: Vec<String>, meta: SpaceMeta, f: impl Fn(usize, usize) -> f64) -> Self {
        let n = labels.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        FiniteMetricSpace { labels, dist, meta, coords: None }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn meta(&self) -> &SpaceMeta {
        &self.meta
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sample coordinates, for Gaussian clouds.
    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// All pairs `i < j`, sorted by ascending distance.
    pub fn sorted_pairs(&self) -> Vec<Pair> {
        let n = self.len();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push(Pair { i, j, d: self.dist(i, j) });
            }
        }
        pairs.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
        pairs
    }

    pub fn to_json(&self) -> String {
        let file = SpaceFile {
            labels: self.labels.clone(),
            dist: (0..self.len()).map(|i| self.row(i).to_vec()).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).expect("space serializes")
    }

    /// Parses the JSON space format. Metric axioms are not enforced here;
    /// run [`validate`] (or [`FiniteMetricSpace::validated`]) afterwards.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("space JSON: {e}")))?;
        FiniteMetricSpace::from_rows(file.labels, file.dist, file.meta)
    }

    /// Returns `self` if it satisfies every metric axiom.
    pub fn validated(self) -> Result<Self> {
        let report = validate(&self);
        match report.violations.first() {
            None => Ok(self),
            Some(first) => Err(Error::InvalidInput(format!(
                "not a metric space: {} violation(s), first: {first}",
                report.violation_count
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceFile {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    #[serde(default)]
    meta: SpaceMeta,
}

/// Generates one of the built-in test spaces.
///
/// `hypercube(k)` is `{0,1}^k` under Hamming distance, `cycle(n)` and
/// `path(n)` are graph metrics, and `gaussian(n)` draws `n` standard normal
/// points in dimension 8 under Euclidean distance.
pub fn generate(kind: SpaceKind, param: usize, seed: Option<u64>) -> Result<FiniteMetricSpace> {
    generate_with_dim(kind, param, seed, DEFAULT_GAUSSIAN_DIM)
}

/// [`generate`] with the Gaussian ambient dimension overridden.
pub fn generate_with_dim(
    kind: SpaceKind,
    param: usize,
    seed: Option<u64>,
    gaussian_dim: usize,
) -> Result<FiniteMetricSpace> {
    if param == 0 {
        return Err(Error::InvalidInput("param must be positive".into()));
    }
    let meta = SpaceMeta {
        kind: Some(kind.as_str().to_string()),
        param: Some(param as u64),
        seed,
    };
    let point_limit = |n: usize| {
        if n > MAX_POINTS {
            Err(Error::InvalidInput(format!("{n} points exceeds the limit of {MAX_POINTS}")))
        } else {
            Ok(())
        }
    };
    let space = match kind {
        SpaceKind::Hypercube => {
            if param > MAX_HYPERCUBE_DIM {
                return Err(Error::InvalidInput(format!(
                    "hypercube dimension {param} exceeds {MAX_HYPERCUBE_DIM}"
                )));
            }
            let labels = (0..1usize << param).map(|v| format!("{v:0param$b}")).collect();
            FiniteMetricSpace::from_fn(labels, meta, |i, j| (i ^ j).count_ones() as f64)
        }
        SpaceKind::Cycle => {
            point_limit(param)?;
            let labels = (0..param).map(|i| i.to_string()).collect();
            FiniteMetricSpace::from_fn(labels, meta, |i, j| {
                let gap = j.abs_diff(i);
                gap.min(param - gap) as f64
            })
        }
        SpaceKind::Path => {
            point_limit(param)?;
            let labels = (0..param).map(|i| i.to_string()).collect();
            FiniteMetricSpace::from_fn(labels, meta, |i, j| j.abs_diff(i) as f64)
        }
        SpaceKind::Gaussian => {
            point_limit(param)?;
            let seed = seed
                .ok_or_else(|| Error::InvalidInput("gaussian spaces require a seed".into()))?;
            if gaussian_dim == 0 {
                return Err(Error::InvalidInput("gaussian dimension must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coords: Vec<Vec<f64>> = (0..param)
                .map(|_| (0..gaussian_dim).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            let labels = (0..param).map(|i| i.to_string()).collect();
            let mut space = FiniteMetricSpace::from_fn(labels, meta, |i, j| euclidean(&coords[i], &coords[j]));
            space.coords = Some(coords);
            space
        }
    };
    Ok(space)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .collect::<CompensatedSum>()
        .total()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    NonZeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize, forward: f64, backward: f64 },
    NonPositive { i: usize, j: usize, value: f64 },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Violation::NonZeroDiagonal { i, value } => write!(f, "dist({i},{i}) = {value}"),
            Violation::Asymmetric { i, j, forward, backward } => {
                write!(f, "dist({i},{j}) = {forward} but dist({j},{i}) = {backward}")
            }
            Violation::NonPositive { i, j, value } => write!(f, "dist({i},{j}) = {value} is not positive"),
            Violation::Triangle { i, j, k, excess } => {
                write!(f, "dist({i},{k}) exceeds dist({i},{j}) + dist({j},{k}) by {excess}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// The first violations found, capped at 100 entries.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub diameter: f64,
    /// `None` for a single point.
    pub min_positive_distance: Option<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks every metric axiom. Violations are returned as data.
pub fn validate(space: &FiniteMetricSpace) -> ValidationReport {
    let n = space.len();
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut push = |v: Violation| {
        count += 1;
        if violations.len() < MAX_LISTED_VIOLATIONS {
            violations.push(v);
        }
    };
    let mut min_positive: Option<f64> = None;
    for i in 0..n {
        let dii = space.dist(i, i);
        if dii != 0.0 {
            push(Violation::NonZeroDiagonal { i, value: dii });
        }
        for j in (i + 1)..n {
            let (a, b) = (space.dist(i, j), space.dist(j, i));
            if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()).max(1.0) {
                push(Violation::Asymmetric { i, j, forward: a, backward: b });
            }
            for value in [a, b] {
                if value > 0.0 {
                    min_positive = Some(min_positive.map_or(value, |m: f64| m.min(value)));
                }
            }
            if a <= 0.0 || b <= 0.0 {
                push(Violation::NonPositive { i, j, value: a.min(b) });
            }
        }
    }
    for i in 0..n {
        let row_i = space.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let dij = row_i[j];
            let row_j = space.row(j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let excess = row_i[k] - (dij + row_j[k]);
                if excess > TRIANGLE_TOLERANCE {
                    push(Violation::Triangle { i, j, k, excess });
                }
            }
        }
    }
    ValidationReport {
        violations,
        violation_count: count,
        diameter: space.diameter(),
        min_positive_distance: min_positive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn hypercube_three() {
        let s = generate(SpaceKind::Hypercube, 3, None).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.diameter(), 3.0);
        assert_eq!(s.labels()[5], "101");
    }

    #[test]
    fn cycle_five_uses_shortest_arc() {
        let s = generate(SpaceKind::Cycle, 5, None).unwrap();
        assert_eq!(s.dist(0, 2), 2.0);
        assert_eq!(s.dist(0, 3), 2.0);
        assert_eq!(s.dist(0, 4), 1.0);
    }

    #[test]
    fn path_is_index_gap() {
        let s = generate(SpaceKind::Path, 6, None).unwrap();
        assert_eq!(s.dist(1, 5), 4.0);
        assert_eq!(s.diameter(), 5.0);
    }

    #[test]
    fn gaussian_is_deterministic_per_seed() {
        let a = generate(SpaceKind::Gaussian, 50, Some(42)).unwrap();
        let b = generate(SpaceKind::Gaussian, 50, Some(42)).unwrap();
        let c = generate(SpaceKind::Gaussian, 50, Some(43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.dist(0, 1), c.dist(0, 1));
        assert_eq!(a.coords().unwrap()[0].len(), DEFAULT_GAUSSIAN_DIM);
    }

    #[test]
    fn gaussian_dimension_override() {
        let s = generate_with_dim(SpaceKind::Gaussian, 10, Some(1), 3).unwrap();
        assert_eq!(s.coords().unwrap()[4].len(), 3);
    }

    #[test]
    fn parameter_errors() {
        assert!(generate(SpaceKind::Hypercube, 13, None).is_err());
        assert!(generate(SpaceKind::Cycle, 0, None).is_err());
        assert!(generate(SpaceKind::Path, MAX_POINTS + 1, None).is_err());
        assert!(generate(SpaceKind::Gaussian, 10, None).is_err());
    }

    #[test]
    fn hypercube_four_is_valid() {
        let report = validate(&generate(SpaceKind::Hypercube, 4, None).unwrap());
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(report.diameter, 4.0);
        assert_eq!(report.min_positive_distance, Some(1.0));
    }

    #[test]
    fn asymmetry_is_reported() {
        let rows = vec![vec![0.0, 1.0], vec![1.5, 0.0]];
        let s = FiniteMetricSpace::from_rows(labels(2), rows, SpaceMeta::default()).unwrap();
        let report = validate(&s);
        assert!(matches!(report.violations[0], Violation::Asymmetric { i: 0, j: 1, .. }));
    }

    #[test]
    fn triangle_violation_is_reported() {
        let rows = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let s = FiniteMetricSpace::from_rows(labels(3), rows, SpaceMeta::default()).unwrap();
        let report = validate(&s);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Triangle { i: 0, j: 1, k: 2, .. })));
        assert!(s.validated().is_err());
    }

    #[test]
    fn zero_distance_between_distinct_points() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let s = FiniteMetricSpace::from_rows(labels(2), rows, SpaceMeta::default()).unwrap();
        assert!(matches!(validate(&s).violations[0], Violation::NonPositive { .. }));
    }

    #[test]
    fn shape_errors() {
        assert!(FiniteMetricSpace::from_rows(labels(2), vec![vec![0.0]], SpaceMeta::default()).is_err());
        assert!(FiniteMetricSpace::from_rows(vec![], vec![], SpaceMeta::default()).is_err());
        let nan = vec![vec![0.0, f64::NAN], vec![1.0, 0.0]];
        assert!(FiniteMetricSpace::from_rows(labels(2), nan, SpaceMeta::default()).is_err());
    }

    #[test]
    fn json_round_trip_preserves_matrix() {
        let s = generate(SpaceKind::Gaussian, 12, Some(3)).unwrap();
        let back = FiniteMetricSpace::from_json(&s.to_json()).unwrap();
        assert_eq!(back.labels(), s.labels());
        for i in 0..s.len() {
            assert_eq!(back.row(i), s.row(i));
        }
        assert_eq!(back.meta(), s.meta());
    }

    #[test]
    fn sorted_pairs_cover_all() {
        let s = generate(SpaceKind::Cycle, 7, None).unwrap();
        let pairs = s.sorted_pairs();
        assert_eq!(pairs.len(), 21);
        assert!(pairs.windows(2).all(|w| w[0].d <= w[1].d));
    }
}
