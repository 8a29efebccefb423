//! Well-separated `2^i`-nets, their hierarchies and the clustering
//! distributions they induce.
//!
//! A net at scale `s` is a set of centers such that every point is within `s`
//! of some center (net) and distinct centers are more than `s` apart
//! (packing). All logarithms are base 2 and all balls are closed.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WitError};
use crate::metric::{Distribution, FiniteMetricSpace};

/// One level `N_i` with the nearest-center map `π_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetLevel {
    pub level: i32,
    pub scale: f64,
    /// Point indices of the centers; position in this list is the center index.
    pub centers: Vec<usize>,
    /// For each point, the index (into `centers`) of its nearest center.
    pub assign: Vec<usize>,
}

impl NetLevel {
    /// Wraps an explicit center list, assigning each point to its nearest
    /// center with ties going to the lowest center index.
    pub fn from_centers(space: &FiniteMetricSpace, level: i32, centers: Vec<usize>) -> Self {
        let assign = nearest_assignment(space, &centers);
        Self { level, scale: scale_of(level), centers, assign }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `π_i(y)` as a point index.
    pub fn nearest_center(&self, y: usize) -> usize {
        self.centers[self.assign[y]]
    }
}

pub fn scale_of(level: i32) -> f64 {
    2f64.powi(level)
}

fn nearest_assignment(space: &FiniteMetricSpace, centers: &[usize]) -> Vec<usize> {
    (0..space.len())
        .map(|y| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = space.dist(c, y);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Visiting order for the greedy construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NetOrder {
    #[default]
    Index,
    Shuffled(u64),
}

impl NetOrder {
    fn order(self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        if let NetOrder::Shuffled(seed) = self {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        order
    }
}

/// Greedy pass in point-index order: a point becomes a center iff it is more
/// than `scale` away from every center chosen so far.
pub fn build_net(space: &FiniteMetricSpace, scale: f64) -> Result<NetLevel> {
    build_net_ordered(space, scale, NetOrder::Index)
}

pub fn build_net_ordered(space: &FiniteMetricSpace, scale: f64, order: NetOrder) -> Result<NetLevel> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(WitError::InvalidParameter(format!("net scale must be positive, got {scale}")));
    }
    let mut centers: Vec<usize> = Vec::new();
    for x in order.order(space.len()) {
        if centers.iter().all(|&c| space.dist(c, x) > scale) {
            centers.push(x);
        }
    }
    let assign = nearest_assignment(space, &centers);
    Ok(NetLevel { level: scale.log2().floor() as i32, scale, centers, assign })
}

/// Outcome of [`validate_level`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LevelCheck {
    Checked,
    /// A point with no center within the scale.
    NetViolation { point: usize },
    /// Two distinct centers at distance `<=` the scale.
    PackingViolation { a: usize, b: usize, dist: f64 },
    /// A point not mapped to (one of) its nearest centers.
    AssignmentViolation { point: usize },
    /// A center index outside the space, or a repeated center.
    BadCenter { center: usize },
}

impl LevelCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, LevelCheck::Checked)
    }
}

/// Checks both net predicates verbatim, then the assignment.
pub fn validate_level(space: &FiniteMetricSpace, level: &NetLevel) -> LevelCheck {
    let n = space.len();
    let mut seen = vec![false; n];
    for &c in &level.centers {
        if c >= n || seen[c] {
            return LevelCheck::BadCenter { center: c };
        }
        seen[c] = true;
    }
    for x in 0..n {
        if !level.centers.iter().any(|&c| space.dist(c, x) <= level.scale) {
            return LevelCheck::NetViolation { point: x };
        }
    }
    for (j, &a) in level.centers.iter().enumerate() {
        for &b in &level.centers[j + 1..] {
            let d = space.dist(a, b);
            if d <= level.scale {
                return LevelCheck::PackingViolation { a, b, dist: d };
            }
        }
    }
    if level.assign.len() != n {
        return LevelCheck::AssignmentViolation { point: level.assign.len().min(n) };
    }
    for y in 0..n {
        let j = level.assign[y];
        if j >= level.centers.len() {
            return LevelCheck::AssignmentViolation { point: y };
        }
        let d = space.dist(level.centers[j], y);
        if level.centers.iter().any(|&c| space.dist(c, y) < d) {
            return LevelCheck::AssignmentViolation { point: y };
        }
    }
    LevelCheck::Checked
}

/// `l = ⌊log₂(ε/8)⌋`, `r = ⌈log₂ D⌉`, computed without rounding drift.
pub fn level_range(epsilon: f64, diameter: f64) -> (i32, i32) {
    let target = epsilon / 8.0;
    let mut l = target.log2().floor() as i32;
    while scale_of(l + 1) <= target {
        l += 1;
    }
    while scale_of(l) > target {
        l -= 1;
    }
    if diameter <= 0.0 {
        return (l, l);
    }
    let mut r = diameter.log2().ceil() as i32;
    while scale_of(r - 1) >= diameter {
        r -= 1;
    }
    while scale_of(r) < diameter {
        r += 1;
    }
    (l, r)
}

/// Nets `N_l, ..., N_r` and the parent maps between consecutive levels.
#[derive(Debug, Clone)]
pub struct NetHierarchy {
    space: Arc<FiniteMetricSpace>,
    epsilon: f64,
    l: i32,
    r: i32,
    levels: Vec<NetLevel>,
    parent: Vec<Vec<usize>>,
}

impl NetHierarchy {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lowest(&self) -> i32 {
        self.l
    }

    pub fn highest(&self) -> i32 {
        self.r
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[NetLevel] {
        &self.levels
    }

    pub fn level(&self, i: i32) -> Result<&NetLevel> {
        self.check_level(i)?;
        Ok(&self.levels[(i - self.l) as usize])
    }

    pub fn check_level(&self, i: i32) -> Result<()> {
        if i < self.l || i > self.r {
            return Err(WitError::LevelOutOfRange { level: i, lo: self.l, hi: self.r });
        }
        Ok(())
    }

    /// For a center index of `N_i` (`i < r`), the index of its parent in `N_{i+1}`.
    pub fn parent_map(&self, i: i32) -> Result<&[usize]> {
        self.check_level(i)?;
        if i == self.r {
            return Err(WitError::LevelOutOfRange { level: i, lo: self.l, hi: self.r - 1 });
        }
        Ok(&self.parent[(i - self.l) as usize])
    }

    /// Builds every level with the greedy construction at scale `2^i`.
    pub fn build(space: Arc<FiniteMetricSpace>, epsilon: f64) -> Result<Self> {
        Self::build_ordered(space, epsilon, NetOrder::Index)
    }

    pub fn build_ordered(space: Arc<FiniteMetricSpace>, epsilon: f64, order: NetOrder) -> Result<Self> {
        let (l, r) = checked_range(epsilon, space.diameter())?;
        let levels = (l..=r)
            .map(|i| {
                build_net_ordered(&space, scale_of(i), order).map(|mut lvl| {
                    lvl.level = i;
                    lvl
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(space, epsilon, l, r, levels)
    }

    /// Uses caller-supplied levels (any superset of `[l, r]` is accepted).
    /// Every level is validated; the top level must be a single center.
    pub fn from_levels(space: Arc<FiniteMetricSpace>, epsilon: f64, levels: Vec<NetLevel>) -> Result<Self> {
        let (l, r) = checked_range(epsilon, space.diameter())?;
        let mut picked = Vec::with_capacity((r - l + 1) as usize);
        for i in l..=r {
            let lvl = levels
                .iter()
                .find(|lv| lv.level == i)
                .ok_or_else(|| WitError::InvalidParameter(format!("no net supplied for level {i}")))?;
            let mut lvl = lvl.clone();
            lvl.scale = scale_of(i);
            match validate_level(&space, &lvl) {
                LevelCheck::Checked => picked.push(lvl),
                bad => {
                    return Err(WitError::InvalidParameter(format!("level {i} fails validation: {bad:?}")))
                }
            }
        }
        Self::assemble(space, epsilon, l, r, picked)
    }

    fn assemble(
        space: Arc<FiniteMetricSpace>,
        epsilon: f64,
        l: i32,
        r: i32,
        levels: Vec<NetLevel>,
    ) -> Result<Self> {
        if levels[levels.len() - 1].len() != 1 {
            return Err(WitError::InvalidParameter("top level must hold exactly one center".into()));
        }
        let parent = levels
            .windows(2)
            .map(|w| w[0].centers.iter().map(|&c| w[1].assign[c]).collect())
            .collect();
        Ok(Self { space, epsilon, l, r, levels, parent })
    }

    /// Validates every level (in parallel); returns the first failure.
    pub fn validate(&self) -> std::result::Result<(), (i32, LevelCheck)> {
        let checks: Vec<(i32, LevelCheck)> = self
            .levels
            .par_iter()
            .map(|lv| (lv.level, validate_level(&self.space, lv)))
            .collect();
        match checks.into_iter().find(|(_, c)| !c.is_ok()) {
            Some(bad) => Err(bad),
            None => Ok(()),
        }
    }

    pub fn to_document(&self) -> HierarchyDocument {
        HierarchyDocument {
            format: HIERARCHY_FORMAT.into(),
            points: self.space.len(),
            epsilon: self.epsilon,
            l: self.l,
            r: self.r,
            levels: self.levels.clone(),
        }
    }

    pub fn from_document(space: Arc<FiniteMetricSpace>, doc: HierarchyDocument) -> Result<Self> {
        if doc.points != space.len() {
            return Err(WitError::SizeMismatch { expected: space.len(), got: doc.points });
        }
        let h = Self::from_levels(space, doc.epsilon, doc.levels)?;
        if (h.l, h.r) != (doc.l, doc.r) {
            return Err(WitError::Parse(format!(
                "document levels [{}, {}] disagree with computed [{}, {}]",
                doc.l, doc.r, h.l, h.r
            )));
        }
        Ok(h)
    }
}

fn checked_range(epsilon: f64, diameter: f64) -> Result<(i32, i32)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(WitError::EpsilonOutOfRange { epsilon, diameter });
    }
    let (l, r) = level_range(epsilon, diameter);
    if l > r && diameter > 0.0 {
        return Err(WitError::EpsilonOutOfRange { epsilon, diameter });
    }
    Ok((l, r.max(l)))
}

pub const HIERARCHY_FORMAT: &str = "wit-hierarchy/1";

/// Serialized hierarchy (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDocument {
    pub format: String,
    pub points: usize,
    pub epsilon: f64,
    pub l: i32,
    pub r: i32,
    pub levels: Vec<NetLevel>,
}

/// `build_hierarchy(space, ε)`.
pub fn build_hierarchy(space: Arc<FiniteMetricSpace>, epsilon: f64) -> Result<NetHierarchy> {
    NetHierarchy::build(space, epsilon)
}

/// Exact sizes from exhaustive subset search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityReport {
    /// Minimum size of a `scale`-net.
    pub min_net: usize,
    /// Maximum size of a `scale`-packing.
    pub max_packing: usize,
    /// Minimum size of a `scale/2`-net.
    pub min_net_half: usize,
}

impl DualityReport {
    /// `N(ε) <= P(ε) <= N(ε/2)`.
    pub fn holds(&self) -> bool {
        self.min_net <= self.max_packing && self.max_packing <= self.min_net_half
    }
}

pub const EXACT_DUALITY_LIMIT: usize = 14;

pub fn net_packing_duality_check(space: &FiniteMetricSpace, scale: f64) -> Result<DualityReport> {
    let n = space.len();
    if n > EXACT_DUALITY_LIMIT {
        return Err(WitError::TooLargeForExact { n, max: EXACT_DUALITY_LIMIT });
    }
    if !(scale > 0.0) {
        return Err(WitError::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    Ok(DualityReport {
        min_net: min_net_size(space, scale),
        max_packing: max_packing_size(space, scale),
        min_net_half: min_net_size(space, scale / 2.0),
    })
}

fn min_net_size(space: &FiniteMetricSpace, scale: f64) -> usize {
    let n = space.len();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let cover: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&y| space.dist(c, y) <= scale).fold(0u32, |m, y| m | (1 << y)))
        .collect();
    (1u32..=full)
        .filter(|s| {
            let mut m = 0u32;
            for (c, cv) in cover.iter().enumerate() {
                if s & (1 << c) != 0 {
                    m |= cv;
                }
            }
            m == full
        })
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

fn max_packing_size(space: &FiniteMetricSpace, scale: f64) -> usize {
    let n = space.len();
    let full: u32 = (1u32 << n) - 1;
    let conflict: Vec<u32> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| b != a && space.dist(a, b) <= scale)
                .fold(0u32, |m, b| m | (1 << b))
        })
        .collect();
    (1u32..=full)
        .filter(|s| (0..n).all(|a| s & (1 << a) == 0 || conflict[a] & s == 0))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// `p_i`: mass of each cluster `C_i(x_j)` of level `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDistribution {
    pub level: i32,
    pub mass: Vec<f64>,
}

/// A failure of `p(B(x_j, 2^{i-1})) <= p_i(j) <= p(B(x_j, 2^i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichViolation {
    pub center: usize,
    pub inner: f64,
    pub cluster: f64,
    pub outer: f64,
}

impl ClusterDistribution {
    /// Checks the ball sandwich with exact comparisons. Both sides are summed
    /// in point-index order over nested index sets, so containment of the sets
    /// carries over to the floating-point sums.
    pub fn check_sandwich(&self, net: &NetLevel, p: &Distribution) -> Option<SandwichViolation> {
        let radius = net.scale;
        for (j, &c) in net.centers.iter().enumerate() {
            let inner = p.ball_mass(c, radius / 2.0);
            let outer = p.ball_mass(c, radius);
            let cluster = self.mass[j];
            if !(inner <= cluster && cluster <= outer) {
                return Some(SandwichViolation { center: c, inner, cluster, outer });
            }
        }
        None
    }
}

pub fn cluster_distribution(hierarchy: &NetHierarchy, p: &Distribution, level: i32) -> Result<ClusterDistribution> {
    if !Arc::ptr_eq(hierarchy.space(), p.space()) {
        return Err(WitError::SpaceMismatch);
    }
    let net = hierarchy.level(level)?;
    Ok(cluster_masses(net, p))
}

pub(crate) fn cluster_masses(net: &NetLevel, p: &Distribution) -> ClusterDistribution {
    let mut mass = vec![0.0; net.len()];
    // point-index order, matching ball sums
    for (y, &j) in net.assign.iter().enumerate() {
        mass[j] += p.mass()[y];
    }
    ClusterDistribution { level: net.level, mass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingWitness {
    pub x: usize,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    /// `max p(B(x,2r)) / p(B(x,r))`; `+∞` when a zero-mass ball doubles to positive mass.
    pub constant: f64,
    /// Worst ratios, largest first.
    pub witnesses: Vec<DoublingWitness>,
    pub radii_grid: Vec<f64>,
}

impl DoublingReport {
    pub fn is_finite(&self) -> bool {
        self.constant.is_finite()
    }
}

/// `{2^i : i ∈ [l−1, r]}` for the hierarchy's range.
pub fn default_doubling_radii(hierarchy: &NetHierarchy) -> Vec<f64> {
    (hierarchy.lowest() - 1..=hierarchy.highest()).map(scale_of).collect()
}

const DOUBLING_WITNESSES: usize = 5;

pub fn doubling_constant(space: &FiniteMetricSpace, p: &Distribution, radii: &[f64]) -> Result<DoublingReport> {
    if radii.is_empty() {
        return Err(WitError::InvalidParameter("doubling radii grid is empty".into()));
    }
    if !std::ptr::eq(space, p.space().as_ref()) {
        return Err(WitError::SpaceMismatch);
    }
    let n = space.len();
    let mut all: Vec<DoublingWitness> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            radii.iter().map(move |&r| {
                let (mut inner, mut outer) = (0.0, 0.0);
                for y in 0..n {
                    let d = space.dist(x, y);
                    if d <= r {
                        inner += p.mass()[y];
                    }
                    if d <= 2.0 * r {
                        outer += p.mass()[y];
                    }
                }
                let ratio = if inner > 0.0 {
                    outer / inner
                } else if outer > 0.0 {
                    f64::INFINITY
                } else {
                    1.0
                };
                DoublingWitness { x, r, ratio }
            })
        })
        .collect();
    all.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.x.cmp(&b.x)));
    let constant = all.first().map_or(1.0, |w| w.ratio);
    all.truncate(DOUBLING_WITNESSES);
    Ok(DoublingReport { constant, witnesses: all, radii_grid: radii.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_space, PointMetric};

    fn line(xs: &[f64]) -> Arc<FiniteMetricSpace> {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap())
    }

    fn two_point() -> Arc<FiniteMetricSpace> {
        Arc::new(build_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
    }

    #[test]
    fn coarse_scale_gives_single_center() {
        let s = line(&[0.0, 0.3, 0.7, 1.0]);
        let net = build_net(&s, 1.0).unwrap();
        assert_eq!(net.centers, vec![0]);
        assert!(validate_level(&s, &net).is_ok());
    }

    #[test]
    fn fine_scale_keeps_every_point() {
        let s = line(&[0.0, 0.3, 0.7, 1.0]);
        let net = build_net(&s, 0.2).unwrap();
        assert_eq!(net.centers, vec![0, 1, 2, 3]);
    }

    #[test]
    fn greedy_trace_on_quarter_grid() {
        let s = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let net = build_net(&s, 0.3).unwrap();
        assert_eq!(net.centers, vec![0, 2, 4]);
        assert!(validate_level(&s, &net).is_ok());
        // 0.25 and 0.75 tie between two centers: lowest center index wins.
        assert_eq!(net.assign, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn validation_boundary_cases() {
        let s = two_point();
        let lvl = NetLevel { level: 0, scale: 1.0, centers: vec![0, 1], assign: vec![0, 1] };
        assert!(matches!(validate_level(&s, &lvl), LevelCheck::PackingViolation { .. }));
        let empty = NetLevel { level: 0, scale: 1.0, centers: vec![], assign: vec![0, 0] };
        assert_eq!(validate_level(&s, &empty), LevelCheck::NetViolation { point: 0 });
        let wrong = NetLevel { level: -1, scale: 0.5, centers: vec![0, 1], assign: vec![1, 1] };
        assert_eq!(validate_level(&s, &wrong), LevelCheck::AssignmentViolation { point: 0 });
    }

    #[test]
    fn hierarchy_ranges() {
        let s = two_point();
        let h = build_hierarchy(s.clone(), 8.0).unwrap();
        assert_eq!((h.lowest(), h.highest()), (0, 0));
        assert_eq!(h.num_levels(), 1);
        let h = build_hierarchy(s.clone(), 1.0).unwrap();
        assert_eq!((h.lowest(), h.highest()), (-3, 0));
        assert_eq!(h.level(0).unwrap().len(), 1);
        assert!(matches!(h.level(1), Err(WitError::LevelOutOfRange { .. })));
        assert!(matches!(build_hierarchy(s.clone(), 16.0), Err(WitError::EpsilonOutOfRange { .. })));
        assert!(matches!(build_hierarchy(s, -1.0), Err(WitError::EpsilonOutOfRange { .. })));
    }

    #[test]
    fn level_range_exact_powers() {
        assert_eq!(level_range(0.2, 1.0), (-6, 0));
        assert_eq!(level_range(1.0, 1.0), (-3, 0));
        assert_eq!(level_range(0.125, 3.0), (-6, 2));
        assert_eq!(level_range(1.0, 4.0), (-3, 2));
    }

    #[test]
    fn parent_maps_stay_within_next_scale() {
        let s = line(&[0.0, 0.1, 0.35, 0.4, 0.8, 0.95, 1.0]);
        let h = build_hierarchy(s.clone(), 0.1).unwrap();
        for i in h.lowest()..h.highest() {
            let lvl = h.level(i).unwrap();
            let up = h.level(i + 1).unwrap();
            for (j, &pj) in h.parent_map(i).unwrap().iter().enumerate() {
                assert!(s.dist(lvl.centers[j], up.centers[pj]) <= scale_of(i + 1));
            }
        }
        assert!(h.validate().is_ok());
    }

    #[test]
    fn duality_small_cases() {
        let s = two_point();
        let r = net_packing_duality_check(&s, 0.5).unwrap();
        assert_eq!((r.min_net, r.max_packing), (2, 2));
        let r = net_packing_duality_check(&s, 1.0).unwrap();
        assert_eq!((r.min_net, r.max_packing), (1, 1));
        assert!(r.holds());
        let big = line(&(0..15).map(|i| i as f64).collect::<Vec<_>>());
        assert!(matches!(net_packing_duality_check(&big, 1.0), Err(WitError::TooLargeForExact { .. })));
    }

    #[test]
    fn cluster_distribution_extremes() {
        let s = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = Distribution::from_weights(s.clone(), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let h = build_hierarchy(s, 0.5).unwrap();
        let top = cluster_distribution(&h, &p, h.highest()).unwrap();
        assert_eq!(top.mass.len(), 1);
        assert!((top.mass[0] - 1.0).abs() < 1e-15);
        let bottom = cluster_distribution(&h, &p, h.lowest()).unwrap();
        assert_eq!(bottom.mass, p.mass());
        assert!(matches!(cluster_distribution(&h, &p, 5), Err(WitError::LevelOutOfRange { .. })));
        for i in h.lowest()..=h.highest() {
            let c = cluster_distribution(&h, &p, i).unwrap();
            assert!(c.check_sandwich(h.level(i).unwrap(), &p).is_none());
        }
    }

    #[test]
    fn doubling_examples() {
        let s = line(&[0.0, 1.0, 2.0]);
        let p = Distribution::point_mass(s.clone(), 0).unwrap();
        let rep = doubling_constant(&s, &p, &[0.5, 1.0]).unwrap();
        assert!(rep.constant.is_infinite());
        assert!(rep.witnesses[0].ratio.is_infinite());

        let s = two_point();
        let p = Distribution::uniform(s.clone());
        let rep = doubling_constant(&s, &p, &[0.5]).unwrap();
        assert_eq!(rep.constant, 2.0);
        assert!(doubling_constant(&s, &p, &[]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let s = line(&[0.0, 0.1, 0.35, 0.4, 0.8, 1.0]);
        let h = build_hierarchy(s.clone(), 0.2).unwrap();
        let json = serde_json::to_string(&h.to_document()).unwrap();
        let doc: HierarchyDocument = serde_json::from_str(&json).unwrap();
        let back = NetHierarchy::from_document(s, doc).unwrap();
        assert_eq!(back.levels(), h.levels());
    }

    #[test]
    fn shuffled_order_is_still_valid() {
        let s = line(&[0.0, 0.1, 0.35, 0.4, 0.8, 0.95, 1.0]);
        let h = NetHierarchy::build_ordered(s, 0.1, NetOrder::Shuffled(7)).unwrap();
        assert!(h.validate().is_ok());
    }
}
