//! Built-in spaces, distributions and hard instances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::error::{Result, WitError};
use crate::metric::{build_space, wasserstein_exact, Distribution, FiniteMetricSpace, PointMetric};
use crate::nets::{cluster_masses, level_range, scale_of, NetHierarchy, NetLevel};
use crate::sampling::SampleOracle;

/// The lattice `{0, h, ..., 1}^d`. Points are indexed lexicographically with
/// the first coordinate most significant.
#[derive(Debug, Clone)]
pub struct GridSpace {
    pub dim: usize,
    pub resolution: f64,
    pub metric: PointMetric,
    /// Points per axis, `1/h + 1`.
    pub side: usize,
    space: Arc<FiniteMetricSpace>,
}

fn steps_per_unit(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(WitError::ResolutionIncompatible(format!("resolution must be in (0, 1], got {h}")));
    }
    let m = (1.0 / h).round();
    if ((m * h) - 1.0).abs() > 1e-12 {
        return Err(WitError::ResolutionIncompatible(format!("1/h must be an integer, got h = {h}")));
    }
    Ok(m as usize)
}

pub fn make_grid(dim: usize, h: f64, metric: PointMetric) -> Result<GridSpace> {
    if dim == 0 {
        return Err(WitError::InvalidParameter("grid dimension must be >= 1".into()));
    }
    let m = steps_per_unit(h)?;
    let side = m + 1;
    let count = side
        .checked_pow(dim as u32)
        .filter(|&c| c <= 1 << 22)
        .ok_or_else(|| WitError::InvalidParameter(format!("grid with {side}^{dim} points is too large")))?;
    let mut points = Vec::with_capacity(count);
    for idx in 0..count {
        let mut rest = idx;
        let mut p = vec![0.0; dim];
        for a in (0..dim).rev() {
            p[a] = (rest % side) as f64 / m as f64;
            rest /= side;
        }
        points.push(p);
    }
    let diameter = match metric {
        PointMetric::Linf => 1.0,
        PointMetric::Euclidean => (dim as f64).sqrt(),
    };
    let space = FiniteMetricSpace::from_points_with_diameter(&points, metric, diameter)?;
    Ok(GridSpace { dim, resolution: 1.0 / m as f64, metric, side, space: Arc::new(space) })
}

/// Grid plus a validated hierarchy for `epsilon`.
pub fn make_grid_with_nets(
    dim: usize,
    h: f64,
    metric: PointMetric,
    epsilon: f64,
) -> Result<(Arc<FiniteMetricSpace>, NetHierarchy)> {
    let g = make_grid(dim, h, metric)?;
    let hier = g.hierarchy(epsilon)?;
    Ok((g.space.clone(), hier))
}

impl GridSpace {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, k: &[usize]) -> usize {
        k.iter().fold(0, |acc, &x| acc * self.side + x)
    }

    pub fn axis_indices(&self, mut idx: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            k[a] = idx % self.side;
            idx /= self.side;
        }
        k
    }

    /// For `i <= 0`: lattice of spacing `2^{i+1}` (all points once that is
    /// finer than the grid). Under L-infinity this is a well-separated
    /// `2^i`-net; level 0 is the origin alone.
    pub fn trivial_level(&self, i: i32) -> Result<NetLevel> {
        if self.metric != PointMetric::Linf {
            return Err(WitError::ResolutionIncompatible("explicit lattice nets need the L-infinity metric".into()));
        }
        if i > 0 {
            return Err(WitError::LevelOutOfRange { level: i, lo: i32::MIN, hi: 0 });
        }
        let m = self.side - 1;
        if !m.is_power_of_two() {
            return Err(WitError::ResolutionIncompatible(format!("1/h = {m} is not a power of two")));
        }
        let spacing = scale_of(i + 1);
        // step in grid units; 1 means every point
        let step = ((spacing * m as f64).round() as usize).max(1);
        let axis_centers: Vec<usize> = (0..=m).step_by(step).collect();
        let axis_assign: Vec<usize> = (0..=m)
            .map(|k| {
                let mut best = 0;
                for (j, &c) in axis_centers.iter().enumerate() {
                    if k.abs_diff(c) < k.abs_diff(axis_centers[best]) {
                        best = j;
                    }
                }
                best
            })
            .collect();
        let per_axis = axis_centers.len();
        let mut centers = Vec::with_capacity(per_axis.pow(self.dim as u32));
        for cidx in 0..per_axis.pow(self.dim as u32) {
            let mut rest = cidx;
            let mut k = vec![0; self.dim];
            for a in (0..self.dim).rev() {
                k[a] = axis_centers[rest % per_axis];
                rest /= per_axis;
            }
            centers.push(self.index_of(&k));
        }
        let assign = (0..self.len())
            .map(|y| self.axis_indices(y).iter().fold(0, |acc, &k| acc * per_axis + axis_assign[k]))
            .collect();
        Ok(NetLevel { level: i, scale: scale_of(i), centers, assign })
    }

    /// Lattice nets under L-infinity, greedy nets otherwise.
    pub fn hierarchy(&self, epsilon: f64) -> Result<NetHierarchy> {
        match self.metric {
            PointMetric::Linf => {
                let (l, r) = level_range(epsilon, self.space.diameter());
                if r > 0 {
                    return Err(WitError::ResolutionIncompatible(format!("top level {r} above 0")));
                }
                let levels = (l..=r).map(|i| self.trivial_level(i)).collect::<Result<Vec<_>>>()?;
                NetHierarchy::from_levels(self.space.clone(), epsilon, levels)
            }
            PointMetric::Euclidean => NetHierarchy::build(self.space.clone(), epsilon),
        }
    }
}

/// Uniform cluster masses of the 1-D grid with `1/h + 1` points at lattice
/// level `i`, as point counts.
pub fn axis_cluster_counts(steps: usize, i: i32) -> Vec<u64> {
    let step = ((scale_of(i + 1) * steps as f64).round() as usize).max(1);
    let centers: Vec<usize> = (0..=steps).step_by(step).collect();
    let mut counts = vec![0u64; centers.len()];
    for k in 0..=steps {
        let mut best = 0;
        for (j, &c) in centers.iter().enumerate() {
            if k.abs_diff(c) < k.abs_diff(centers[best]) {
                best = j;
            }
        }
        counts[best] += 1;
    }
    counts
}

/// Distinct values of the product of `dim` copies of `axis` with their
/// multiplicities.
pub fn product_groups(axis: &[f64], dim: usize) -> Vec<(f64, u64)> {
    let mut base: Vec<(f64, u64)> = Vec::new();
    for &v in axis {
        match base.iter_mut().find(|(x, _)| *x == v) {
            Some(g) => g.1 += 1,
            None => base.push((v, 1)),
        }
    }
    let mut groups = vec![(1.0, 1u64)];
    for _ in 0..dim {
        let mut next: Vec<(f64, u64)> = Vec::new();
        for &(a, ca) in &groups {
            for &(b, cb) in &base {
                let v = a * b;
                match next.iter_mut().find(|(x, _)| *x == v) {
                    Some(g) => g.1 += ca * cb,
                    None => next.push((v, ca * cb)),
                }
            }
        }
        groups = next;
    }
    groups
}

/// Truncated 2/3-quasinorm of a vector given as `(value, multiplicity)`
/// groups: drop one maximal element, then `eps` mass from the smallest up.
pub fn grouped_truncated_norm(groups: &[(f64, u64)], eps: f64) -> f64 {
    let mut g: Vec<(f64, u64)> = groups.iter().copied().filter(|&(_, c)| c > 0).collect();
    g.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(last) = g.last_mut() {
        last.1 -= 1;
    }
    let mut budget = eps;
    let mut sum = 0.0;
    for &(v, c) in &g {
        if c == 0 {
            continue;
        }
        if budget <= 0.0 {
            sum += c as f64 * (v.cbrt() * v.cbrt());
            continue;
        }
        let whole = ((budget / v).floor() as u64).min(c);
        budget -= whole as f64 * v;
        let left = c - whole;
        if left > 0 {
            let part = v - budget;
            budget = 0.0;
            if part > 0.0 {
                sum += part.cbrt() * part.cbrt();
            }
            sum += (left - 1) as f64 * (v.cbrt() * v.cbrt());
        }
    }
    sum * sum.sqrt()
}

/// Uniform `p` and the alternating perturbation with `L1(p, q) = eps`.
pub fn paninski_pair(n: usize, eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n % 2 == 1 {
        return Err(WitError::OddSupport(n));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(WitError::InvalidParameter(format!("eps must be in [0, 1), got {eps}")));
    }
    let u = 1.0 / n as f64;
    let p = vec![u; n];
    let q = (0..n).map(|j| if j % 2 == 0 { (1.0 + eps) * u } else { (1.0 - eps) * u }).collect();
    Ok((p, q))
}

/// Places `u(j)` on the `j`-th center of `level`.
pub fn embed_l1_instance(u: &[f64], level: &NetLevel, space: Arc<FiniteMetricSpace>) -> Result<Distribution> {
    if u.len() != level.len() {
        return Err(WitError::SizeMismatch { expected: level.len(), got: u.len() });
    }
    let mut mass = vec![0.0; space.len()];
    for (&c, &m) in level.centers.iter().zip(u) {
        mass[c] += m;
    }
    Distribution::new(space, mass)
}

/// Reduction sampler: draws `j` from a base oracle over the centers of
/// level `i`, keeps `x_j` with probability `p(B(x_j, 2^{i-1})) / p_i(j)` and
/// emits the anchor otherwise.
#[derive(Debug, Clone)]
pub struct QStarSampler<S> {
    base: S,
    level: i32,
    centers: Vec<usize>,
    accept_probs: Vec<f64>,
    anchor: usize,
    space: Arc<FiniteMetricSpace>,
    rng: ChaCha8Rng,
}

pub fn build_qstar<S: SampleOracle>(
    p: &Distribution,
    h: &NetHierarchy,
    level: i32,
    base: S,
    seed: u64,
) -> Result<QStarSampler<S>> {
    if !Arc::ptr_eq(h.space(), p.space()) {
        return Err(WitError::SpaceMismatch);
    }
    let net = h.level(level)?;
    let radius = scale_of(level - 1);
    let space = p.space().clone();
    let anchor = (0..space.len())
        .find(|&y| net.centers.iter().all(|&c| space.dist(c, y) > radius))
        .ok_or(WitError::NoAnchorPoint { radius })?;
    let cluster = cluster_masses(net, p);
    let mut accept_probs = Vec::with_capacity(net.len());
    for (j, &c) in net.centers.iter().enumerate() {
        if cluster.mass[j] <= 0.0 {
            return Err(WitError::ZeroClusterMass { center: c });
        }
        let a = p.ball_mass(c, radius) / cluster.mass[j];
        assert!((0.0..=1.0).contains(&a), "acceptance probability {a} outside [0, 1]");
        accept_probs.push(a);
    }
    Ok(QStarSampler {
        base,
        level,
        centers: net.centers.clone(),
        accept_probs,
        anchor,
        space,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl<S> QStarSampler<S> {
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn accept_probs(&self) -> &[f64] {
        &self.accept_probs
    }

    /// Exact output law when the base oracle follows `q` over the centers.
    pub fn induced(&self, q: &[f64]) -> Result<Distribution> {
        if q.len() != self.centers.len() {
            return Err(WitError::SizeMismatch { expected: self.centers.len(), got: q.len() });
        }
        let mut mass = vec![0.0; self.space.len()];
        let mut rejected = 0.0;
        for ((&c, &a), &qj) in self.centers.iter().zip(&self.accept_probs).zip(q) {
            mass[c] += qj * a;
            rejected += qj * (1.0 - a);
        }
        mass[self.anchor] += rejected;
        Distribution::new(self.space.clone(), mass)
    }
}

impl<S: SampleOracle> SampleOracle for QStarSampler<S> {
    fn next_sample(&mut self) -> Option<usize> {
        let j = self.base.next_sample()?;
        let a = *self.accept_probs.get(j)?;
        Some(if self.rng.random::<f64>() < a { self.centers[j] } else { self.anchor })
    }
}

/// Random point cloud in `[0, 1]^dim`.
pub fn random_points(n: usize, dim: usize, metric: PointMetric, seed: u64) -> Result<FiniteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    FiniteMetricSpace::from_points(&pts, metric)
}

/// Shortest-path metric of a complete graph with random edge weights in
/// `[1, spread]`.
pub fn random_graph_metric(n: usize, spread: f64, seed: u64) -> Result<FiniteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let w = rng.random_range(1.0..=spread.max(1.0));
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[a][k] + d[k][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    build_space(d)
}

/// Flat-Dirichlet weights over `n` cells.
pub fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random distribution where each point is kept with probability `density`.
pub fn random_distribution(space: Arc<FiniteMetricSpace>, density: f64, seed: u64) -> Result<Distribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let mut w = random_simplex(n, &mut rng);
    for x in w.iter_mut() {
        if rng.random::<f64>() >= density {
            *x = 0.0;
        }
    }
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    Distribution::from_weights(space, w)
}

/// `(1 - weight) * p + weight * delta_point`; used for near-concentrated
/// references and for far instances.
pub fn mix_with_point(p: &Distribution, point: usize, weight: f64) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(WitError::InvalidParameter(format!("mixing weight must be in [0, 1], got {weight}")));
    }
    if point >= p.len() {
        return Err(WitError::SizeMismatch { expected: p.len(), got: point + 1 });
    }
    let mut mass: Vec<f64> = p.mass().iter().map(|&m| (1.0 - weight) * m).collect();
    mass[point] += weight;
    Distribution::from_weights(p.space().clone(), mass)
}

/// An alternative together with its exact transport distance from `p`.
#[derive(Debug, Clone)]
pub struct FarInstance {
    pub q: Distribution,
    pub distance: f64,
}

/// Accepts `q` only if the exact solver certifies `W(p, q) >= epsilon`.
pub fn certify_far(p: &Distribution, q: Distribution, epsilon: f64) -> Result<FarInstance> {
    let w = wasserstein_exact(p, &q)?.cost;
    if w < epsilon {
        return Err(WitError::NotCertifiedFar { w, epsilon });
    }
    Ok(FarInstance { q, distance: w })
}

/// Moves a `t` fraction of `p` onto `point`, with `t` chosen so the exact
/// distance is `(1 + margin) * epsilon`, then certifies it.
pub fn far_by_concentration(p: &Distribution, point: usize, epsilon: f64, margin: f64) -> Result<FarInstance> {
    let space = p.space();
    let spread: f64 = p.mass().iter().enumerate().map(|(y, &m)| m * space.dist(y, point)).sum();
    if spread <= 0.0 {
        return Err(WitError::NotCertifiedFar { w: 0.0, epsilon });
    }
    let t = (epsilon * (1.0 + margin) / spread).min(1.0);
    certify_far(p, mix_with_point(p, point, t)?, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::l1_distance;
    use crate::nets::validate_level;

    #[test]
    fn grid_counts() {
        let g = make_grid(1, 0.25, PointMetric::Linf).unwrap();
        assert_eq!(g.len(), 5);
        let g = make_grid(2, 0.5, PointMetric::Linf).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.space().coords(5).unwrap(), &[0.5, 1.0]);
        let brute = FiniteMetricSpace::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]], PointMetric::Euclidean).unwrap();
        let e = make_grid(2, 0.5, PointMetric::Euclidean).unwrap();
        assert_eq!(e.space().diameter(), brute.diameter());
        assert_eq!(g.space().diameter(), 1.0);
        assert!(make_grid(2, 0.3, PointMetric::Linf).is_err());
        let g = make_grid(1, 1.0 / 3.0, PointMetric::Linf).unwrap();
        assert!(matches!(g.trivial_level(-1), Err(WitError::ResolutionIncompatible(_))));
    }

    #[test]
    fn lattice_levels_on_line() {
        let g = make_grid(1, 0.25, PointMetric::Linf).unwrap();
        assert_eq!(g.trivial_level(-1).unwrap().centers, vec![0, 4]);
        assert_eq!(g.trivial_level(-2).unwrap().centers, vec![0, 2, 4]);
        assert_eq!(g.trivial_level(-3).unwrap().centers, vec![0, 1, 2, 3, 4]);
        assert_eq!(g.trivial_level(0).unwrap().centers, vec![0]);
        // the spacing-2^i lattice {0, .5, 1} touches at distance exactly 2^-1
        let s = g.space();
        let naive = NetLevel::from_centers(s, -1, vec![0, 2, 4]);
        assert!(!validate_level(s, &naive).is_ok());
    }

    #[test]
    fn lattice_levels_validate_and_match_brute_force() {
        for (d, h) in [(1, 0.125), (2, 0.25), (2, 0.125), (3, 0.25)] {
            let g = make_grid(d, h, PointMetric::Linf).unwrap();
            for i in -5..=0 {
                let lvl = g.trivial_level(i).unwrap();
                assert!(validate_level(g.space(), &lvl).is_ok(), "d={d} h={h} i={i}");
                let brute = NetLevel::from_centers(g.space(), i, lvl.centers.clone());
                assert_eq!(brute.assign, lvl.assign, "d={d} h={h} i={i}");
            }
        }
    }

    #[test]
    fn corner_lattice_is_unit_net() {
        let g = make_grid(2, 0.5, PointMetric::Linf).unwrap();
        let lvl = g.trivial_level(-1).unwrap();
        assert_eq!(lvl.len(), 4);
        assert!(validate_level(g.space(), &lvl).is_ok());
    }

    #[test]
    fn grid_hierarchy_builds() {
        let g = make_grid(2, 0.125, PointMetric::Linf).unwrap();
        let h = g.hierarchy(0.2).unwrap();
        assert_eq!((h.lowest(), h.highest()), (-6, 0));
        assert!(h.validate().is_ok());
        let g = make_grid(2, 0.25, PointMetric::Euclidean).unwrap();
        assert!(g.hierarchy(0.2).unwrap().validate().is_ok());
    }

    #[test]
    fn product_groups_match_dense() {
        let axis = [0.25, 0.5, 0.25];
        let groups = product_groups(&axis, 2);
        let total: u64 = groups.iter().map(|g| g.1).sum();
        assert_eq!(total, 9);
        let mass: f64 = groups.iter().map(|g| g.0 * g.1 as f64).sum();
        assert!((mass - 1.0).abs() < 1e-15);
        let dense: Vec<f64> = axis.iter().flat_map(|a| axis.iter().map(move |b| a * b)).collect();
        for eps in [0.0, 0.05, 0.0625, 0.2, 0.7] {
            let t = crate::l1::truncate_minus_max_minus_eps(&dense, eps).unwrap();
            let a = t.norm_two_thirds();
            let b = grouped_truncated_norm(&groups, eps);
            assert!((a - b).abs() < 1e-12, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn paninski_examples() {
        let (p, q) = paninski_pair(4, 0.5).unwrap();
        assert_eq!(q, vec![0.375, 0.125, 0.375, 0.125]);
        assert_eq!(p, vec![0.25; 4]);
        let (p, q) = paninski_pair(6, 0.0).unwrap();
        assert_eq!(p, q);
        assert!(matches!(paninski_pair(5, 0.1), Err(WitError::OddSupport(5))));
    }

    #[test]
    fn embedding_preserves_mass() {
        let g = make_grid(2, 0.25, PointMetric::Linf).unwrap();
        let lvl = g.trivial_level(-1).unwrap();
        let u = embed_l1_instance(&[0.25; 4], &lvl, g.space().clone()).unwrap();
        for &c in &lvl.centers {
            assert_eq!(u.mass()[c], 0.25);
        }
        assert!(embed_l1_instance(&[0.5; 2], &lvl, g.space().clone()).is_err());
        let v = embed_l1_instance(&[0.25; 4], &lvl, g.space().clone()).unwrap();
        assert_eq!(l1_distance(&u, &v).unwrap(), 0.0);
    }

    #[test]
    fn qstar_anchor_and_support() {
        let g = make_grid(2, 0.25, PointMetric::Linf).unwrap();
        let eps = 0.25;
        let h = g.hierarchy(eps).unwrap();
        let p = Distribution::uniform(g.space().clone());
        let base = crate::sampling::ReplaySampler::new(vec![]);
        let qs = build_qstar(&p, &h, -1, base, 1).unwrap();
        assert_eq!(qs.anchor(), 2);
        let q = qs.induced(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let support: Vec<usize> = q.support().collect();
        assert_eq!(support, vec![0, 2]);
    }

    #[test]
    fn far_instance_is_certified() {
        let g = make_grid(2, 0.25, PointMetric::Linf).unwrap();
        let p = Distribution::uniform(g.space().clone());
        let far = far_by_concentration(&p, 0, 0.2, 0.05).unwrap();
        assert!(far.distance >= 0.2);
        assert!((far.distance - 0.21).abs() < 1e-9);
        let near = mix_with_point(&p, 0, 0.01).unwrap();
        assert!(matches!(certify_far(&p, near, 0.2), Err(WitError::NotCertifiedFar { .. })));
    }
}
