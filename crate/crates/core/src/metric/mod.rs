//! Finite metric spaces, distributions over them and exact optimal transport.
//!
//! A [`FiniteMetricSpace`] is either an explicit distance matrix or a point
//! cloud with a coordinate metric. Distances between distinct points may be
//! zero (pseudometrics are accepted), but symmetry and the triangle
//! inequality are enforced when a matrix is supplied.

mod io;
mod transport;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WitError};

pub use io::{
    read_distribution_csv, read_points, read_space_csv, write_distribution_csv, write_space_csv,
};
pub use transport::{
    wasserstein_exact, wasserstein_lower_bound_packing, wasserstein_with_cost, DualCertificate,
    PackingBound, Tolerances, TransportPlan,
};

/// Absolute slack allowed when checking the triangle inequality on matrix input.
pub const TRIANGLE_SLACK: f64 = 1e-12;
/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Coordinate metric used when a space is built from a point list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointMetric {
    Euclidean,
    Linf,
}

impl PointMetric {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            PointMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            PointMetric::Linf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for PointMetric {
    type Err = WitError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(PointMetric::Euclidean),
            "linf" | "l_inf" | "chebyshev" => Ok(PointMetric::Linf),
            other => Err(WitError::Parse(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for PointMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointMetric::Euclidean => f.write_str("euclidean"),
            PointMetric::Linf => f.write_str("linf"),
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Matrix(Vec<f64>),
    Points {
        coords: Vec<f64>,
        dim: usize,
        metric: PointMetric,
    },
}

/// A finite (pseudo)metric space with a cached diameter.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    n: usize,
    storage: Storage,
    labels: Option<Vec<String>>,
    diameter: f64,
}

impl FiniteMetricSpace {
    /// Validates a square distance matrix and caches its diameter.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(WitError::EmptySpace);
        }
        let mut flat = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(WitError::NotSquare { row, len: r.len(), n });
            }
            flat.extend_from_slice(r);
        }
        for a in 0..n {
            for b in 0..n {
                let v = flat[a * n + b];
                if !v.is_finite() {
                    return Err(WitError::NonFinite { a, b });
                }
                if v < 0.0 {
                    return Err(WitError::NegativeDistance { a, b, value: v });
                }
            }
        }
        for a in 0..n {
            if flat[a * n + a] != 0.0 {
                return Err(WitError::NonzeroDiagonal { a, value: flat[a * n + a] });
            }
            for b in (a + 1)..n {
                let (ab, ba) = (flat[a * n + b], flat[b * n + a]);
                if ab != ba {
                    return Err(WitError::Asymmetry { a, b, ab, ba });
                }
            }
        }
        let diameter = flat.iter().copied().fold(0.0, f64::max);
        let slack = TRIANGLE_SLACK * diameter.max(1.0);
        for b in 0..n {
            for a in 0..n {
                let ab = flat[a * n + b];
                for c in 0..n {
                    if flat[a * n + c] > ab + flat[b * n + c] + slack {
                        return Err(WitError::TriangleViolation { a, b, c });
                    }
                }
            }
        }
        Ok(Self {
            n,
            storage: Storage::Matrix(flat),
            labels: None,
            diameter,
        })
    }

    /// Builds a space from coordinates. The metric axioms hold by construction.
    pub fn from_points(points: &[Vec<f64>], metric: PointMetric) -> Result<Self> {
        let (coords, dim) = flatten_points(points)?;
        let n = points.len();
        let mut diameter = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                diameter = diameter.max(metric.eval(
                    &coords[a * dim..(a + 1) * dim],
                    &coords[b * dim..(b + 1) * dim],
                ));
            }
        }
        Ok(Self {
            n,
            storage: Storage::Points { coords, dim, metric },
            labels: None,
            diameter,
        })
    }

    /// Point-cloud space whose diameter is known analytically (lattices).
    pub(crate) fn from_points_with_diameter(
        points: &[Vec<f64>],
        metric: PointMetric,
        diameter: f64,
    ) -> Result<Self> {
        let (coords, dim) = flatten_points(points)?;
        Ok(Self {
            n: points.len(),
            storage: Storage::Points { coords, dim, metric },
            labels: None,
            diameter,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(WitError::SizeMismatch { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Coordinates of point `a` when the space came from a point list.
    pub fn coords(&self, a: usize) -> Option<&[f64]> {
        match &self.storage {
            Storage::Points { coords, dim, .. } => Some(&coords[a * dim..(a + 1) * dim]),
            Storage::Matrix(_) => None,
        }
    }

    pub fn point_metric(&self) -> Option<PointMetric> {
        match &self.storage {
            Storage::Points { metric, .. } => Some(*metric),
            Storage::Matrix(_) => None,
        }
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.storage {
            Storage::Matrix(m) => m[a * self.n + b],
            Storage::Points { coords, dim, metric } => {
                let d = *dim;
                metric.eval(&coords[a * d..(a + 1) * d], &coords[b * d..(b + 1) * d])
            }
        }
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|a| (0..self.n).map(|b| self.dist(a, b)).collect())
            .collect()
    }

    /// Closed ball membership: `d(center, y) <= radius`.
    pub fn ball(&self, center: usize, radius: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&y| self.dist(center, y) <= radius)
    }

    /// Smallest strictly positive distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                let d = self.dist(a, b);
                if d > 0.0 && best.is_none_or(|m| d < m) {
                    best = Some(d);
                }
            }
        }
        best
    }
}

fn flatten_points(points: &[Vec<f64>]) -> Result<(Vec<f64>, usize)> {
    let first = points.first().ok_or(WitError::EmptySpace)?;
    let dim = first.len();
    let mut coords = Vec::with_capacity(points.len() * dim);
    for (a, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(WitError::SizeMismatch { expected: dim, got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(WitError::NonFinite { a, b: a });
        }
        coords.extend_from_slice(p);
    }
    Ok((coords, dim))
}

/// Validating constructor for a matrix-backed space.
pub fn build_space(dist_matrix: Vec<Vec<f64>>) -> Result<FiniteMetricSpace> {
    FiniteMetricSpace::from_matrix(dist_matrix)
}

/// A probability vector attached to a space.
#[derive(Debug, Clone)]
pub struct Distribution {
    mass: Vec<f64>,
    space: Arc<FiniteMetricSpace>,
}

impl Distribution {
    pub fn new(space: Arc<FiniteMetricSpace>, mass: Vec<f64>) -> Result<Self> {
        check_probability_vector(&mass, space.len())?;
        Ok(Self { mass, space })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(space: Arc<FiniteMetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(WitError::SizeMismatch { expected: space.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(WitError::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(WitError::InvalidDistribution("weights sum to zero".into()));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        Self::new(space, mass)
    }

    pub fn uniform(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.len();
        Self { mass: vec![1.0 / n as f64; n], space }
    }

    pub fn point_mass(space: Arc<FiniteMetricSpace>, at: usize) -> Result<Self> {
        if at >= space.len() {
            return Err(WitError::SizeMismatch { expected: space.len(), got: at });
        }
        let mut mass = vec![0.0; space.len()];
        mass[at] = 1.0;
        Ok(Self { mass, space })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn same_space(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    /// `p(B(center, radius))` over the closed ball.
    pub fn ball_mass(&self, center: usize, radius: f64) -> f64 {
        self.space.ball(center, radius).map(|y| self.mass[y]).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, _)| i)
    }
}

pub(crate) fn check_probability_vector(mass: &[f64], n: usize) -> Result<()> {
    if mass.len() != n {
        return Err(WitError::SizeMismatch { expected: n, got: mass.len() });
    }
    if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !m.is_finite() || **m < 0.0) {
        return Err(WitError::InvalidDistribution(format!("entry {i} is {m}")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(WitError::InvalidDistribution(format!("masses sum to {total}")));
    }
    Ok(())
}

/// `Σ_j |p_j − q_j|`.
pub fn l1_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if !p.same_space(q) {
        return Err(WitError::SpaceMismatch);
    }
    Ok(l1_vec(p.mass(), q.mass()))
}

pub(crate) fn l1_vec(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
