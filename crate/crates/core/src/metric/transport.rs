//! Exact earth mover's distance by successive shortest paths.
//!
//! The transportation problem is solved on the complete bipartite graph
//! between the supports of the two distributions, so the cost of a solve is
//! driven by support sizes rather than the size of the space. Node potentials
//! maintained by the Dijkstra passes double as the dual solution; they are
//! extended to every point of the space and exported as a certificate.

use serde::{Deserialize, Serialize};

use super::{Distribution, FiniteMetricSpace};
use crate::error::{Result, WitError};

/// Amounts below this are treated as exhausted during augmentation.
const RESIDUAL_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Row/column sum slack against the marginals.
    pub mass_balance: f64,
    /// Dual feasibility, complementary slackness and duality-gap slack.
    pub dual_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mass_balance: 1e-9, dual_slack: 1e-7 }
    }
}

/// Dual potentials over all points: `u[a] + v[b] <= cost(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualCertificate {
    pub fn objective(&self, p: &[f64], q: &[f64]) -> f64 {
        let a: f64 = self.u.iter().zip(p).map(|(u, m)| u * m).sum();
        let b: f64 = self.v.iter().zip(q).map(|(v, m)| v * m).sum();
        a + b
    }
}

/// An optimal coupling stored sparsely as `(source, target, amount)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub certificate: DualCertificate,
}

impl TransportPlan {
    pub fn flow(&self, a: usize, b: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(s, t, _)| *s == a && *t == b)
            .map(|(_, _, f)| f)
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(a, b, f) in &self.entries {
            m[a][b] += f;
        }
        m
    }

    /// Checks marginals, the cost identity, dual feasibility on all pairs,
    /// complementary slackness on the support of the flow and a zero duality gap.
    pub fn verify_with<F>(&self, p: &[f64], q: &[f64], cost: F, tol: Tolerances) -> Result<()>
    where
        F: Fn(usize, usize) -> f64,
    {
        let n = self.n;
        if p.len() != n || q.len() != n {
            return Err(WitError::SizeMismatch { expected: n, got: p.len().min(q.len()) });
        }
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        let mut total = 0.0;
        for &(a, b, f) in &self.entries {
            if f < 0.0 {
                return Err(certificate_error(format!("negative flow {f} on ({a},{b})")));
            }
            rows[a] += f;
            cols[b] += f;
            total += f * cost(a, b);
        }
        for i in 0..n {
            if (rows[i] - p[i]).abs() > tol.mass_balance {
                return Err(certificate_error(format!("row {i} sums to {} not {}", rows[i], p[i])));
            }
            if (cols[i] - q[i]).abs() > tol.mass_balance {
                return Err(certificate_error(format!("column {i} sums to {} not {}", cols[i], q[i])));
            }
        }
        if (total - self.cost).abs() > tol.mass_balance.max(1e-12 * self.cost.abs()) {
            return Err(certificate_error(format!("cost {} but flow costs {total}", self.cost)));
        }
        let DualCertificate { u, v } = &self.certificate;
        for a in 0..n {
            for b in 0..n {
                if u[a] + v[b] > cost(a, b) + tol.dual_slack {
                    return Err(certificate_error(format!("dual infeasible at ({a},{b})")));
                }
            }
        }
        for &(a, b, f) in &self.entries {
            if f > tol.mass_balance && (u[a] + v[b] - cost(a, b)).abs() > tol.dual_slack {
                return Err(certificate_error(format!("slackness fails on ({a},{b})")));
            }
        }
        let gap = (self.certificate.objective(p, q) - self.cost).abs();
        if gap > tol.dual_slack {
            return Err(certificate_error(format!("duality gap {gap}")));
        }
        Ok(())
    }

    pub fn verify(&self, p: &Distribution, q: &Distribution, tol: Tolerances) -> Result<()> {
        if !p.same_space(q) {
            return Err(WitError::SpaceMismatch);
        }
        let space = p.space();
        self.verify_with(p.mass(), q.mass(), |a, b| space.dist(a, b), tol)
    }
}

fn certificate_error(msg: String) -> WitError {
    WitError::InvalidParameter(format!("transport certificate: {msg}"))
}

/// `W_d(p, q)` with an optimal plan and dual certificate.
pub fn wasserstein_exact(p: &Distribution, q: &Distribution) -> Result<TransportPlan> {
    if !p.same_space(q) {
        return Err(WitError::SpaceMismatch);
    }
    let space: &FiniteMetricSpace = p.space();
    Ok(solve_transport(p.mass(), q.mass(), |a, b| space.dist(a, b)))
}

/// Transport under an arbitrary nonnegative cost on the same index set.
pub fn wasserstein_with_cost<F>(p: &[f64], q: &[f64], cost: F) -> Result<TransportPlan>
where
    F: Fn(usize, usize) -> f64,
{
    if p.len() != q.len() {
        return Err(WitError::SizeMismatch { expected: p.len(), got: q.len() });
    }
    Ok(solve_transport(p, q, cost))
}

fn solve_transport<F>(p: &[f64], q: &[f64], cost: F) -> TransportPlan
where
    F: Fn(usize, usize) -> f64,
{
    let n = p.len();
    let sources: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0).collect();
    let (ns, nt) = (sources.len(), sinks.len());

    let c: Vec<f64> = sources
        .iter()
        .flat_map(|&a| sinks.iter().map(|&b| cost(a, b)).collect::<Vec<_>>())
        .collect();
    let mut flow = vec![0.0; ns * nt];
    let mut supply: Vec<f64> = sources.iter().map(|&a| p[a]).collect();
    let mut demand: Vec<f64> = sinks.iter().map(|&b| q[b]).collect();
    // Nodes 0..ns are sources, ns..ns+nt are sinks.
    let mut phi = vec![0.0; ns + nt];
    let mut dist = vec![f64::INFINITY; ns + nt];
    let mut prev = vec![usize::MAX; ns + nt];
    let mut settled = vec![false; ns + nt];

    loop {
        if !supply.iter().any(|&s| s > RESIDUAL_EPS) || !demand.iter().any(|&d| d > RESIDUAL_EPS) {
            break;
        }
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        settled.fill(false);
        for s in 0..ns {
            if supply[s] > RESIDUAL_EPS {
                dist[s] = 0.0;
            }
        }
        let mut target = None;
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for v in 0..ns + nt {
                if !settled[v] && dist[v] < best_d {
                    best_d = dist[v];
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            settled[best] = true;
            if best < ns {
                let s = best;
                for t in 0..nt {
                    let node = ns + t;
                    if settled[node] {
                        continue;
                    }
                    let rc = (c[s * nt + t] + phi[s] - phi[node]).max(0.0);
                    if best_d + rc < dist[node] {
                        dist[node] = best_d + rc;
                        prev[node] = s;
                    }
                }
            } else {
                let t = best - ns;
                if demand[t] > RESIDUAL_EPS {
                    target = Some(t);
                    break;
                }
                for s in 0..ns {
                    if settled[s] || flow[s * nt + t] <= RESIDUAL_EPS {
                        continue;
                    }
                    let rc = (-c[s * nt + t] + phi[best] - phi[s]).max(0.0);
                    if best_d + rc < dist[s] {
                        dist[s] = best_d + rc;
                        prev[s] = best;
                    }
                }
            }
        }
        let Some(t_target) = target else { break };
        let reach = dist[ns + t_target];
        for v in 0..ns + nt {
            phi[v] += dist[v].min(reach);
        }

        // Walk back to the originating source, collecting the bottleneck.
        let mut bottleneck = demand[t_target];
        let mut node = ns + t_target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from >= ns {
                // backward arc sink(from) -> source(node)
                bottleneck = bottleneck.min(flow[node * nt + (from - ns)]);
            }
            node = from;
        }
        let origin = node;
        bottleneck = bottleneck.min(supply[origin]);

        let mut node = ns + t_target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from < ns {
                flow[from * nt + (node - ns)] += bottleneck;
            } else {
                let cell = &mut flow[node * nt + (from - ns)];
                *cell = (*cell - bottleneck).max(0.0);
            }
            node = from;
        }
        supply[origin] -= bottleneck;
        demand[t_target] -= bottleneck;
    }

    let mut entries = Vec::new();
    let mut total = 0.0;
    for s in 0..ns {
        for t in 0..nt {
            let f = flow[s * nt + t];
            if f > 0.0 {
                entries.push((sources[s], sinks[t], f));
                total += f * c[s * nt + t];
            }
        }
    }

    // Potentials give u = -phi on sources and v = phi on sinks; extend both to
    // every point by the c-transform so feasibility holds on all pairs.
    let mut v = vec![f64::INFINITY; n];
    for (t, &b) in sinks.iter().enumerate() {
        v[b] = phi[ns + t];
    }
    let mut u = vec![0.0; n];
    for (a, slot) in u.iter_mut().enumerate() {
        *slot = if sinks.is_empty() {
            0.0
        } else {
            sinks
                .iter()
                .map(|&b| cost(a, b) - v[b])
                .fold(f64::INFINITY, f64::min)
        };
    }
    for b in 0..n {
        if q[b] <= 0.0 {
            v[b] = (0..n).map(|a| cost(a, b) - u[a]).fold(f64::INFINITY, f64::min);
        }
    }

    TransportPlan {
        n,
        entries,
        cost: total,
        certificate: DualCertificate { u, v },
    }
}

/// Result of the ball-packing lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingBound {
    /// `Σ_c radius · |p(B(c, radius)) − q(B(c, radius))|`.
    pub value: f64,
    /// True when every pair `(a, b)` in `supp p × supp q` pays at least
    /// `radius` per ball boundary it crosses, which makes `value <= W_d(p, q)`
    /// for every coupling. Concentration of `q` at the centers alone does not
    /// imply this: mass can leave a ball through its rim for less than `radius`.
    pub guaranteed: bool,
}

/// Lower bound on `W_d(p, q)` from disjoint closed balls around `centers`.
pub fn wasserstein_lower_bound_packing(
    p: &Distribution,
    q: &Distribution,
    centers: &[usize],
    radius: f64,
) -> Result<PackingBound> {
    if !p.same_space(q) {
        return Err(WitError::SpaceMismatch);
    }
    let space = p.space();
    let n = space.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (j, &c) in centers.iter().enumerate() {
        if c >= n {
            return Err(WitError::SizeMismatch { expected: n, got: c });
        }
        for y in space.ball(c, radius) {
            if let Some(k) = owner[y] {
                return Err(WitError::OverlappingBalls { a: centers[k], b: c });
            }
            owner[y] = Some(j);
        }
    }
    let mut pb = vec![0.0; centers.len()];
    let mut qb = vec![0.0; centers.len()];
    for y in 0..n {
        if let Some(j) = owner[y] {
            pb[j] += p.mass()[y];
            qb[j] += q.mass()[y];
        }
    }
    let value = radius * pb.iter().zip(&qb).map(|(a, b)| (a - b).abs()).sum::<f64>();

    let mut guaranteed = true;
    'outer: for a in p.support() {
        for b in q.support() {
            if owner[a] == owner[b] {
                continue;
            }
            let crossings = owner[a].is_some() as u32 + owner[b].is_some() as u32;
            if space.dist(a, b) < radius * crossings as f64 {
                guaranteed = false;
                break 'outer;
            }
        }
    }
    Ok(PackingBound { value, guaranteed })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::metric::{build_space, FiniteMetricSpace, PointMetric};

    fn two_point() -> Arc<FiniteMetricSpace> {
        Arc::new(build_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
    }

    #[test]
    fn identical_distributions_cost_nothing() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.25]).collect();
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let p = Distribution::from_weights(s, vec![1.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
        let plan = wasserstein_exact(&p, &p).unwrap();
        assert_eq!(plan.cost, 0.0);
        for &(a, b, _) in &plan.entries {
            assert_eq!(a, b);
        }
        plan.verify(&p, &p, Tolerances::default()).unwrap();
    }

    #[test]
    fn two_point_swap_costs_one() {
        let s = two_point();
        let p = Distribution::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let q = Distribution::new(s, vec![0.0, 1.0]).unwrap();
        let plan = wasserstein_exact(&p, &q).unwrap();
        assert_eq!(plan.cost, 1.0);
        assert_eq!(plan.flow(0, 1), 1.0);
        plan.verify(&p, &q, Tolerances::default()).unwrap();
    }

    #[test]
    fn single_point_space() {
        let s = Arc::new(build_space(vec![vec![0.0]]).unwrap());
        let p = Distribution::uniform(s);
        let plan = wasserstein_exact(&p, &p).unwrap();
        assert_eq!(plan.cost, 0.0);
        plan.verify(&p, &p, Tolerances::default()).unwrap();
    }

    #[test]
    fn backward_arcs_are_used() {
        // Two sources, two sinks on a line; both matchings tie at cost 1.
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let p = Distribution::new(s.clone(), vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let q = Distribution::new(s, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let plan = wasserstein_exact(&p, &q).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-12);
        plan.verify(&p, &q, Tolerances::default()).unwrap();
    }

    #[test]
    fn tampered_certificate_fails() {
        let s = two_point();
        let p = Distribution::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let q = Distribution::new(s, vec![0.0, 1.0]).unwrap();
        let mut plan = wasserstein_exact(&p, &q).unwrap();
        plan.certificate.u[0] += 0.5;
        assert!(plan.verify(&p, &q, Tolerances::default()).is_err());
    }

    #[test]
    fn packing_bound_two_point() {
        let s = two_point();
        let p = Distribution::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let q = Distribution::new(s, vec![0.0, 1.0]).unwrap();
        let b = wasserstein_lower_bound_packing(&p, &q, &[0, 1], 0.4).unwrap();
        assert!((b.value - 0.8).abs() < 1e-15);
        assert!(b.guaranteed);
        assert!(b.value <= wasserstein_exact(&p, &q).unwrap().cost);
        let b = wasserstein_lower_bound_packing(&p, &p, &[0, 1], 0.4).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn packing_bound_rejects_overlap() {
        let s = two_point();
        let p = Distribution::uniform(s);
        let err = wasserstein_lower_bound_packing(&p, &p, &[0, 1], 1.0).unwrap_err();
        assert!(matches!(err, WitError::OverlappingBalls { .. }));
    }

    #[test]
    fn packing_bound_rim_leak_is_flagged() {
        // Mass sitting on the rim of a ball exits cheaply: the bound exceeds W.
        let pts = vec![vec![0.0], vec![0.5], vec![1.01]];
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let p = Distribution::point_mass(s.clone(), 1).unwrap();
        let q = Distribution::point_mass(s, 2).unwrap();
        let b = wasserstein_lower_bound_packing(&p, &q, &[0, 2], 0.5).unwrap();
        let w = wasserstein_exact(&p, &q).unwrap().cost;
        assert!(b.value > w);
        assert!(!b.guaranteed);
    }
}
