//! The tree metric built from a net hierarchy.
//!
//! Leaves are the points of the space. Level `i` holds one internal node per
//! center of `N_i` (a point that is a center on several levels gets a fresh
//! node on each). A leaf hangs off its level-`l` center with weight `2^l`, and
//! a level-`i` node hangs off its nearest level-`(i+1)` center with weight
//! `2^{i+1}`. Tree distances are evaluated from ancestor tables and never
//! materialized as a matrix.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WitError};
use crate::metric::{l1_vec, Distribution, FiniteMetricSpace};
use crate::nets::{scale_of, NetHierarchy};

#[derive(Debug, Clone)]
pub struct TreeEmbedding {
    space: Arc<FiniteMetricSpace>,
    l: i32,
    r: i32,
    /// Point index of every center, per level.
    centers: Vec<Vec<usize>>,
    /// Parent center index in the next level, per level below the root.
    parents: Vec<Vec<usize>>,
    /// `ancestors[k][x]`: center index of leaf `x`'s ancestor at level `l + k`.
    ancestors: Vec<Vec<usize>>,
}

/// `p̃_i`: leaf mass aggregated at each level-`i` node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedDistribution {
    pub level: i32,
    pub mass: Vec<f64>,
}

impl TreeEmbedding {
    pub fn new(hierarchy: &NetHierarchy) -> Self {
        let (l, r) = (hierarchy.lowest(), hierarchy.highest());
        let centers: Vec<Vec<usize>> = hierarchy.levels().iter().map(|lv| lv.centers.clone()).collect();
        let parents: Vec<Vec<usize>> = (l..r)
            .map(|i| hierarchy.parent_map(i).expect("level in range").to_vec())
            .collect();
        let mut ancestors = Vec::with_capacity(centers.len());
        ancestors.push(hierarchy.levels()[0].assign.clone());
        for k in 0..parents.len() {
            let next: Vec<usize> = ancestors[k].iter().map(|&c| parents[k][c]).collect();
            ancestors.push(next);
        }
        Self { space: hierarchy.space().clone(), l, r, centers, parents, ancestors }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn lowest(&self) -> i32 {
        self.l
    }

    pub fn highest(&self) -> i32 {
        self.r
    }

    pub fn num_leaves(&self) -> usize {
        self.space.len()
    }

    /// Leaves plus one node per (level, center) pair.
    pub fn num_nodes(&self) -> usize {
        self.space.len() + self.centers.iter().map(Vec::len).sum::<usize>()
    }

    pub fn level_size(&self, i: i32) -> Result<usize> {
        self.check_level(i)?;
        Ok(self.centers[(i - self.l) as usize].len())
    }

    pub fn leaf_edge_weight(&self) -> f64 {
        scale_of(self.l)
    }

    /// Weight of the edge from a level-`i` node to its parent.
    pub fn edge_weight(&self, i: i32) -> f64 {
        scale_of(i + 1)
    }

    fn check_level(&self, i: i32) -> Result<()> {
        if i < self.l || i > self.r {
            return Err(WitError::LevelOutOfRange { level: i, lo: self.l, hi: self.r });
        }
        Ok(())
    }

    /// Ancestor of leaf `x` at level `i`, as a center index into that level.
    pub fn ancestor(&self, x: usize, i: i32) -> Result<usize> {
        self.check_level(i)?;
        Ok(self.ancestors[(i - self.l) as usize][x])
    }

    /// `d_T(x, y) = 2·(2^l + … + 2^j)` with `j` the level of the lowest common ancestor.
    pub fn tree_distance(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        let mut one_side = 0.0;
        for (k, anc) in self.ancestors.iter().enumerate() {
            let i = self.l + k as i32;
            one_side += scale_of(i);
            if anc[x] == anc[y] {
                return 2.0 * one_side;
            }
        }
        unreachable!("hierarchy top level is a single root")
    }

    pub fn project(&self, p: &Distribution, level: i32) -> Result<ProjectedDistribution> {
        if !Arc::ptr_eq(&self.space, p.space()) {
            return Err(WitError::SpaceMismatch);
        }
        self.check_level(level)?;
        Ok(ProjectedDistribution { level, mass: self.project_slice(p.mass(), level) })
    }

    /// Aggregates any per-leaf vector (masses or sample counts) at level `i`.
    pub(crate) fn project_slice<T>(&self, leaf_values: &[T], level: i32) -> Vec<T>
    where
        T: Copy + Default + std::ops::AddAssign,
    {
        let k = (level - self.l) as usize;
        let mut out = vec![T::default(); self.centers[k].len()];
        for (x, &c) in self.ancestors[k].iter().enumerate() {
            out[c] += leaf_values[x];
        }
        out
    }

    /// `W_{d_T}(p, q)` via the per-level L1 decomposition.
    pub fn tree_wasserstein(&self, p: &Distribution, q: &Distribution) -> Result<f64> {
        if !p.same_space(q) || !Arc::ptr_eq(&self.space, p.space()) {
            return Err(WitError::SpaceMismatch);
        }
        Ok(self
            .level_l1_terms(p.mass(), q.mass())
            .iter()
            .map(|t| t.weight * t.l1)
            .sum())
    }

    /// The weighted terms of the decomposition: the leaf term first, then one
    /// per level `l..r-1`.
    pub fn level_l1_terms(&self, p: &[f64], q: &[f64]) -> Vec<DecompositionTerm> {
        let mut terms = vec![DecompositionTerm { level: None, weight: self.leaf_edge_weight(), l1: l1_vec(p, q) }];
        for i in self.l..self.r {
            let pp = self.project_slice(p, i);
            let qq = self.project_slice(q, i);
            terms.push(DecompositionTerm { level: Some(i), weight: self.edge_weight(i), l1: l1_vec(&pp, &qq) });
        }
        terms
    }

    /// Indented dump: one line per node with its parent-edge weight.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        let top = self.centers.len() - 1;
        let mut children: Vec<Vec<Vec<usize>>> = self
            .centers
            .iter()
            .map(|cs| vec![Vec::new(); cs.len()])
            .collect();
        for k in 0..top {
            for (c, &par) in self.parents[k].iter().enumerate() {
                children[k + 1][par].push(c);
            }
        }
        let mut leaves = vec![Vec::new(); self.centers[0].len()];
        for (x, &c) in self.ancestors[0].iter().enumerate() {
            leaves[c].push(x);
        }
        writeln!(out, "# tree l={} r={} nodes={}", self.l, self.r, self.num_nodes())?;
        let mut stack: Vec<(usize, usize, usize)> = vec![(top, 0, 0)];
        while let Some((k, c, depth)) = stack.pop() {
            let i = self.l + k as i32;
            let pad = "  ".repeat(depth);
            if k == top {
                writeln!(out, "{pad}node level={i} center={} point={}", c, self.centers[k][c])?;
            } else {
                writeln!(
                    out,
                    "{pad}node level={i} center={} point={} weight={}",
                    c,
                    self.centers[k][c],
                    self.edge_weight(i)
                )?;
            }
            if k == 0 {
                for &x in &leaves[c] {
                    writeln!(out, "{pad}  leaf point={x} weight={}", self.leaf_edge_weight())?;
                }
            } else {
                for &child in children[k][c].iter().rev() {
                    stack.push((k - 1, child, depth + 1));
                }
            }
        }
        Ok(())
    }
}

/// One summand `weight · L1` of the tree-Wasserstein decomposition; `level`
/// is `None` for the leaf term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    pub level: Option<i32>,
    pub weight: f64,
    pub l1: f64,
}

pub fn embed(hierarchy: &NetHierarchy) -> TreeEmbedding {
    TreeEmbedding::new(hierarchy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_space, PointMetric};
    use crate::nets::build_hierarchy;

    #[test]
    fn one_level_hierarchy_is_a_star() {
        let s = Arc::new(build_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let h = build_hierarchy(s, 8.0).unwrap();
        let t = embed(&h);
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.tree_distance(0, 1), 2.0);
        assert_eq!(t.tree_distance(1, 1), 0.0);
    }

    #[test]
    fn two_point_path_separates_at_root() {
        let s = Arc::new(build_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let h = build_hierarchy(s, 1.0).unwrap();
        let t = embed(&h);
        // N_{-3..-1} keep both points; N_0 merges them.
        assert_eq!(t.num_nodes(), 2 + 2 + 2 + 2 + 1);
        let expected = 2.0 * (0.125 + 0.25 + 0.5 + 1.0);
        assert_eq!(t.tree_distance(0, 1), expected);
    }

    #[test]
    fn siblings_under_lowest_center() {
        let pts = vec![vec![0.0], vec![0.01], vec![1.0]];
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let h = build_hierarchy(s, 0.5).unwrap();
        let t = embed(&h);
        assert_eq!(t.ancestor(0, t.lowest()).unwrap(), t.ancestor(1, t.lowest()).unwrap());
        assert_eq!(t.tree_distance(0, 1), 2.0 * t.leaf_edge_weight());
    }

    #[test]
    fn projections_at_extremes() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let h = build_hierarchy(s.clone(), 0.3).unwrap();
        let t = embed(&h);
        let p = Distribution::point_mass(s.clone(), 4).unwrap();
        let top = t.project(&p, t.highest()).unwrap();
        assert_eq!(top.mass, vec![1.0]);
        for i in t.lowest()..=t.highest() {
            let pr = t.project(&p, i).unwrap();
            let anc = t.ancestor(4, i).unwrap();
            assert_eq!(pr.mass[anc], 1.0);
            assert_eq!(pr.mass.iter().sum::<f64>(), 1.0);
        }
        assert!(t.project(&p, t.highest() + 1).is_err());
    }

    #[test]
    fn point_masses_cost_the_tree_path() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let h = build_hierarchy(s.clone(), 0.3).unwrap();
        let t = embed(&h);
        let p = Distribution::point_mass(s.clone(), 0).unwrap();
        let q = Distribution::point_mass(s.clone(), 5).unwrap();
        let w = t.tree_wasserstein(&p, &q).unwrap();
        assert!((w - t.tree_distance(0, 5)).abs() < 1e-12);
        assert_eq!(t.tree_wasserstein(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn text_dump_lists_every_node() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let s = Arc::new(FiniteMetricSpace::from_points(&pts, PointMetric::Euclidean).unwrap());
        let t = embed(&build_hierarchy(s, 0.3).unwrap());
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + t.num_nodes());
        assert_eq!(text.matches("leaf").count(), 6);
    }
}
