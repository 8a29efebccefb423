//! Wasserstein identity testers built on the net hierarchy.
//!
//! Samples are drawn once, pushed up the tree, and each level `l..r-1` runs an
//! L1 sub-tester against the projected reference distribution. The overall
//! verdict is the conjunction of the level verdicts.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WitError};
use crate::l1::{
    amplify_median, shared_cache, truncate_minus_max_minus_eps, CalibrationCache, Decide, L1Context,
    L1TestInstance, L1Tester, SampleBatch, TesterKind, Verdict, DEFAULT_CALIBRATION_TRIALS, DEFAULT_L1_CONSTANT,
};
use crate::metric::Distribution;
use crate::nets::{cluster_masses, default_doubling_radii, doubling_constant, scale_of, NetHierarchy};
use crate::sampling::SampleOracle;
use crate::tree::TreeEmbedding;

pub const REPORT_FORMAT: &str = "wit-report/1";

/// Largest per-level constant for which some level is guaranteed to carry
/// `L1 >= c2 * 2^-i * eps / (r - l)` whenever `W >= eps`.
pub const DECOMPOSITION_CONSTANT: f64 = 0.375;

/// Smallest budget constant reaching 2/3 on both sides of the held-out
/// calibration family (see `harness::calibrate_constants`).
pub const DEFAULT_BUDGET_CONSTANT: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitConfig {
    pub epsilon: f64,
    pub budget_constant: f64,
    pub level_proximity_constant: f64,
    pub delta_total: f64,
    /// Odd number of disjoint slices voted on per level.
    pub repetitions: usize,
    pub calibration_trials: usize,
}

impl Default for WitConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            budget_constant: DEFAULT_BUDGET_CONSTANT,
            level_proximity_constant: DECOMPOSITION_CONSTANT,
            delta_total: 1.0 / 3.0,
            repetitions: 1,
            calibration_trials: DEFAULT_CALIBRATION_TRIALS,
        }
    }
}

impl WitConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let c = Self { epsilon, ..Self::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WitError::InvalidParameter(m));
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.budget_constant > 0.0) || !(self.level_proximity_constant > 0.0) {
            return bad("constants must be > 0".into());
        }
        if !(self.delta_total > 0.0 && self.delta_total < 0.5) {
            return bad(format!("delta_total must be in (0, 1/2), got {}", self.delta_total));
        }
        if self.repetitions == 0 || self.repetitions % 2 == 0 {
            return bad(format!("repetitions must be odd, got {}", self.repetitions));
        }
        if self.calibration_trials < 10 {
            return bad("calibration_trials must be >= 10".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: i32,
    pub proximity: f64,
    pub verdict: Verdict,
    pub samples_charged: u64,
    /// What the stand-alone sub-tester would ask for at this proximity.
    pub samples_required: u64,
    pub statistic: f64,
    pub threshold: f64,
    pub tail_count: f64,
    pub tail_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterReport {
    pub format: String,
    pub mode: TesterKind,
    pub verdict: Verdict,
    pub epsilon: f64,
    pub per_level: Vec<LevelReport>,
    pub total_samples: u64,
    pub budget_formula_value: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Set when the instance tester runs on a distribution whose doubling
    /// constant is infinite on the radii grid.
    #[serde(default)]
    pub doubling_warning: bool,
}

/// `max(log2(D / eps), 1)`.
pub fn log_ratio(diameter: f64, epsilon: f64) -> f64 {
    if diameter <= 0.0 {
        return 1.0;
    }
    (diameter / epsilon).log2().max(1.0)
}

/// `max_i 2^{2i} sqrt|N_i| / eps^2` over `(level, |N_i|)` pairs.
pub fn worst_budget_core(sizes: impl IntoIterator<Item = (i32, f64)>, epsilon: f64) -> f64 {
    sizes
        .into_iter()
        .map(|(i, n)| scale_of(2 * i) * n.sqrt() / (epsilon * epsilon))
        .fold(0.0, f64::max)
}

/// `max{2^{2i} eps^-2 norm, 2^i eps^-1}` for one level, `norm` being the
/// truncated 2/3-quasinorm of `p_i`.
pub fn instance_level_term(level: i32, norm: f64, epsilon: f64) -> f64 {
    (scale_of(2 * level) * norm / (epsilon * epsilon)).max(scale_of(level) / epsilon)
}

fn ceil_budget(c: f64, diameter: f64, epsilon: f64, core: f64) -> u64 {
    (c * log_ratio(diameter, epsilon).powi(3) * core).ceil() as u64
}

pub fn budget_worst(h: &NetHierarchy, cfg: &WitConfig) -> u64 {
    let sizes = h.levels().iter().map(|n| (n.level, n.len() as f64));
    let core = worst_budget_core(sizes, cfg.epsilon);
    ceil_budget(cfg.budget_constant, h.space().diameter(), cfg.epsilon, core)
}

/// Truncated norm `||p_i^{-max}_{-2^{-i-4} eps}||_{2/3}` at every level.
pub fn instance_level_norms(h: &NetHierarchy, p: &Distribution, epsilon: f64) -> Result<Vec<(i32, f64)>> {
    if !Arc::ptr_eq(h.space(), p.space()) {
        return Err(WitError::SpaceMismatch);
    }
    h.levels()
        .iter()
        .map(|net| {
            let pi = cluster_masses(net, p);
            let t = truncate_minus_max_minus_eps(&pi.mass, scale_of(-net.level - 4) * epsilon)?;
            Ok((net.level, t.norm_two_thirds()))
        })
        .collect()
}

pub fn budget_instance(h: &NetHierarchy, p: &Distribution, cfg: &WitConfig) -> Result<u64> {
    let core = instance_level_norms(h, p, cfg.epsilon)?
        .into_iter()
        .map(|(i, norm)| instance_level_term(i, norm, cfg.epsilon))
        .fold(0.0, f64::max);
    Ok(ceil_budget(cfg.budget_constant, h.space().diameter(), cfg.epsilon, core))
}

/// Sub-proximity `c2 * 2^-i * eps / log2(D/eps)`, capped at 2.
pub fn level_proximity(level: i32, diameter: f64, cfg: &WitConfig) -> f64 {
    (cfg.level_proximity_constant * scale_of(-level) * cfg.epsilon / log_ratio(diameter, cfg.epsilon)).min(2.0)
}

/// First level whose projected L1 gap reaches `c2 * 2^-i * eps / (r - l)`,
/// evaluated on exact distributions.
pub fn decomposition_witness(
    tree: &TreeEmbedding,
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
    c2: f64,
) -> Result<Option<(i32, f64)>> {
    if !p.same_space(q) || !Arc::ptr_eq(tree.space(), p.space()) {
        return Err(WitError::SpaceMismatch);
    }
    let span = (tree.highest() - tree.lowest()).max(1) as f64;
    Ok(tree
        .level_l1_terms(p.mass(), q.mass())
        .into_iter()
        .filter_map(|t| t.level.map(|i| (i, t.l1)))
        .find(|&(i, l1)| l1 >= c2 * scale_of(-i) * epsilon / span))
}

struct LevelTester {
    level: i32,
    proximity: f64,
    tester: L1Tester,
}

/// A prepared tester for one reference distribution. Calibrations are cached
/// across runs.
pub struct WitTester<'a> {
    kind: TesterKind,
    tree: &'a TreeEmbedding,
    config: WitConfig,
    budget: u64,
    levels: Vec<LevelTester>,
    doubling_warning: bool,
}

impl<'a> WitTester<'a> {
    pub fn new(
        kind: TesterKind,
        h: &NetHierarchy,
        tree: &'a TreeEmbedding,
        p: &Distribution,
        cfg: &WitConfig,
    ) -> Result<Self> {
        Self::with_cache(kind, h, tree, p, cfg, shared_cache())
    }

    pub fn with_cache(
        kind: TesterKind,
        h: &NetHierarchy,
        tree: &'a TreeEmbedding,
        p: &Distribution,
        cfg: &WitConfig,
        cache: Arc<CalibrationCache>,
    ) -> Result<Self> {
        cfg.validate()?;
        if !Arc::ptr_eq(h.space(), p.space()) || !Arc::ptr_eq(tree.space(), p.space()) {
            return Err(WitError::SpaceMismatch);
        }
        if tree.lowest() != h.lowest() || tree.highest() != h.highest() {
            return Err(WitError::InvalidParameter("tree and hierarchy levels differ".into()));
        }
        let mut doubling_warning = false;
        let budget = match kind {
            TesterKind::Worst => budget_worst(h, cfg),
            TesterKind::Instance => {
                let report = doubling_constant(p.space(), p, &default_doubling_radii(h))?;
                if !report.is_finite() {
                    log::warn!("doubling constant is infinite; instance tester runs without a guarantee");
                    doubling_warning = true;
                }
                budget_instance(h, p, cfg)?
            }
        };
        let ctx = L1Context { constant: DEFAULT_L1_CONSTANT, trials: cfg.calibration_trials, cache };
        let delta = cfg.delta_total / (h.num_levels() as f64);
        let diameter = h.space().diameter();
        let levels = (tree.lowest()..tree.highest())
            .map(|i| {
                let known = tree.project(p, i)?.mass;
                let proximity = level_proximity(i, diameter, cfg);
                let inst = L1TestInstance::new(known, proximity, delta)?;
                Ok(LevelTester { level: i, proximity, tester: L1Tester::new(inst, kind, &ctx)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, tree, config: cfg.clone(), budget, levels, doubling_warning })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn kind(&self) -> TesterKind {
        self.kind
    }

    /// Computes every level's thresholds for the budget up front, so that
    /// parallel runs share one calibration.
    pub fn prepare(&self) {
        let per_slice = self.budget / self.config.repetitions as u64;
        self.levels.par_iter().for_each(|lt| {
            lt.tester.thresholds(per_slice);
        });
    }

    /// Draws the budget once and tests every level on the shared samples.
    pub fn run(&self, sampler: &mut dyn SampleOracle) -> Result<TesterReport> {
        let draws = sampler.draw(self.budget)?;
        self.run_on(&draws)
    }

    /// Tests pre-drawn samples (leaf indices).
    pub fn run_on(&self, draws: &[usize]) -> Result<TesterReport> {
        let n = self.tree.num_leaves();
        if let Some(&bad) = draws.iter().find(|&&x| x >= n) {
            return Err(WitError::SizeMismatch { expected: n, got: bad + 1 });
        }
        let total = draws.len() as u64;
        let reps = self.config.repetitions;
        let per_level: Vec<LevelReport> = self
            .levels
            .par_iter()
            .map(|lt| {
                let lifted: Vec<usize> =
                    draws.iter().map(|&x| self.tree.ancestor(x, lt.level)).collect::<Result<_>>()?;
                let batch = SampleBatch::from_draws(lifted, lt.tester.instance().known.len())?;
                let verdict = amplify_median(lt.tester.clone(), reps)?.decide_batch(&batch)?;
                let (stat, thr) = if reps == 1 {
                    lt.tester.inspect(&batch)
                } else {
                    lt.tester.inspect(&batch.split(reps)?[0])
                };
                Ok(LevelReport {
                    level: lt.level,
                    proximity: lt.proximity,
                    verdict,
                    samples_charged: total,
                    samples_required: lt.tester.required_samples(DEFAULT_L1_CONSTANT),
                    statistic: stat.z,
                    threshold: thr.statistic,
                    tail_count: stat.tail,
                    tail_threshold: thr.tail,
                })
            })
            .collect::<Result<_>>()?;
        let verdict = if per_level.iter().all(|l| l.verdict.accepted()) { Verdict::Accept } else { Verdict::Reject };
        Ok(TesterReport {
            format: REPORT_FORMAT.into(),
            mode: self.kind,
            verdict,
            epsilon: self.config.epsilon,
            per_level,
            total_samples: total,
            budget_formula_value: self.budget,
            seed: None,
            doubling_warning: self.doubling_warning,
        })
    }
}

pub fn wit_worst(
    h: &NetHierarchy,
    tree: &TreeEmbedding,
    p: &Distribution,
    q_sampler: &mut dyn SampleOracle,
    cfg: &WitConfig,
) -> Result<TesterReport> {
    WitTester::new(TesterKind::Worst, h, tree, p, cfg)?.run(q_sampler)
}

pub fn wit_instance(
    h: &NetHierarchy,
    tree: &TreeEmbedding,
    p: &Distribution,
    q_sampler: &mut dyn SampleOracle,
    cfg: &WitConfig,
) -> Result<TesterReport> {
    WitTester::new(TesterKind::Instance, h, tree, p, cfg)?.run(q_sampler)
}
