//! L1 identity sub-testers: worst-case and instance-optimal.
//!
//! Both testers use the same statistic. Elements of a retained set `S` are
//! scored with `((X_j - s p_j)^2 - X_j) / p_j^(2/3)`; the elements outside `S`
//! are pooled into a tail bucket whose count is tested on its own. Thresholds
//! are null quantiles estimated by Monte-Carlo simulation and cached per
//! sample size.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, WitError};
use crate::metric::check_probability_vector;
use crate::sampling::multinomial_counts;

pub const DEFAULT_CALIBRATION_TRIALS: usize = 4000;
pub const DEFAULT_L1_CONSTANT: f64 = 1.0;
/// Relative slack when comparing the statistic with its null quantile.
pub const STATISTIC_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterKind {
    Worst,
    Instance,
}

impl std::str::FromStr for TesterKind {
    type Err = WitError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "worst" | "worst-case" => Ok(TesterKind::Worst),
            "instance" | "instance-optimal" => Ok(TesterKind::Instance),
            other => Err(WitError::Parse(format!("unknown tester mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for TesterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TesterKind::Worst => "worst",
            TesterKind::Instance => "instance",
        })
    }
}

/// `(sum_j p_j^(2/3))^(3/2)`.
pub fn quasinorm_two_thirds(p: &[f64]) -> f64 {
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.cbrt() * x.cbrt()).sum();
    s * s.sqrt()
}

/// Result of removing the max element and then `eps` mass from the smallest
/// elements upward.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    /// Index of the removed maximum (lowest index among ties).
    pub max_index: usize,
    /// Surviving elements with their remaining mass, in index order.
    pub retained: Vec<(usize, f64)>,
    /// Elements removed entirely (excluding the max), in index order.
    pub removed: Vec<usize>,
    /// Element that lost part of its mass, if any.
    pub partial: Option<usize>,
    /// Mass that could not be removed because the vector ran out.
    pub shortfall: f64,
}

impl Truncation {
    pub fn exhausted(&self) -> bool {
        self.retained.is_empty()
    }

    pub fn norm_two_thirds(&self) -> f64 {
        let v: Vec<f64> = self.retained.iter().map(|&(_, m)| m).collect();
        quasinorm_two_thirds(&v)
    }

    pub fn retained_mass(&self) -> f64 {
        self.retained.iter().map(|&(_, m)| m).sum()
    }

    /// Dense vector of the same length as the input, zeros where removed.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(j, m) in &self.retained {
            out[j] = m;
        }
        out
    }
}

/// Computes `p^{-max}_{-eps}`. Zero entries always land in `removed`.
pub fn truncate_minus_max_minus_eps(p: &[f64], eps: f64) -> Result<Truncation> {
    if p.is_empty() {
        return Err(WitError::InvalidDistribution("empty vector".into()));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(WitError::InvalidParameter(format!("truncation mass must be >= 0, got {eps}")));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(WitError::InvalidDistribution("entries must be finite and >= 0".into()));
    }
    let mut max_index = 0;
    for (j, &x) in p.iter().enumerate() {
        if x > p[max_index] {
            max_index = j;
        }
    }
    let mut order: Vec<usize> = (0..p.len()).filter(|&j| j != max_index).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));

    let mut budget = eps;
    let mut removed = Vec::new();
    let mut remaining: Vec<Option<f64>> = p.iter().map(|&x| Some(x)).collect();
    remaining[max_index] = None;
    let mut partial = None;
    for &j in &order {
        if p[j] <= budget {
            budget -= p[j];
            removed.push(j);
            remaining[j] = None;
        } else {
            if budget > 0.0 {
                remaining[j] = Some(p[j] - budget);
                partial = Some(j);
                budget = 0.0;
            }
            break;
        }
    }
    removed.sort_unstable();
    let retained = remaining
        .iter()
        .enumerate()
        .filter_map(|(j, m)| m.map(|m| (j, m)))
        .collect();
    Ok(Truncation { max_index, retained, removed, partial, shortfall: budget })
}

/// Known distribution plus proximity and failure probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1TestInstance {
    pub known: Vec<f64>,
    pub proximity: f64,
    pub failure_prob: f64,
}

impl L1TestInstance {
    pub fn new(known: Vec<f64>, proximity: f64, failure_prob: f64) -> Result<Self> {
        if known.is_empty() {
            return Err(WitError::InvalidDistribution("empty vector".into()));
        }
        check_probability_vector(&known, known.len())?;
        if !(proximity > 0.0 && proximity <= 2.0) {
            return Err(WitError::InvalidParameter(format!("proximity must be in (0, 2], got {proximity}")));
        }
        if !(failure_prob > 0.0 && failure_prob < 0.5) {
            return Err(WitError::InvalidParameter(format!(
                "failure probability must be in (0, 1/2), got {failure_prob}"
            )));
        }
        Ok(Self { known, proximity, failure_prob })
    }

    pub fn support_size(&self) -> usize {
        self.known.len()
    }
}

/// Histogram of observed samples. Raw draws are kept when available so the
/// batch can be split for median amplification.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    counts: Vec<u64>,
    total: u64,
    draws: Option<Vec<usize>>,
}

impl SampleBatch {
    pub fn from_draws(draws: Vec<usize>, support: usize) -> Result<Self> {
        let mut counts = vec![0u64; support];
        for &x in &draws {
            *counts.get_mut(x).ok_or(WitError::SizeMismatch { expected: support, got: x + 1 })? += 1;
        }
        Ok(Self { counts, total: draws.len() as u64, draws: Some(draws) })
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total, draws: None }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn draws(&self) -> Option<&[usize]> {
        self.draws.as_deref()
    }

    /// Splits the draws into `k` consecutive slices of equal size; any
    /// remainder is dropped.
    pub fn split(&self, k: usize) -> Result<Vec<SampleBatch>> {
        let draws = self.draws.as_ref().ok_or_else(|| {
            WitError::InvalidParameter("batch built from counts cannot be split".into())
        })?;
        let size = draws.len() / k;
        (0..k)
            .map(|i| SampleBatch::from_draws(draws[i * size..(i + 1) * size].to_vec(), self.counts.len()))
            .collect()
    }
}

/// Null-quantile thresholds for one (instance, kind, sample size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub statistic: f64,
    pub tail: f64,
    pub trials: usize,
}

/// Shared cache of Monte-Carlo thresholds, optionally backed by a JSON file.
#[derive(Debug, Default)]
pub struct CalibrationCache {
    entries: RwLock<HashMap<String, Thresholds>>,
    path: Option<PathBuf>,
}

impl CalibrationCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads entries from `path` if it exists; `save` writes back there.
    pub fn with_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            serde_json::from_str(&text)?
        } else {
            HashMap::new()
        };
        Ok(Self { entries: RwLock::new(entries), path: Some(path) })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.write().unwrap().clear();
    }

    pub fn save(&self) -> Result<()> {
        if let Some(path) = &self.path {
            let entries = self.entries.read().unwrap();
            std::fs::write(path, serde_json::to_string_pretty(&*entries)?)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<Thresholds> {
        self.entries.read().unwrap().get(key).copied()
    }

    fn insert(&self, key: String, t: Thresholds) {
        self.entries.write().unwrap().insert(key, t);
    }
}

/// Process-wide cache used when no explicit cache is supplied.
pub fn shared_cache() -> Arc<CalibrationCache> {
    static CACHE: OnceLock<Arc<CalibrationCache>> = OnceLock::new();
    CACHE.get_or_init(|| Arc::new(CalibrationCache::new())).clone()
}

/// Shared knobs for the L1 testers.
#[derive(Debug, Clone)]
pub struct L1Context {
    pub constant: f64,
    pub trials: usize,
    pub cache: Arc<CalibrationCache>,
}

impl Default for L1Context {
    fn default() -> Self {
        Self {
            constant: DEFAULT_L1_CONSTANT,
            trials: DEFAULT_CALIBRATION_TRIALS,
            cache: Arc::new(CalibrationCache::new()),
        }
    }
}

/// Statistic value for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub z: f64,
    pub tail: f64,
}

/// A calibrated L1 tester for a fixed instance.
#[derive(Debug, Clone)]
pub struct L1Tester {
    instance: L1TestInstance,
    kind: TesterKind,
    /// Indices scored individually, with weights `p_j^(-2/3)`.
    scored: Vec<(usize, f64)>,
    tail: Vec<usize>,
    tail_mass: f64,
    trials: usize,
    cache: Arc<CalibrationCache>,
    fingerprint: [u8; 32],
}

impl L1Tester {
    pub fn new(instance: L1TestInstance, kind: TesterKind, ctx: &L1Context) -> Result<Self> {
        let p = &instance.known;
        let (scored_idx, tail): (Vec<usize>, Vec<usize>) = match kind {
            TesterKind::Worst => (0..p.len()).partition(|&j| p[j] > 0.0),
            TesterKind::Instance => {
                let tr = truncate_minus_max_minus_eps(p, instance.proximity / 16.0)?;
                let mut s: Vec<usize> = tr.retained.iter().map(|&(j, _)| j).collect();
                s.push(tr.max_index);
                s.sort_unstable();
                (s, tr.removed)
            }
        };
        let scored = scored_idx.iter().map(|&j| (j, p[j].powf(-2.0 / 3.0))).collect();
        let tail_mass = tail.iter().map(|&j| p[j]).sum();
        let mut h = Sha256::new();
        h.update(match kind {
            TesterKind::Worst => b"worst".as_slice(),
            TesterKind::Instance => b"instance".as_slice(),
        });
        for &x in p {
            h.update(x.to_le_bytes());
        }
        h.update(instance.proximity.to_le_bytes());
        h.update(instance.failure_prob.to_le_bytes());
        h.update((ctx.trials as u64).to_le_bytes());
        let fingerprint = h.finalize().into();
        Ok(Self { instance, kind, scored, tail, tail_mass, trials: ctx.trials, cache: ctx.cache.clone(), fingerprint })
    }

    pub fn instance(&self) -> &L1TestInstance {
        &self.instance
    }

    pub fn kind(&self) -> TesterKind {
        self.kind
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn scored_len(&self) -> usize {
        self.scored.len()
    }

    pub fn statistic(&self, counts: &[u64]) -> Statistic {
        let s = counts.iter().sum::<u64>() as f64;
        let p = &self.instance.known;
        let z = self
            .scored
            .iter()
            .map(|&(j, w)| {
                let x = counts[j] as f64;
                let d = x - s * p[j];
                (d * d - x) * w
            })
            .sum();
        let tail = self.tail.iter().map(|&j| counts[j]).sum::<u64>() as f64;
        Statistic { z, tail }
    }

    fn cache_key(&self, s: u64) -> String {
        let mut h = Sha256::new();
        h.update(self.fingerprint);
        h.update(s.to_le_bytes());
        hex::encode(h.finalize())
    }

    /// Thresholds for sample size `s`, computed on first use.
    pub fn thresholds(&self, s: u64) -> Thresholds {
        let key = self.cache_key(s);
        if let Some(t) = self.cache.get(&key) {
            return t;
        }
        let t = self.simulate(s, &key);
        self.cache.insert(key, t);
        t
    }

    fn simulate(&self, s: u64, key: &str) -> Thresholds {
        let seed = u64::from_str_radix(&key[..16], 16).unwrap_or(0);
        let p = &self.instance.known;
        let stats: Vec<Statistic> = (0..self.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.statistic(&multinomial_counts(&mut rng, p, s))
            })
            .collect();
        let delta = self.instance.failure_prob;
        if self.tail_mass > 0.0 {
            let mut z: Vec<f64> = stats.iter().map(|t| t.z).collect();
            let mut tail: Vec<f64> = stats.iter().map(|t| t.tail).collect();
            Thresholds { statistic: upper_quantile(&mut z, delta / 2.0), tail: upper_quantile(&mut tail, delta / 2.0), trials: self.trials }
        } else {
            let mut z: Vec<f64> = stats.iter().map(|t| t.z).collect();
            Thresholds { statistic: upper_quantile(&mut z, delta), tail: 0.0, trials: self.trials }
        }
    }

    /// Decides without checking the sample budget.
    pub fn decide(&self, batch: &SampleBatch) -> Result<Verdict> {
        if batch.counts().len() != self.instance.known.len() {
            return Err(WitError::SizeMismatch { expected: self.instance.known.len(), got: batch.counts().len() });
        }
        let t = self.thresholds(batch.total());
        let stat = self.statistic(batch.counts());
        // outcomes equal up to rounding must not straddle the threshold
        let slack = STATISTIC_SLACK * (1.0 + t.statistic.abs());
        Ok(if stat.z > t.statistic + slack || stat.tail > t.tail { Verdict::Reject } else { Verdict::Accept })
    }

    /// Null statistic and thresholds for one batch, for reporting.
    pub fn inspect(&self, batch: &SampleBatch) -> (Statistic, Thresholds) {
        (self.statistic(batch.counts()), self.thresholds(batch.total()))
    }

    /// Samples this tester asks for with constant `c`.
    pub fn required_samples(&self, c: f64) -> u64 {
        match self.kind {
            TesterKind::Worst => required_samples_worst(&self.instance, c),
            TesterKind::Instance => required_samples_instance(&self.instance, c),
        }
    }
}

/// Smallest value v among the samples with at most `alpha` of them above v.
fn upper_quantile(values: &mut [f64], alpha: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let allowed_above = (alpha * n as f64).floor() as usize;
    values[n - 1 - allowed_above.min(n - 1)]
}

fn log_factor(delta: f64) -> f64 {
    (1.0 / delta).ln()
}

/// `ceil(c * sqrt(m) / eps^2 * ln(1/delta))`.
pub fn required_samples_worst(inst: &L1TestInstance, c: f64) -> u64 {
    let m = inst.known.len() as f64;
    (c * m.sqrt() / (inst.proximity * inst.proximity) * log_factor(inst.failure_prob)).ceil() as u64
}

/// `ceil(c * max(1/eps, ||p^{-max}_{-eps/16}||_{2/3} / eps^2) * ln(1/delta))`.
pub fn required_samples_instance(inst: &L1TestInstance, c: f64) -> u64 {
    let eps = inst.proximity;
    let norm = truncate_minus_max_minus_eps(&inst.known, eps / 16.0)
        .map(|t| t.norm_two_thirds())
        .unwrap_or(0.0);
    let core = (1.0 / eps).max(norm / (eps * eps));
    (c * core * log_factor(inst.failure_prob)).ceil() as u64
}

fn checked(tester: &L1Tester, samples: &SampleBatch, c: f64) -> Result<Verdict> {
    let required = tester.required_samples(c);
    if samples.total() < required {
        return Err(WitError::InsufficientSamples { required, got: samples.total() });
    }
    tester.decide(samples)
}

/// Worst-case tester with the budget precondition enforced.
pub fn worst_case_l1_test(inst: &L1TestInstance, samples: &SampleBatch, ctx: &L1Context) -> Result<Verdict> {
    let t = L1Tester::new(inst.clone(), TesterKind::Worst, ctx)?;
    checked(&t, samples, ctx.constant)
}

/// Instance-optimal tester with the budget precondition enforced.
pub fn instance_optimal_l1_test(inst: &L1TestInstance, samples: &SampleBatch, ctx: &L1Context) -> Result<Verdict> {
    let t = L1Tester::new(inst.clone(), TesterKind::Instance, ctx)?;
    checked(&t, samples, ctx.constant)
}

/// Anything that maps a batch to a verdict.
pub trait Decide {
    fn decide_batch(&self, batch: &SampleBatch) -> Result<Verdict>;
}

impl Decide for L1Tester {
    fn decide_batch(&self, batch: &SampleBatch) -> Result<Verdict> {
        self.decide(batch)
    }
}

/// Majority vote of `k` runs on disjoint slices of the batch.
#[derive(Debug, Clone)]
pub struct MedianAmplified<T> {
    inner: T,
    k: usize,
}

pub fn amplify_median<T: Decide>(inner: T, k: usize) -> Result<MedianAmplified<T>> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(WitError::InvalidParameter(format!("repetitions must be odd, got {k}")));
    }
    Ok(MedianAmplified { inner, k })
}

impl<T> MedianAmplified<T> {
    pub fn repetitions(&self) -> usize {
        self.k
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Decide> Decide for MedianAmplified<T> {
    fn decide_batch(&self, batch: &SampleBatch) -> Result<Verdict> {
        if self.k == 1 {
            return self.inner.decide_batch(batch);
        }
        let mut accepts = 0;
        for part in batch.split(self.k)? {
            if self.inner.decide_batch(&part)?.accepted() {
                accepts += 1;
            }
        }
        Ok(if 2 * accepts > self.k { Verdict::Accept } else { Verdict::Reject })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasinorm_of_uniform_is_sqrt_n() {
        for n in [1usize, 4, 9, 100] {
            let p = vec![1.0 / n as f64; n];
            let v = quasinorm_two_thirds(&p);
            assert!((v - (n as f64).sqrt()).abs() <= 1e-12 * (n as f64).sqrt(), "{n}: {v}");
        }
        assert_eq!(quasinorm_two_thirds(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn truncation_example() {
        let t = truncate_minus_max_minus_eps(&[0.5, 0.25, 0.125, 0.125], 0.125).unwrap();
        assert_eq!(t.max_index, 0);
        assert_eq!(t.to_dense(4), vec![0.0, 0.25, 0.0, 0.125]);
        assert_eq!(t.removed, vec![2]);
        assert_eq!(t.partial, None);
        let t = truncate_minus_max_minus_eps(&[0.5, 0.25, 0.125, 0.125], 0.1875).unwrap();
        assert_eq!(t.to_dense(4), vec![0.0, 0.25, 0.0, 0.0625]);
        assert_eq!(t.partial, Some(3));
    }

    #[test]
    fn truncation_exhausts() {
        let t = truncate_minus_max_minus_eps(&[0.75, 0.25], 0.5).unwrap();
        assert!(t.exhausted());
        assert_eq!(t.shortfall, 0.25);
        let t = truncate_minus_max_minus_eps(&[1.0], 0.0).unwrap();
        assert!(t.exhausted());
    }

    #[test]
    fn budgets_match_examples() {
        let e = (-1.0f64).exp();
        let inst = L1TestInstance::new(vec![0.01; 100], 0.5, e).unwrap();
        assert_eq!(required_samples_worst(&inst, 1.0), 40);
        let inst = L1TestInstance::new(vec![1.0, 0.0], 0.5, e).unwrap();
        assert_eq!(required_samples_instance(&inst, 1.0), 2);
    }

    #[test]
    fn instance_validation() {
        assert!(L1TestInstance::new(vec![0.5, 0.5], 0.0, 0.1).is_err());
        assert!(L1TestInstance::new(vec![0.5, 0.5], 2.5, 0.1).is_err());
        assert!(L1TestInstance::new(vec![0.5, 0.5], 0.5, 0.5).is_err());
        assert!(L1TestInstance::new(vec![0.5, 0.6], 0.5, 0.1).is_err());
    }

    #[test]
    fn insufficient_samples_is_an_error() {
        let inst = L1TestInstance::new(vec![0.25; 4], 0.5, 0.1).unwrap();
        let batch = SampleBatch::from_counts(vec![1, 1, 1, 1]);
        let err = worst_case_l1_test(&inst, &batch, &L1Context::default()).unwrap_err();
        assert!(matches!(err, WitError::InsufficientSamples { got: 4, .. }));
    }

    #[test]
    fn point_mass_is_tested_exactly() {
        let ctx = L1Context { trials: 200, ..Default::default() };
        let inst = L1TestInstance::new(vec![1.0, 0.0, 0.0], 0.5, 0.1).unwrap();
        let t = L1Tester::new(inst, TesterKind::Instance, &ctx).unwrap();
        assert_eq!(t.decide(&SampleBatch::from_counts(vec![10, 0, 0])).unwrap(), Verdict::Accept);
        assert_eq!(t.decide(&SampleBatch::from_counts(vec![9, 1, 0])).unwrap(), Verdict::Reject);
    }

    #[test]
    fn thresholds_are_cached_and_deterministic() {
        let ctx = L1Context { trials: 300, ..Default::default() };
        let inst = L1TestInstance::new(vec![0.25; 4], 0.5, 0.1).unwrap();
        let a = L1Tester::new(inst.clone(), TesterKind::Worst, &ctx).unwrap();
        let t1 = a.thresholds(50);
        assert_eq!(ctx.cache.len(), 1);
        let fresh = L1Context { trials: 300, ..Default::default() };
        let b = L1Tester::new(inst, TesterKind::Worst, &fresh).unwrap();
        assert_eq!(b.thresholds(50), t1);
    }

    #[test]
    fn median_requires_odd_k() {
        let ctx = L1Context::default();
        let inst = L1TestInstance::new(vec![0.5, 0.5], 0.5, 0.1).unwrap();
        let t = L1Tester::new(inst, TesterKind::Worst, &ctx).unwrap();
        assert!(amplify_median(t.clone(), 2).is_err());
        assert!(amplify_median(t, 3).is_ok());
    }

    #[test]
    fn median_of_one_is_identity() {
        let ctx = L1Context { trials: 300, ..Default::default() };
        let inst = L1TestInstance::new(vec![0.5, 0.5], 0.5, 0.1).unwrap();
        let t = L1Tester::new(inst, TesterKind::Worst, &ctx).unwrap();
        let amp = amplify_median(t.clone(), 1).unwrap();
        for counts in [vec![20, 20], vec![40, 0], vec![25, 15]] {
            let b = SampleBatch::from_counts(counts);
            assert_eq!(amp.decide_batch(&b).unwrap(), t.decide(&b).unwrap());
        }
    }
}
