//! Sample oracles and multinomial draws.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::error::{Result, WitError};

/// Source of i.i.d. point indices. `None` means the oracle is exhausted.
pub trait SampleOracle {
    fn next_sample(&mut self) -> Option<usize>;

    /// Draws exactly `m` samples or fails with `SamplerExhausted`.
    fn draw(&mut self, m: u64) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(m as usize);
        for drawn in 0..m {
            match self.next_sample() {
                Some(x) => out.push(x),
                None => return Err(WitError::SamplerExhausted { drawn, requested: m }),
            }
        }
        Ok(out)
    }
}

/// Seeded sampler for an explicit probability vector.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl WeightedSampler {
    pub fn new(weights: &[f64], seed: u64) -> Result<Self> {
        Self::with_rng(weights, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(weights: &[f64], rng: ChaCha8Rng) -> Result<Self> {
        let index = WeightedIndex::new(weights)
            .map_err(|e| WitError::InvalidDistribution(format!("cannot sample: {e}")))?;
        Ok(Self { index, rng })
    }
}

impl SampleOracle for WeightedSampler {
    fn next_sample(&mut self) -> Option<usize> {
        Some(self.index.sample(&mut self.rng))
    }
}

/// Replays a fixed list of samples (e.g. read from a file).
#[derive(Debug, Clone)]
pub struct ReplaySampler {
    samples: Vec<usize>,
    pos: usize,
}

impl ReplaySampler {
    pub fn new(samples: Vec<usize>) -> Self {
        Self { samples, pos: 0 }
    }
}

impl SampleOracle for ReplaySampler {
    fn next_sample(&mut self) -> Option<usize> {
        let x = self.samples.get(self.pos).copied();
        self.pos += 1;
        x
    }
}

/// Multinomial counts by sequential conditional binomials.
pub fn multinomial_counts<R: Rng + ?Sized>(rng: &mut R, probs: &[f64], trials: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = trials;
    let mut rest: f64 = probs.iter().sum();
    for (j, &pj) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if j + 1 == probs.len() || rest <= 0.0 {
            counts[j] = left;
            break;
        }
        let frac = (pj / rest).clamp(0.0, 1.0);
        let k = if frac >= 1.0 {
            left
        } else if frac <= 0.0 {
            0
        } else {
            Binomial::new(left, frac).expect("valid binomial").sample(rng)
        };
        counts[j] = k;
        left -= k;
        rest -= pj;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_exhausts() {
        let mut s = ReplaySampler::new(vec![1, 2]);
        assert_eq!(s.draw(2).unwrap(), vec![1, 2]);
        let mut s = ReplaySampler::new(vec![1, 2]);
        assert!(matches!(s.draw(3), Err(WitError::SamplerExhausted { drawn: 2, requested: 3 })));
    }

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = multinomial_counts(&mut rng, &[0.1, 0.0, 0.6, 0.3], 1000);
            assert_eq!(c.iter().sum::<u64>(), 1000);
            assert_eq!(c[1], 0);
        }
    }

    #[test]
    fn weighted_sampler_is_seeded() {
        let mut a = WeightedSampler::new(&[0.2, 0.8], 9).unwrap();
        let mut b = WeightedSampler::new(&[0.2, 0.8], 9).unwrap();
        assert_eq!(a.draw(100).unwrap(), b.draw(100).unwrap());
        assert!(WeightedSampler::new(&[0.0, 0.0], 1).is_err());
    }
}
