//! The q* reduction sampler on a 5x5 grid: induced law, empirical check and
//! the packing lower bound against exact transport.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wit_core::generators::{build_qstar, make_grid, random_simplex};
use wit_core::metric::{wasserstein_exact, wasserstein_lower_bound_packing, Distribution, PointMetric};
use wit_core::sampling::{SampleOracle, WeightedSampler};

fn main() -> wit_core::Result<()> {
    let grid = make_grid(2, 0.25, PointMetric::Linf)?;
    let h = grid.hierarchy(0.25)?;
    let p = Distribution::uniform(grid.space().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_simplex(4, &mut rng);

    let mut qs = build_qstar(&p, &h, -1, WeightedSampler::new(&q, 1)?, 2)?;
    println!("centers {:?}, anchor {}", qs.centers(), qs.anchor());
    println!("acceptance probabilities {:?}", qs.accept_probs());
    let law = qs.induced(&q)?;

    let n = 100_000;
    let mut counts = vec![0u64; grid.len()];
    for x in qs.draw(n)? {
        counts[x] += 1;
    }
    for x in law.support() {
        println!("  point {x:>2}: exact {:.4}, empirical {:.4}", law.mass()[x], counts[x] as f64 / n as f64);
    }

    let bound = wasserstein_lower_bound_packing(&p, &law, qs.centers(), 0.25)?;
    let w = wasserstein_exact(&p, &law)?.cost;
    println!("packing bound {:.4} <= W {:.4} (pairwise guarantee: {})", bound.value, w, bound.guaranteed);
    Ok(())
}
