//! L1 identity testers on the Paninski pair: worst-case and instance-optimal
//! statistics, budgets, and median amplification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wit_core::generators::paninski_pair;
use wit_core::l1::{
    amplify_median, required_samples_instance, required_samples_worst, Decide, L1Context, L1TestInstance,
    L1Tester, SampleBatch, TesterKind,
};
use wit_core::sampling::multinomial_counts;

fn main() -> wit_core::Result<()> {
    let (p, q) = paninski_pair(100, 0.5)?;
    let inst = L1TestInstance::new(p.clone(), 0.5, 0.1)?;
    println!("worst budget {}, instance budget {}", required_samples_worst(&inst, 1.0), required_samples_instance(&inst, 1.0));

    let ctx = L1Context::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [TesterKind::Worst, TesterKind::Instance] {
        let tester = L1Tester::new(inst.clone(), kind, &ctx)?;
        let s = tester.required_samples(1.0) * 4;
        let (mut acc_p, mut rej_q) = (0, 0);
        for _ in 0..200 {
            if tester.decide(&SampleBatch::from_counts(multinomial_counts(&mut rng, &p, s)))?.accepted() {
                acc_p += 1;
            }
            if !tester.decide(&SampleBatch::from_counts(multinomial_counts(&mut rng, &q, s)))?.accepted() {
                rej_q += 1;
            }
        }
        println!("{kind}: {s} samples, accepts p {acc_p}/200, rejects q {rej_q}/200");
    }

    // a skewed reference: the instance tester pools the light tail
    let mut skew: Vec<f64> = (0..200).map(|j| 1.0 / (j + 1) as f64).collect();
    let z: f64 = skew.iter().sum();
    skew.iter_mut().for_each(|x| *x /= z);
    let inst = L1TestInstance::new(skew, 0.5, 0.1)?;
    println!("skewed: worst budget {}, instance budget {}", required_samples_worst(&inst, 1.0), required_samples_instance(&inst, 1.0));

    let tester = L1Tester::new(inst, TesterKind::Worst, &ctx)?;
    let amplified = amplify_median(tester, 5)?;
    let draws: Vec<usize> = (0..500).map(|k| k % 7).collect();
    println!("median of 5 on a bad batch: {}", amplified.decide_batch(&SampleBatch::from_draws(draws, 200)?)?);
    Ok(())
}
