//! Worst-case Wasserstein identity tester on the 2-D grid: one run with the
//! per-level report, then acceptance and rejection rates over many runs.

use wit_core::generators::{far_by_concentration, make_grid};
use wit_core::harness::{run_trials, ExperimentConfig, PSource, QSource, SpaceSource};
use wit_core::l1::TesterKind;
use wit_core::metric::{Distribution, PointMetric};
use wit_core::sampling::WeightedSampler;
use wit_core::tree::TreeEmbedding;
use wit_core::wit::{budget_worst, wit_worst, WitConfig};

fn main() -> wit_core::Result<()> {
    let eps = 0.2;
    let grid = make_grid(2, 0.125, PointMetric::Linf)?;
    let h = grid.hierarchy(eps)?;
    let tree = TreeEmbedding::new(&h);
    let p = Distribution::uniform(grid.space().clone());
    let cfg = WitConfig::new(eps)?;
    println!("budget_worst = {}", budget_worst(&h, &cfg));

    let far = far_by_concentration(&p, 80, eps, 0.05)?;
    println!("far alternative certified at W = {:.4}", far.distance);
    let mut sampler = WeightedSampler::new(far.q.mass(), 1)?;
    let report = wit_worst(&h, &tree, &p, &mut sampler, &cfg)?;
    println!("verdict on far q: {}", report.verdict);
    for l in &report.per_level {
        println!("  level {:>3}: eps_i {:.3}  {}  Z {:>10.1} vs {:>8.1}", l.level, l.proximity, l.verdict, l.statistic, l.threshold);
    }

    for (name, q) in [("q = p", QSource::EqualToP), ("far q", QSource::FarInstance { at: 80, margin: 0.05 })] {
        let exp = ExperimentConfig {
            space: SpaceSource::Grid { dim: 2, h: 0.125, metric: PointMetric::Linf },
            p: PSource::Uniform,
            q,
            epsilon: eps,
            trials: 200,
            seed: 42,
            mode: TesterKind::Worst,
            output: None,
            tester: WitConfig::default(),
        };
        let s = run_trials(&exp)?;
        println!("{name}: accept rate {:.3}, 95% CI [{:.3}, {:.3}]", s.accept_rate, s.accept_ci.0, s.accept_ci.1);
    }
    Ok(())
}
