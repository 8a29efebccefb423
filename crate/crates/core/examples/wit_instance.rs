//! Instance tester on a near-concentrated reference: budgets against the
//! worst-case formula, the doubling check, and rates over many runs.

use wit_core::generators::{make_grid, mix_with_point};
use wit_core::harness::{run_trials, ExperimentConfig, PSource, QSource, SpaceSource};
use wit_core::l1::TesterKind;
use wit_core::metric::{Distribution, PointMetric};
use wit_core::nets::{default_doubling_radii, doubling_constant};
use wit_core::wit::{budget_instance, budget_worst, instance_level_norms, WitConfig};

fn main() -> wit_core::Result<()> {
    let eps = 0.1;
    let grid = make_grid(2, 0.125, PointMetric::Linf)?;
    let h = grid.hierarchy(eps)?;
    let p = mix_with_point(&Distribution::uniform(grid.space().clone()), 40, 0.9)?;
    let cfg = WitConfig::new(eps)?;

    let dc = doubling_constant(grid.space(), &p, &default_doubling_radii(&h))?;
    println!("doubling constant {:.1}", dc.constant);
    for (i, norm) in instance_level_norms(&h, &p, eps)? {
        println!("  level {i:>3}: truncated norm {norm:.4}, |N_i| = {}", h.level(i)?.len());
    }
    println!("budget_worst {}, budget_instance {}", budget_worst(&h, &cfg), budget_instance(&h, &p, &cfg)?);

    for (name, q) in [("q = p", QSource::EqualToP), ("far q", QSource::FarInstance { at: 0, margin: 0.05 })] {
        let exp = ExperimentConfig {
            space: SpaceSource::Grid { dim: 2, h: 0.125, metric: PointMetric::Linf },
            p: PSource::Concentrated { at: 40, weight: 0.9 },
            q,
            epsilon: eps,
            trials: 200,
            seed: 9,
            mode: TesterKind::Instance,
            output: None,
            tester: WitConfig::default(),
        };
        let s = run_trials(&exp)?;
        println!("{name}: accept rate {:.3} with {} samples per run", s.accept_rate, s.budget);
    }
    Ok(())
}
