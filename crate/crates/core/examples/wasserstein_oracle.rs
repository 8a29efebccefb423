//! Exact transport between two distributions on a small metric space, with
//! the dual certificate checked.

use std::sync::Arc;

use wit_core::metric::{build_space, wasserstein_exact, Distribution, Tolerances};

fn main() -> wit_core::Result<()> {
    // a path 0 - 1 - 2 - 3 with unit edges, as a distance matrix
    let d: Vec<Vec<f64>> = (0..4).map(|a: i32| (0..4).map(|b: i32| (a - b).abs() as f64).collect()).collect();
    let space = Arc::new(build_space(d)?);
    let p = Distribution::new(space.clone(), vec![0.5, 0.5, 0.0, 0.0])?;
    let q = Distribution::new(space, vec![0.0, 0.0, 0.25, 0.75])?;

    let plan = wasserstein_exact(&p, &q)?;
    println!("W1(p, q) = {}", plan.cost);
    for &(a, b, m) in &plan.entries {
        println!("  move {m:.3} from {a} to {b}");
    }
    plan.verify(&p, &q, Tolerances::default())?;
    let dual = plan.certificate.objective(p.mass(), q.mass());
    println!("dual objective = {dual} (certificate verified)");
    Ok(())
}
