//! Tree embedding of a net hierarchy: domination of the base metric and the
//! per-level decomposition of the tree Wasserstein distance.

use std::sync::Arc;

use wit_core::generators::{random_distribution, random_points};
use wit_core::metric::{wasserstein_exact, PointMetric};
use wit_core::nets::NetHierarchy;
use wit_core::tree::embed;

fn main() -> wit_core::Result<()> {
    let space = Arc::new(random_points(25, 2, PointMetric::Euclidean, 11)?);
    let h = NetHierarchy::build(space.clone(), 0.2)?;
    let tree = embed(&h);
    println!("{} leaves, {} nodes", tree.num_leaves(), tree.num_nodes());

    let mut worst = f64::INFINITY;
    for x in 0..space.len() {
        for y in 0..space.len() {
            if x != y {
                worst = worst.min(tree.tree_distance(x, y) / space.dist(x, y));
            }
        }
    }
    println!("min d_T / d over pairs: {worst:.3}");

    let p = random_distribution(space.clone(), 1.0, 1)?;
    let q = random_distribution(space, 0.5, 2)?;
    for t in tree.level_l1_terms(p.mass(), q.mass()) {
        let label = t.level.map_or("leaves".to_string(), |i| format!("level {i}"));
        println!("  {label:>9}: weight {:>8.4}  L1 {:.4}", t.weight, t.l1);
    }
    println!("W_T(p, q) = {:.4}", tree.tree_wasserstein(&p, &q)?);
    println!("W_d(p, q) = {:.4}", wasserstein_exact(&p, &q)?.cost);
    Ok(())
}
