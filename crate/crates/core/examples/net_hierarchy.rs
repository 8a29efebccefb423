//! Greedy net hierarchy on a random point cloud: validation, cluster masses,
//! the net/packing duality check and the doubling estimate.

use std::sync::Arc;

use wit_core::generators::{random_distribution, random_points};
use wit_core::metric::PointMetric;
use wit_core::nets::{
    cluster_distribution, default_doubling_radii, doubling_constant, net_packing_duality_check, NetHierarchy,
};

fn main() -> wit_core::Result<()> {
    let space = Arc::new(random_points(40, 2, PointMetric::Euclidean, 7)?);
    let h = NetHierarchy::build(space.clone(), 0.25)?;
    println!("levels {}..={} on {} points (diameter {:.3})", h.lowest(), h.highest(), space.len(), space.diameter());
    for net in h.levels() {
        println!("  level {:>3}: {:>2} centers", net.level, net.len());
    }
    assert!(h.validate().is_ok());

    let p = random_distribution(space.clone(), 0.6, 3)?;
    for i in h.lowest()..=h.highest() {
        let c = cluster_distribution(&h, &p, i)?;
        assert!(c.check_sandwich(h.level(i)?, &p).is_none());
    }
    println!("cluster sandwich holds at every level");

    let small = Arc::new(random_points(10, 2, PointMetric::Linf, 1)?);
    let r = net_packing_duality_check(&small, 0.3)?;
    println!("N(0.3) = {}, P(0.3) = {}, N(0.15) = {}", r.min_net, r.max_packing, r.min_net_half);

    let dc = doubling_constant(&space, &p, &default_doubling_radii(&h))?;
    println!("doubling constant on the radii grid: {}", dc.constant);
    if let Some(w) = dc.witnesses.first() {
        println!("  worst ball: x = {}, r = {}, ratio = {}", w.x, w.r, w.ratio);
    }
    Ok(())
}
