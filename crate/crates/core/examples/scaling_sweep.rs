//! Budget formulas on hypercube grids across epsilon and their log-log
//! slopes; writes the sweep as CSV to stdout.

use wit_core::harness::bench_scaling;

fn main() -> wit_core::Result<()> {
    let eps: Vec<f64> = (3..=7).map(|k| 2f64.powi(-k)).collect();
    let r = bench_scaling(&[1, 2, 3, 4, 5, 6], &eps)?;
    for f in &r.fits {
        eprintln!(
            "d={} slope {:>6.3} target {:>4} (instance {:>6.3}, with log factor {:>6.3})",
            f.dim, f.slope_worst, f.target, f.slope_instance, f.slope_worst_with_log
        );
    }
    r.write_csv(std::io::stdout().lock())
}
