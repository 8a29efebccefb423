//! Runs a TOML experiment config and prints the JSON summary, the same path
//! `witest test --config` takes.

use wit_core::harness::{run_trials, ExperimentConfig};

const CONFIG: &str = r#"
epsilon = 0.2
trials = 50
seed = 2024
mode = "worst"

[space]
kind = "grid"
dim = 2
h = 0.125

[p]
kind = "random"
density = 1.0
seed = 5

[q]
kind = "far-instance"
at = 80
margin = 0.05
"#;

fn main() -> wit_core::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => CONFIG.to_string(),
    };
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    let mut summary = run_trials(&cfg)?;
    eprintln!("reject rate {:.3} over {} trials (W = {:?})", summary.reject_rate, summary.trials, summary.far_distance);
    summary.reports.truncate(1);
    summary.write_json(std::io::stdout().lock())?;
    println!();
    Ok(())
}
