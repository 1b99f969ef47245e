//! Every built-in schedule against an exponential workload, the same
//! comparison `loopsched --schedule a --schedule b ...` prints as CSV.
//!
//! ```text
//! cargo run --example strategy_sweep
//! ```

use loopsched::cli::{sweep, ExperimentConfig};
use loopsched::strategies::TOKENS;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        iters: 10_000,
        threads: 8,
        schedules: TOKENS
            .iter()
            .map(|t| if *t == "wf2" { "wf2,1:1:1:1:1:1:1:1" } else { t }.parse())
            .collect::<Result<_, _>>()?,
        workloads: vec!["exponential:10:42".parse()?],
        overhead: 2,
        ..ExperimentConfig::default()
    };
    Ok(sweep(&cfg)?.to_csv())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
