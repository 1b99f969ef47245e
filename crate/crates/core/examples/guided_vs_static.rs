//! Triangular workloads (iteration `i` costs `1 + i/100`) leave the last
//! static block far behind; guided self-scheduling evens it out.
//!
//! ```text
//! cargo run --example guided_vs_static
//! ```

use loopsched::{imbalance_metrics, simulate, strategies, CostModel, HistoryStore, ImbalanceMetrics, LoopDescriptor, TeamConfig};

fn metrics(token: &str) -> Result<ImbalanceMetrics, Box<dyn std::error::Error>> {
    let lp = LoopDescriptor::range(10_000);
    let mut schedule = strategies::lookup(token, 0)?;
    let cost = CostModel::linear(1.0, 0.01)?;
    let report = simulate(&lp, &mut schedule, &cost, &TeamConfig::sim(8), &mut HistoryStore::new())?;
    Ok(imbalance_metrics(&report))
}

/// `(static, guided)` metrics.
pub fn run_example() -> Result<(ImbalanceMetrics, ImbalanceMetrics), Box<dyn std::error::Error>> {
    Ok((metrics("static")?, metrics("guided")?))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (stat, guided) = run_example()?;
    println!("schedule  makespan  imbalance%   cov  chunks");
    for (name, m) in [("static", stat), ("guided", guided)] {
        println!(
            "{name:<8} {:>9} {:>10.2} {:>6.3} {:>6}",
            m.makespan, m.percent_imbalance, m.cov, m.total_chunks
        );
    }
    Ok(())
}
