//! Two loop sites share one history store; each keeps its own per-thread
//! statistics and invocation count, and the whole store dumps to JSON.
//!
//! ```text
//! cargo run --example history_dump
//! ```

use loopsched::{run_invocations, strategies, CostModel, HistoryStore, LoopDescriptor, TeamConfig};

pub fn run_example() -> Result<HistoryStore, Box<dyn std::error::Error>> {
    let team = TeamConfig::sim(2);
    let cost = CostModel::gaussian(5.0, 1.0, 9)?;
    let mut history = HistoryStore::new();

    let outer = LoopDescriptor::range(100).with_site("solver.rs:42");
    let inner = LoopDescriptor::range(30).with_site("solver.rs:57");
    run_invocations(2, &outer, &mut strategies::lookup("fac2", 0)?, &cost, &team, &mut history)?;
    run_invocations(3, &inner, &mut strategies::lookup("guided", 0)?, &cost, &team, &mut history)?;
    Ok(history)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{}", run_example()?.to_json()?);
    Ok(())
}
