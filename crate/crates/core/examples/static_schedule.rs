//! Describe a strided loop and see which thread runs which indices under
//! the default static schedule.
//!
//! ```text
//! cargo run --example static_schedule
//! ```

use loopsched::{chunk_to_source_indices, simulate, strategies, Chunk, CostModel, HistoryStore, LoopDescriptor, TeamConfig};

/// Source indices executed by each of the 3 threads for `for i in (10..-14).step_by(-3)`.
pub fn run_example() -> Result<Vec<Vec<i64>>, Box<dyn std::error::Error>> {
    let lp = LoopDescriptor::new(10, -14, -3)?;
    let mut schedule = strategies::lookup("static", 0)?;
    let cost = CostModel::constant(1.0)?;
    let report = simulate(&lp, &mut schedule, &cost, &TeamConfig::sim(3), &mut HistoryStore::new())?;

    let mut per_thread = vec![Vec::new(); 3];
    for c in &report.chunk_log {
        let chunk = Chunk::new(c.first, c.size, c.seq);
        per_thread[c.thread].extend(chunk_to_source_indices(&chunk, &lp)?);
    }
    Ok(per_thread)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (t, indices) in run_example()?.iter().enumerate() {
        println!("thread {t}: {indices:?}");
    }
    Ok(())
}
