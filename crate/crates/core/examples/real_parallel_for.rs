//! Run a real loop body on OS threads: sum of squares with self-scheduling,
//! and a body that fails part-way.
//!
//! ```text
//! cargo run --example real_parallel_for
//! ```

use std::sync::atomic::{AtomicU64, Ordering};

use loopsched::{parallel_for, strategies, BodyError, HistoryStore, LoopDescriptor, RunFailure, TeamConfig};

/// `(sum of i² for i in 0..1000, failure reported by the second run)`.
pub fn run_example() -> Result<(u64, Option<RunFailure>), Box<dyn std::error::Error>> {
    let threads = std::thread::available_parallelism().map_or(2, |n| n.get());
    let team = TeamConfig::real(threads);
    let lp = LoopDescriptor::range(1000).with_chunk(16)?;
    let mut history = HistoryStore::new();

    let sum = AtomicU64::new(0);
    let mut dynamic = strategies::lookup("dynamic", 0)?;
    let report = parallel_for(
        &lp,
        &mut dynamic,
        |_, i| {
            sum.fetch_add((i * i) as u64, Ordering::Relaxed);
            Ok(())
        },
        &team,
        &mut history,
    )?;
    assert!(report.is_ok());

    let failing = parallel_for(
        &lp,
        &mut dynamic,
        |_, i| if i == 500 { Err(BodyError::new("bad input")) } else { Ok(()) },
        &team,
        &mut history,
    )?;
    Ok((sum.into_inner(), failing.error))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (sum, failure) = run_example()?;
    println!("sum of squares: {sum}");
    println!("failing run: {failure:?}");
    Ok(())
}
