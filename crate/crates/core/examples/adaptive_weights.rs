//! Adaptive weighted factoring on a team where thread 3 runs at half
//! speed. After the first invocation AWF has measured the rates and gives
//! the slow thread half as much work.
//!
//! ```text
//! cargo run --example adaptive_weights
//! ```

use loopsched::{run_invocations, strategies, CostModel, HistoryStore, LoopDescriptor, TeamConfig};

/// Makespan and the weights stored after the invocation.
type Invocation = (u64, Vec<f64>);

pub fn run_example() -> Result<Vec<Invocation>, Box<dyn std::error::Error>> {
    let lp = LoopDescriptor::range(10_000).with_site("hetero");
    let team = TeamConfig::sim(4).with_speeds(vec![1.0, 1.0, 1.0, 0.5]);
    let cost = CostModel::constant(1.0)?;
    let mut awf = strategies::lookup("awf", 0)?;
    let mut history = HistoryStore::new();

    let mut out = Vec::new();
    for _ in 0..5 {
        let report = run_invocations(1, &lp, &mut awf, &cost, &team, &mut history)?.remove(0);
        let weights = history.get(lp.site()).map(|r| r.weights.clone()).unwrap_or_default();
        out.push((report.makespan(), weights));
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (i, (makespan, weights)) in run_example()?.iter().enumerate() {
        let ws: Vec<String> = weights.iter().map(|w| format!("{w:.3}")).collect();
        println!("invocation {}: makespan {makespan:>5}  next weights [{}]", i + 1, ws.join(", "));
    }
    Ok(())
}
