//! Write a run's chunk trace as CSV and JSON, then load the JSON back.
//!
//! ```text
//! cargo run --example trace_export
//! ```

use loopsched::trace::import_json;
use loopsched::{export, simulate, strategies, CostModel, ExecutionReport, Format, HistoryStore, LoopDescriptor, TeamConfig};

pub fn run_example() -> Result<(ExecutionReport, ExecutionReport, String), Box<dyn std::error::Error>> {
    let lp = LoopDescriptor::range(200);
    let mut tss = strategies::lookup("tss", 0)?;
    let cost = CostModel::uniform(1.0, 4.0, 3)?;
    let team = TeamConfig::sim(4).with_overhead(1);
    let report = simulate(&lp, &mut tss, &cost, &team, &mut HistoryStore::new())?;

    let dir = std::env::temp_dir().join(format!("loopsched-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    export(&report, Format::Csv, &dir.join("trace.csv"))?;
    export(&report, Format::Json, &dir.join("trace.json"))?;
    let csv = std::fs::read_to_string(dir.join("trace.csv"))?;
    let loaded = import_json(&dir.join("trace.json"))?;
    std::fs::remove_dir_all(&dir)?;
    Ok((report, loaded, csv))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (report, loaded, csv) = run_example()?;
    print!("{csv}");
    println!("json round trip equal: {}", report == loaded);
    Ok(())
}
