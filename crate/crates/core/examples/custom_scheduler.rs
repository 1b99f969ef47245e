//! A user-defined schedule: hand out chunks from the end of the loop
//! backwards, and remember in the loop's history how many chunks were
//! issued so the next invocation can double the chunk size.
//!
//! ```text
//! cargo run --example custom_scheduler
//! ```

use std::sync::Mutex;

use loopsched::{
    run_invocations, Chunk, CostModel, HistoryStore, LoopDescriptor, LoopRecord, SchedError, Scheduler,
    StrategyInfo, TeamConfig,
};
use serde_json::json;

#[derive(Default)]
struct Backwards {
    chunk: u64,
    // (iterations not yet handed out, next seq)
    state: Mutex<(u64, u64)>,
}

impl Scheduler for Backwards {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, history: &LoopRecord) -> Result<(), SchedError> {
        if team_size == 0 {
            return Err(SchedError::EmptyTeam);
        }
        let previous = history
            .user_blob
            .as_ref()
            .and_then(|b| b["chunk"].as_u64());
        self.chunk = previous.map_or(lp.chunk_param(), |c| c * 2);
        self.state = Mutex::new((lp.iteration_count(), 0));
        Ok(())
    }

    fn next(&self, _thread: usize) -> Option<Chunk> {
        let mut st = self.state.lock().unwrap();
        let (left, seq) = *st;
        if left == 0 {
            return None;
        }
        let size = self.chunk.min(left);
        *st = (left - size, seq + 1);
        Some(Chunk::new(left - size, size, seq))
    }

    fn fini(&mut self, history: &mut LoopRecord) {
        let issued = self.state.lock().unwrap().1;
        history.user_blob = Some(json!({ "chunk": self.chunk, "issued": issued }));
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("backwards", false).param("chunk", self.chunk)
    }
}

/// Chunks issued by each of three invocations of the same loop site.
pub fn run_example() -> Result<Vec<usize>, Box<dyn std::error::Error>> {
    let lp = LoopDescriptor::range(64).with_chunk(4)?.with_site("backwards-demo");
    let mut history = HistoryStore::new();
    let reports = run_invocations(
        3,
        &lp,
        &mut Backwards::default(),
        &CostModel::constant(1.0)?,
        &TeamConfig::sim(2),
        &mut history,
    )?;
    println!("history: {}", history.to_json()?);
    Ok(reports.iter().map(|r| r.total_chunks()).collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (i, chunks) in run_example()?.iter().enumerate() {
        println!("invocation {}: {chunks} chunks", i + 1);
    }
    Ok(())
}
