//! The scheduler contract every strategy implements.
//!
//! A worksharing loop runs as
//!
//! ```text
//! init(...)            // setup + enqueue, once, all threads quiescent
//! barrier
//! while let Some(c) = next(tid) {
//!     begin_chunk(tid, c)
//!     for i in c { body(i) }
//!     end_chunk(tid, c, elapsed)
//! }
//! fini(...)            // once, after every thread has drained
//! ```
//!
//! The iteration todo-list is never materialized; strategies keep their own
//! shared or per-thread counters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

/// Introspection data echoed into traces.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StrategyInfo {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    /// True iff chunk sizes never grow in dequeue order.
    pub monotonic_chunks: bool,
}

impl StrategyInfo {
    pub fn new(name: impl Into<String>, monotonic_chunks: bool) -> Self {
        StrategyInfo {
            name: name.into(),
            parameters: BTreeMap::new(),
            monotonic_chunks,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_owned(), value.to_string());
        self
    }
}

/// User-defined loop scheduling: `init` / `next` / `fini` plus timing hooks.
///
/// `next`, `begin_chunk` and `end_chunk` are called concurrently from every
/// team thread. `init` and `fini` get exclusive access. Once `next` returns
/// `None` for a thread, it must keep returning `None` for that thread until
/// the next `init`.
pub trait Scheduler: Send + Sync {
    fn init(
        &mut self,
        lp: &LoopDescriptor,
        team_size: usize,
        history: &LoopRecord,
    ) -> Result<(), SchedError>;

    fn next(&self, thread: usize) -> Option<Chunk>;

    fn fini(&mut self, _history: &mut LoopRecord) {}

    fn begin_chunk(&self, _thread: usize, _chunk: &Chunk) {}

    /// `elapsed` is in whatever unit the executor measures: virtual ticks in
    /// simulation, nanoseconds on real threads.
    fn end_chunk(&self, _thread: usize, _chunk: &Chunk, _elapsed: u64) {}

    fn info(&self) -> StrategyInfo;
}

impl<S: Scheduler + ?Sized> Scheduler for Box<S> {
    fn init(
        &mut self,
        lp: &LoopDescriptor,
        team_size: usize,
        history: &LoopRecord,
    ) -> Result<(), SchedError> {
        (**self).init(lp, team_size, history)
    }

    fn next(&self, thread: usize) -> Option<Chunk> {
        (**self).next(thread)
    }

    fn fini(&mut self, history: &mut LoopRecord) {
        (**self).fini(history)
    }

    fn begin_chunk(&self, thread: usize, chunk: &Chunk) {
        (**self).begin_chunk(thread, chunk)
    }

    fn end_chunk(&self, thread: usize, chunk: &Chunk, elapsed: u64) {
        (**self).end_chunk(thread, chunk, elapsed)
    }

    fn info(&self) -> StrategyInfo {
        (**self).info()
    }
}
