use std::sync::atomic::{AtomicU64, Ordering};

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::check_team;

/// Dynamic block scheduling (fixed-size chunking). A shared counter hands
/// out consecutive blocks of `chunk` iterations to whichever thread asks.
/// With `chunk = 1` this is pure self-scheduling.
#[derive(Debug)]
pub struct DynamicChunked {
    requested: Option<u64>,
    self_sched: bool,
    chunk: u64,
    count: u64,
    next_first: AtomicU64,
}

impl DynamicChunked {
    pub fn new(chunk: Option<u64>) -> Self {
        DynamicChunked {
            requested: chunk,
            self_sched: false,
            chunk: 1,
            count: 0,
            next_first: AtomicU64::new(0),
        }
    }

    pub fn self_sched() -> Self {
        DynamicChunked {
            self_sched: true,
            ..DynamicChunked::new(Some(1))
        }
    }
}

impl Scheduler for DynamicChunked {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        self.chunk = self.requested.unwrap_or_else(|| lp.chunk_param());
        self.count = lp.iteration_count();
        self.next_first = AtomicU64::new(0);
        Ok(())
    }

    fn next(&self, _thread: usize) -> Option<Chunk> {
        let (n, c) = (self.count, self.chunk);
        let first = self
            .next_first
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |f| {
                (f < n).then(|| f + c.min(n - f))
            })
            .ok()?;
        // every earlier chunk was full-sized
        Some(Chunk::new(first, c.min(n - first), first / c))
    }

    fn info(&self) -> StrategyInfo {
        if self.self_sched {
            StrategyInfo::new("ss", true)
        } else {
            StrategyInfo::new("dynamic", true).param("chunk", self.chunk)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(mut s: DynamicChunked, n: u64, p: usize) -> Vec<u64> {
        s.init(&LoopDescriptor::range(n), p, &LoopRecord::default()).unwrap();
        let mut out = Vec::new();
        let mut t = 0;
        while let Some(c) = s.next(t % p) {
            assert_eq!(c.seq, out.len() as u64);
            out.push(c.size);
            t += 1;
        }
        out
    }

    #[test]
    fn blocks_of_chunk() {
        assert_eq!(sizes(DynamicChunked::new(Some(4)), 10, 3), vec![4, 4, 2]);
        assert!(sizes(DynamicChunked::new(Some(4)), 0, 3).is_empty());
    }

    #[test]
    fn chunk_one_equals_self_sched() {
        assert_eq!(
            sizes(DynamicChunked::new(Some(1)), 9, 2),
            sizes(DynamicChunked::self_sched(), 9, 2)
        );
        assert_eq!(sizes(DynamicChunked::self_sched(), 7, 3), vec![1; 7]);
    }

    #[test]
    fn defaults_to_loop_chunk_param() {
        let mut s = DynamicChunked::new(None);
        let lp = LoopDescriptor::range(10).with_chunk(3).unwrap();
        s.init(&lp, 2, &LoopRecord::default()).unwrap();
        assert_eq!(s.next(0).unwrap().size, 3);
    }

    #[test]
    fn exhausted_counter_stays_exhausted() {
        let mut s = DynamicChunked::new(Some(u64::MAX));
        s.init(&LoopDescriptor::range(5), 1, &LoopRecord::default()).unwrap();
        assert_eq!(s.next(0).unwrap().size, 5);
        assert!(s.next(0).is_none());
        assert!(s.next(0).is_none());
    }
}
