use std::sync::atomic::{AtomicU64, Ordering};

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::{ceil_div, check_team};

/// Static block scheduling: thread `t` owns blocks `t, t+P, t+2P, ...` of
/// `chunk` iterations each. With no chunk given the loop is cut into `P`
/// blocks of ⌈N/P⌉.
///
/// Each thread advances only its own cursor, so the assignment is fixed at
/// `init` and independent of arrival order.
#[derive(Debug)]
pub struct StaticBlock {
    requested: Option<u64>,
    cyclic: bool,
    chunk: u64,
    count: u64,
    team: u64,
    // next block start per thread
    cursors: Vec<AtomicU64>,
    seq: AtomicU64,
}

impl StaticBlock {
    pub fn new(chunk: Option<u64>) -> Self {
        StaticBlock {
            requested: chunk,
            cyclic: false,
            chunk: 0,
            count: 0,
            team: 0,
            cursors: Vec::new(),
            seq: AtomicU64::new(0),
        }
    }

    /// `schedule(static,1)`: iteration `i` goes to thread `i mod P`.
    pub fn cyclic() -> Self {
        StaticBlock {
            cyclic: true,
            ..StaticBlock::new(Some(1))
        }
    }

    pub fn chunk(&self) -> u64 {
        self.chunk
    }
}

impl Scheduler for StaticBlock {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        let n = lp.iteration_count();
        let p = team_size as u64;
        self.count = n;
        self.team = p;
        self.chunk = self
            .requested
            .or(lp.explicit_chunk())
            .unwrap_or_else(|| ceil_div(n, p).max(1));
        self.cursors = (0..p)
            .map(|t| AtomicU64::new(t.saturating_mul(self.chunk)))
            .collect();
        self.seq = AtomicU64::new(0);
        Ok(())
    }

    fn next(&self, thread: usize) -> Option<Chunk> {
        let cursor = &self.cursors[thread];
        let start = cursor.load(Ordering::Relaxed);
        if start >= self.count {
            return None;
        }
        let size = self.chunk.min(self.count - start);
        cursor.store(
            start.saturating_add(self.team.saturating_mul(self.chunk)),
            Ordering::Relaxed,
        );
        let seq = self.seq.fetch_add(1, Ordering::Relaxed);
        Some(Chunk::new(start, size, seq))
    }

    fn info(&self) -> StrategyInfo {
        if self.cyclic {
            StrategyInfo::new("static-cyclic", true)
        } else {
            StrategyInfo::new("static", false).param("chunk", self.chunk)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(s: &StaticBlock, t: usize) -> Vec<(u64, u64)> {
        std::iter::from_fn(|| s.next(t)).map(|c| (c.first, c.end())).collect()
    }

    fn init(mut s: StaticBlock, n: u64, p: usize) -> StaticBlock {
        s.init(&LoopDescriptor::range(n), p, &LoopRecord::default()).unwrap();
        s
    }

    #[test]
    fn default_block_is_ceil_n_over_p() {
        let s = init(StaticBlock::new(None), 100, 4);
        assert_eq!(drain(&s, 0), vec![(0, 25)]);
        assert_eq!(drain(&s, 3), vec![(75, 100)]);
    }

    #[test]
    fn round_robin_blocks() {
        let s = init(StaticBlock::new(Some(10)), 100, 4);
        assert_eq!(drain(&s, 0), vec![(0, 10), (40, 50), (80, 90)]);
    }

    #[test]
    fn more_threads_than_work() {
        let s = init(StaticBlock::new(None), 5, 8);
        for t in 0..5 {
            assert_eq!(drain(&s, t), vec![(t as u64, t as u64 + 1)]);
        }
        for t in 5..8 {
            assert!(s.next(t).is_none());
        }
    }

    #[test]
    fn cyclic_assignment() {
        let s = init(StaticBlock::cyclic(), 6, 2);
        assert_eq!(drain(&s, 0), vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(drain(&s, 1), vec![(1, 2), (3, 4), (5, 6)]);
        let s = init(StaticBlock::cyclic(), 1, 4);
        assert_eq!(drain(&s, 0), vec![(0, 1)]);
        assert!((1..4).all(|t| s.next(t).is_none()));
        let s = init(StaticBlock::cyclic(), 0, 4);
        assert!((0..4).all(|t| s.next(t).is_none()));
    }

    #[test]
    fn termination_is_sticky() {
        let s = init(StaticBlock::new(Some(3)), 7, 2);
        drain(&s, 1);
        assert!(s.next(1).is_none());
        assert!(s.next(1).is_none());
    }

    #[test]
    fn explicit_loop_chunk_used_when_no_token_param() {
        let mut s = StaticBlock::new(None);
        let lp = LoopDescriptor::range(100).with_chunk(10).unwrap();
        s.init(&lp, 4, &LoopRecord::default()).unwrap();
        assert_eq!(s.chunk(), 10);
    }
}
