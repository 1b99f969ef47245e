use std::sync::Mutex;

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::{ceil_div, check_team};

/// Guided self-scheduling: each dequeue takes ⌈R/P⌉ of the `R` remaining
/// iterations, never less than `min_chunk`.
#[derive(Debug)]
pub struct Guided {
    requested: Option<u64>,
    min_chunk: u64,
    count: u64,
    team: u64,
    state: Mutex<Cursor>,
}

#[derive(Debug, Default)]
pub(crate) struct Cursor {
    pub(crate) next_first: u64,
    pub(crate) seq: u64,
}

impl Guided {
    pub fn new(min_chunk: Option<u64>) -> Self {
        Guided {
            requested: min_chunk,
            min_chunk: 1,
            count: 0,
            team: 1,
            state: Mutex::default(),
        }
    }
}

impl Scheduler for Guided {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        self.min_chunk = self.requested.unwrap_or_else(|| lp.chunk_param());
        self.count = lp.iteration_count();
        self.team = team_size as u64;
        self.state = Mutex::default();
        Ok(())
    }

    fn next(&self, _thread: usize) -> Option<Chunk> {
        let mut st = self.state.lock().unwrap();
        let remaining = self.count - st.next_first;
        if remaining == 0 {
            return None;
        }
        let size = ceil_div(remaining, self.team).max(self.min_chunk).min(remaining);
        let chunk = Chunk::new(st.next_first, size, st.seq);
        st.next_first += size;
        st.seq += 1;
        Some(chunk)
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("guided", true).param("min_chunk", self.min_chunk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(n: u64, p: usize, min: Option<u64>) -> Vec<u64> {
        let mut g = Guided::new(min);
        g.init(&LoopDescriptor::range(n), p, &LoopRecord::default()).unwrap();
        std::iter::from_fn(|| g.next(0)).map(|c| c.size).collect()
    }

    #[test]
    fn pinned_sequences() {
        assert_eq!(sizes(100, 4, None)[..3], [25, 19, 14]);
        assert_eq!(sizes(4, 4, None), vec![1, 1, 1, 1]);
        assert_eq!(sizes(1, 1, None), vec![1]);
    }

    #[test]
    fn min_chunk_floor() {
        let s = sizes(100, 4, Some(10));
        assert!(s[..s.len() - 1].iter().all(|&x| x >= 10));
        assert_eq!(s.iter().sum::<u64>(), 100);
    }
}
