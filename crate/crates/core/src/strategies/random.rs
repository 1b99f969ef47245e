use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::{ceil_div, check_team};

/// Random self-scheduling: each dequeue draws a chunk size uniformly from
/// `lo..=hi`. Bounds default to `1` and ⌈N/2P⌉. The generator is reseeded
/// at every `init`, so a fixed seed reproduces the same size sequence.
#[derive(Debug)]
pub struct RandomChunk {
    requested: (Option<u64>, Option<u64>),
    seed: u64,
    lo: u64,
    hi: u64,
    count: u64,
    state: Mutex<RandState>,
}

#[derive(Debug)]
struct RandState {
    next_first: u64,
    seq: u64,
    rng: ChaCha8Rng,
}

impl RandState {
    fn new(seed: u64) -> Self {
        RandState {
            next_first: 0,
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl RandomChunk {
    pub fn new(lo: Option<u64>, hi: Option<u64>, seed: u64) -> Self {
        RandomChunk {
            requested: (lo, hi),
            seed,
            lo: 1,
            hi: 1,
            count: 0,
            state: Mutex::new(RandState::new(seed)),
        }
    }

    pub fn bounds(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }
}

impl Scheduler for RandomChunk {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        let n = lp.iteration_count();
        let lo = self.requested.0.unwrap_or(1);
        let hi = self
            .requested
            .1
            .unwrap_or_else(|| ceil_div(n, 2 * team_size as u64).max(lo));
        if lo == 0 || lo > hi {
            return Err(SchedError::InvalidParam {
                schedule: "rand",
                reason: format!("need 1 <= lo <= hi, got lo {lo}, hi {hi}"),
            });
        }
        self.lo = lo;
        self.hi = hi;
        self.count = n;
        self.state = Mutex::new(RandState::new(self.seed));
        Ok(())
    }

    fn next(&self, _thread: usize) -> Option<Chunk> {
        let mut st = self.state.lock().unwrap();
        let remaining = self.count - st.next_first;
        if remaining == 0 {
            return None;
        }
        let size = st.rng.random_range(self.lo..=self.hi).min(remaining);
        let chunk = Chunk::new(st.next_first, size, st.seq);
        st.next_first += size;
        st.seq += 1;
        Some(chunk)
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("rand", false)
            .param("lo", self.lo)
            .param("hi", self.hi)
            .param("seed", self.seed)
    }
}
