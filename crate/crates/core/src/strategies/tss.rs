use std::sync::Mutex;

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::guided::Cursor;
use super::{ceil_div, check_team};

/// Trapezoid self-scheduling: chunk sizes fall linearly from `first` to
/// `last` over `C = ⌈2N/(first+last)⌉` planned chunks.
///
/// The decrement `(first - last) / (C - 1)` is kept as an exact fraction and
/// each size is rounded half-up, so there is no accumulated drift. Sizes
/// never drop below `last`, and the final chunk is clamped to what is left.
#[derive(Debug)]
pub struct Trapezoid {
    requested: (Option<u64>, Option<u64>),
    plan: Plan,
    count: u64,
    state: Mutex<Cursor>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Plan {
    pub first: u64,
    pub last: u64,
    pub planned: u64,
}

impl Plan {
    /// Size of the `k`-th chunk before clamping to the remaining work.
    pub fn size(&self, k: u64) -> u64 {
        if self.planned <= 1 || self.first == self.last {
            return self.first.max(self.last);
        }
        let den = (self.planned - 1) as i128;
        let num = self.first as i128 * den - k as i128 * (self.first - self.last) as i128;
        // round half up of num/den
        let rounded = (2 * num + den).div_euclid(2 * den);
        rounded.max(self.last as i128) as u64
    }
}

impl Trapezoid {
    pub fn new(first: Option<u64>, last: Option<u64>) -> Self {
        Trapezoid {
            requested: (first, last),
            plan: Plan::default(),
            count: 0,
            state: Mutex::default(),
        }
    }

    pub fn plan(&self) -> Plan {
        self.plan
    }
}

impl Scheduler for Trapezoid {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        let n = lp.iteration_count();
        let first = self
            .requested
            .0
            .unwrap_or_else(|| ceil_div(n, 2 * team_size as u64).max(1));
        let last = self.requested.1.unwrap_or(1);
        if first < last || last == 0 {
            return Err(SchedError::InvalidParam {
                schedule: "tss",
                reason: format!("need first >= last >= 1, got first {first}, last {last}"),
            });
        }
        let planned = ceil_div(n.saturating_mul(2), first + last).max(1);
        self.plan = Plan { first, last, planned };
        self.count = n;
        self.state = Mutex::default();
        Ok(())
    }

    fn next(&self, _thread: usize) -> Option<Chunk> {
        let mut st = self.state.lock().unwrap();
        let remaining = self.count - st.next_first;
        if remaining == 0 {
            return None;
        }
        let size = self.plan.size(st.seq).min(remaining);
        let chunk = Chunk::new(st.next_first, size, st.seq);
        st.next_first += size;
        st.seq += 1;
        Some(chunk)
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("tss", true)
            .param("first", self.plan.first)
            .param("last", self.plan.last)
            .param("planned", self.plan.planned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: u64, p: usize, f: Option<u64>, l: Option<u64>) -> (Plan, Vec<u64>) {
        let mut s = Trapezoid::new(f, l);
        s.init(&LoopDescriptor::range(n), p, &LoopRecord::default()).unwrap();
        let sizes = std::iter::from_fn(|| s.next(0)).map(|c| c.size).collect();
        (s.plan(), sizes)
    }

    #[test]
    fn n100_p4_plan() {
        let (plan, sizes) = run(100, 4, None, None);
        assert_eq!(plan, Plan { first: 13, last: 1, planned: 15 });
        assert_eq!(sizes.iter().sum::<u64>(), 100);
        // rounded (13 - k*6/7), clamped at the end
        assert_eq!(sizes, vec![13, 12, 11, 10, 10, 9, 8, 7, 6, 5, 4, 4, 1]);
    }

    #[test]
    fn flat_trapezoid_is_fixed_chunking() {
        let (_, sizes) = run(23, 3, Some(5), Some(5));
        assert_eq!(sizes, vec![5, 5, 5, 5, 3]);
    }

    #[test]
    fn single_iteration() {
        assert_eq!(run(1, 4, None, None).1, vec![1]);
        assert!(run(0, 4, None, None).1.is_empty());
    }

    #[test]
    fn first_below_last_rejected() {
        let mut s = Trapezoid::new(Some(2), Some(5));
        assert!(s.init(&LoopDescriptor::range(10), 2, &LoopRecord::default()).is_err());
    }

    #[test]
    fn half_rounds_up() {
        // first 3, last 1, planned 3: 3, 2, 1 exactly; planned 5: 3, 2.5, 2, 1.5, 1
        let p = Plan { first: 3, last: 1, planned: 5 };
        assert_eq!((0..5).map(|k| p.size(k)).collect::<Vec<_>>(), vec![3, 3, 2, 2, 1]);
        assert_eq!(p.size(9), 1);
    }
}
