//! Factoring family: FAC2, weighted factoring (WF2) and its adaptive
//! variant (AWF).
//!
//! All three work in batches. A batch opened with `R` unscheduled
//! iterations has base chunk ⌈R/2P⌉ (at least 1), so each batch hands out
//! roughly half of what is left.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::contract::{Scheduler, StrategyInfo};
use crate::error::SchedError;
use crate::history::LoopRecord;
use crate::loop_desc::{Chunk, LoopDescriptor};

use super::{ceil_div, check_team, WeightVector};

fn batch_chunk(remaining: u64, team: u64) -> u64 {
    ceil_div(remaining, 2 * team).max(1)
}

/// `round-half-up(w * base)`, at least 1.
fn weighted_size(weight: f64, base: u64) -> u64 {
    // the epsilon keeps products like 1.5 * 10 from landing on 14.999...
    ((weight * base as f64 + 0.5 + 1e-9).floor() as u64).max(1)
}

/// Factoring with a fixed factor of two. Each batch issues `P` equal chunks
/// to whichever threads ask first.
#[derive(Debug, Default)]
pub struct Fac2 {
    count: u64,
    team: u64,
    state: Mutex<Fac2State>,
}

#[derive(Debug, Default)]
struct Fac2State {
    next_first: u64,
    left_in_batch: u64,
    chunk: u64,
    seq: u64,
}

impl Fac2 {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Scheduler for Fac2 {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
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
        if st.left_in_batch == 0 {
            st.chunk = batch_chunk(remaining, self.team);
            st.left_in_batch = self.team;
        }
        let size = st.chunk.min(remaining);
        let chunk = Chunk::new(st.next_first, size, st.seq);
        st.next_first += size;
        st.left_in_batch -= 1;
        st.seq += 1;
        Some(chunk)
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("fac2", true)
    }
}

/// Per-thread reservations shared by WF2 and AWF.
///
/// When a batch opens, every thread `t` gets a slot of
/// `round-half-up(w_t * ⌈R/2P⌉)` iterations carved from the unscheduled
/// pool in thread order (clamped once the pool runs dry). Each thread walks
/// the batches in order and only ever takes its own slot; a thread that
/// runs past the newest batch opens the next one. Slots are therefore
/// independent of arrival order, and a thread is done once the pool is
/// empty and it has consumed its slots in every open batch.
#[derive(Debug, Default)]
struct Reservations {
    count: u64,
    weights: Vec<f64>,
    state: Mutex<ReservationState>,
}

#[derive(Debug, Default)]
struct ReservationState {
    next_free: u64,
    batches: Vec<Vec<Option<(u64, u64)>>>,
    position: Vec<usize>,
    seq: u64,
}

impl Reservations {
    fn new(count: u64, weights: &WeightVector) -> Self {
        let team = weights.len();
        Reservations {
            count,
            weights: weights.as_slice().to_vec(),
            state: Mutex::new(ReservationState {
                position: vec![0; team],
                ..Default::default()
            }),
        }
    }

    fn next(&self, thread: usize) -> Option<Chunk> {
        let mut guard = self.state.lock().unwrap();
        let st = &mut *guard;
        loop {
            let b = st.position[thread];
            if b < st.batches.len() {
                st.position[thread] += 1;
                if let Some((first, size)) = st.batches[b][thread] {
                    let chunk = Chunk::new(first, size, st.seq);
                    st.seq += 1;
                    return Some(chunk);
                }
                continue;
            }
            let mut remaining = self.count - st.next_free;
            if remaining == 0 {
                return None;
            }
            let base = batch_chunk(remaining, self.weights.len() as u64);
            let mut slots = Vec::with_capacity(self.weights.len());
            for &w in &self.weights {
                let size = weighted_size(w, base).min(remaining);
                if size == 0 {
                    slots.push(None);
                } else {
                    slots.push(Some((st.next_free, size)));
                    st.next_free += size;
                    remaining -= size;
                }
            }
            st.batches.push(slots);
        }
    }
}

/// Weighted factoring with user-supplied per-thread weights, treated as
/// relative thread capabilities. Uniform weights give FAC2's chunk sizes.
#[derive(Debug)]
pub struct WeightedFactoring {
    raw: Vec<f64>,
    weights: WeightVector,
    slots: Reservations,
}

impl WeightedFactoring {
    pub fn new(weights: Vec<f64>) -> Self {
        WeightedFactoring {
            raw: weights,
            weights: WeightVector::uniform(0),
            slots: Reservations::default(),
        }
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }
}

impl Scheduler for WeightedFactoring {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, _: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        if self.raw.len() != team_size {
            return Err(SchedError::WeightCount {
                got: self.raw.len(),
                expected: team_size,
            });
        }
        self.weights = WeightVector::new(self.raw.clone())?;
        self.slots = Reservations::new(lp.iteration_count(), &self.weights);
        Ok(())
    }

    fn next(&self, thread: usize) -> Option<Chunk> {
        self.slots.next(thread)
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("wf2", false).param("weights", join(self.weights.as_slice()))
    }
}

fn join(ws: &[f64]) -> String {
    ws.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>().join(":")
}

/// Adaptive weighted factoring. Runs as WF2 with the weights the previous
/// invocation of the same loop site left in its history record, measures
/// each thread's rate (iterations per unit of busy time) through
/// `end_chunk`, and in `fini` stores `w_t = P * r_t / Σ r` for the next
/// invocation. Threads that measured nothing keep their old weight.
#[derive(Debug)]
pub struct AdaptiveWeightedFactoring {
    weights: WeightVector,
    slots: Reservations,
    iters: Vec<AtomicU64>,
    busy: Vec<AtomicU64>,
}

impl AdaptiveWeightedFactoring {
    pub fn new() -> Self {
        AdaptiveWeightedFactoring {
            weights: WeightVector::uniform(0),
            slots: Reservations::default(),
            iters: Vec::new(),
            busy: Vec::new(),
        }
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Weights for the next invocation from this invocation's measurements.
    fn updated_weights(&self) -> Option<WeightVector> {
        let rates: Vec<Option<f64>> = self
            .iters
            .iter()
            .zip(&self.busy)
            .map(|(i, b)| {
                let busy = b.load(Ordering::Relaxed);
                (busy > 0).then(|| i.load(Ordering::Relaxed) as f64 / busy as f64)
            })
            .collect();
        let measured: Vec<f64> = rates.iter().flatten().copied().collect();
        let total: f64 = measured.iter().sum();
        if measured.is_empty() || total <= 0.0 {
            return None;
        }
        let p = rates.len() as f64;
        let raw = rates
            .iter()
            .enumerate()
            .map(|(t, r)| match r {
                Some(r) if *r > 0.0 => p * r / total,
                _ => self.weights.get(t),
            })
            .collect();
        WeightVector::new(raw).ok()
    }
}

impl Default for AdaptiveWeightedFactoring {
    fn default() -> Self {
        Self::new()
    }
}

impl Scheduler for AdaptiveWeightedFactoring {
    fn init(&mut self, lp: &LoopDescriptor, team_size: usize, history: &LoopRecord) -> Result<(), SchedError> {
        check_team(team_size)?;
        self.weights = if history.weights.len() == team_size {
            WeightVector::new(history.weights.clone()).unwrap_or_else(|_| WeightVector::uniform(team_size))
        } else {
            WeightVector::uniform(team_size)
        };
        self.slots = Reservations::new(lp.iteration_count(), &self.weights);
        self.iters = (0..team_size).map(|_| AtomicU64::new(0)).collect();
        self.busy = (0..team_size).map(|_| AtomicU64::new(0)).collect();
        Ok(())
    }

    fn next(&self, thread: usize) -> Option<Chunk> {
        self.slots.next(thread)
    }

    fn end_chunk(&self, thread: usize, chunk: &Chunk, elapsed: u64) {
        self.iters[thread].fetch_add(chunk.size, Ordering::Relaxed);
        self.busy[thread].fetch_add(elapsed, Ordering::Relaxed);
    }

    fn fini(&mut self, history: &mut LoopRecord) {
        if let Some(w) = self.updated_weights() {
            history.set_weights(&w);
        } else {
            history.set_weights(&self.weights);
        }
    }

    fn info(&self) -> StrategyInfo {
        StrategyInfo::new("awf", false).param("weights", join(self.weights.as_slice()))
    }
}
