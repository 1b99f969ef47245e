//! Runs a worksharing loop under a [`Scheduler`].
//!
//! Both modes follow the same protocol: `init` once, a barrier, each thread
//! dequeues until `next` returns `None` (`begin_chunk`, body, `end_chunk`
//! around every chunk), then `fini` once after all threads have drained.
//! Real mode uses OS threads and wall-clock nanoseconds. Sim mode is a
//! single-threaded event loop over virtual per-thread clocks.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use crate::contract::Scheduler;
use crate::error::{RunError, RunFailure};
use crate::history::HistoryStore;
use crate::loop_desc::LoopDescriptor;
use crate::trace::{ChunkRecord, ExecutionReport, Mode};
use crate::workload::{as_spin_body, CostModel};

/// Team shape and simulation knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamConfig {
    pub team_size: usize,
    pub mode: Mode,
    /// Relative per-thread speed, sim only. Empty means all 1.0.
    pub speeds: Vec<f64>,
    pub seed: u64,
    /// Virtual ticks charged per successful dequeue, sim only.
    pub overhead: u64,
}

impl TeamConfig {
    pub fn real(team_size: usize) -> Self {
        TeamConfig {
            team_size,
            mode: Mode::Real,
            speeds: Vec::new(),
            seed: 0,
            overhead: 0,
        }
    }

    pub fn sim(team_size: usize) -> Self {
        TeamConfig {
            mode: Mode::Sim,
            ..TeamConfig::real(team_size)
        }
    }

    pub fn with_speeds(mut self, speeds: Vec<f64>) -> Self {
        self.speeds = speeds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_overhead(mut self, overhead: u64) -> Self {
        self.overhead = overhead;
        self
    }

    pub fn speed(&self, thread: usize) -> f64 {
        self.speeds.get(thread).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.team_size == 0 {
            return Err(RunError::Team("team size must be at least 1".into()));
        }
        if !self.speeds.is_empty() && self.speeds.len() != self.team_size {
            return Err(RunError::Team(format!(
                "{} speeds given for a team of {}",
                self.speeds.len(),
                self.team_size
            )));
        }
        if self.speeds.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(RunError::Team("thread speeds must be finite and positive".into()));
        }
        Ok(())
    }

    fn expect_mode(&self, mode: Mode) -> Result<(), RunError> {
        self.validate()?;
        if self.mode != mode {
            return Err(RunError::Team(format!("team is configured for {} mode, not {mode}", self.mode)));
        }
        Ok(())
    }
}

/// A loop body failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct BodyError(pub String);

impl BodyError {
    pub fn new(msg: impl Into<String>) -> Self {
        BodyError(msg.into())
    }
}

/// Runs `body(thread, source_index)` for every iteration of `lp` on
/// `team.team_size` OS threads.
///
/// A body failure or an invalid chunk stops further dequeues: every thread
/// finishes the chunk it holds and exits, `fini` still runs, and the
/// failure is recorded in the report's `error` field.
pub fn parallel_for<S, F>(
    lp: &LoopDescriptor,
    strategy: &mut S,
    body: F,
    team: &TeamConfig,
    history: &mut HistoryStore,
) -> Result<ExecutionReport, RunError>
where
    S: Scheduler + ?Sized,
    F: Fn(usize, i64) -> Result<(), crate::executor::BodyError> + Sync,
{
    team.expect_mode(Mode::Real)?;
    let p = team.team_size;
    let record = history.record_mut(lp.site());
    record.begin_invocation(p);
    strategy.init(lp, p, record)?;

    let shared: &S = strategy;
    let barrier = Barrier::new(p);
    let stop = AtomicBool::new(false);
    let failure: Mutex<Option<RunFailure>> = Mutex::new(None);
    let fail = |f: RunFailure| {
        failure.lock().unwrap().get_or_insert(f);
        stop.store(true, Ordering::Release);
    };
    let start = Instant::now();
    let count = lp.iteration_count();

    let logs: Vec<Vec<ChunkRecord>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let (barrier, stop, body, fail) = (&barrier, &stop, &body, &fail);
                scope.spawn(move || {
                    let mut log = Vec::new();
                    barrier.wait();
                    while !stop.load(Ordering::Acquire) {
                        let Some(chunk) = shared.next(t) else { break };
                        if lp.check_chunk(&chunk).is_err() {
                            fail(RunFailure::contract(t, &chunk, count));
                            break;
                        }
                        shared.begin_chunk(t, &chunk);
                        let t_begin = start.elapsed().as_nanos() as u64;
                        for k in chunk.logical() {
                            let index = lp.source_index(k);
                            if let Err(e) = body(t, index) {
                                fail(RunFailure::Body {
                                    thread: t,
                                    index,
                                    message: e.0,
                                });
                                break;
                            }
                        }
                        let t_end = start.elapsed().as_nanos() as u64;
                        shared.end_chunk(t, &chunk, t_end - t_begin);
                        log.push(ChunkRecord {
                            seq: chunk.seq,
                            thread: t,
                            first: chunk.first,
                            size: chunk.size,
                            t_begin,
                            t_end,
                        });
                    }
                    log
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });

    let log: Vec<ChunkRecord> = logs.into_iter().flatten().collect();
    let error = failure.into_inner().unwrap();
    finish(lp, strategy, history, Mode::Real, p, log, error)
}

/// Deterministic virtual-time execution.
///
/// Every thread owns a clock starting at 0. The thread with the smallest
/// clock (lowest id on ties) performs the next dequeue; a chunk costs
/// `overhead + round(Σ cost(i) / speed)` ticks. Identical inputs give an
/// identical report.
pub fn simulate<S>(
    lp: &LoopDescriptor,
    strategy: &mut S,
    cost: &CostModel,
    team: &TeamConfig,
    history: &mut HistoryStore,
) -> Result<ExecutionReport, RunError>
where
    S: Scheduler + ?Sized,
{
    team.expect_mode(Mode::Sim)?;
    let p = team.team_size;
    let record = history.record_mut(lp.site());
    record.begin_invocation(p);
    strategy.init(lp, p, record)?;

    let mut clocks = vec![0u64; p];
    let mut active = vec![true; p];
    let mut log = Vec::new();
    let mut error = None;
    let count = lp.iteration_count();

    while let Some(t) = (0..p).filter(|&t| active[t]).min_by_key(|&t| (clocks[t], t)) {
        let Some(chunk) = strategy.next(t) else {
            active[t] = false;
            continue;
        };
        if lp.check_chunk(&chunk).is_err() {
            error = Some(RunFailure::contract(t, &chunk, count));
            break;
        }
        strategy.begin_chunk(t, &chunk);
        let t_begin = clocks[t] + team.overhead;
        let work = cost.total(chunk.logical()) / team.speed(t);
        let elapsed = work.round() as u64;
        let t_end = t_begin + elapsed;
        strategy.end_chunk(t, &chunk, elapsed);
        clocks[t] = t_end;
        log.push(ChunkRecord {
            seq: chunk.seq,
            thread: t,
            first: chunk.first,
            size: chunk.size,
            t_begin,
            t_end,
        });
    }

    finish(lp, strategy, history, Mode::Sim, p, log, error)
}

fn finish<S: Scheduler + ?Sized>(
    lp: &LoopDescriptor,
    strategy: &mut S,
    history: &mut HistoryStore,
    mode: Mode,
    team_size: usize,
    mut log: Vec<ChunkRecord>,
    error: Option<RunFailure>,
) -> Result<ExecutionReport, RunError> {
    log.sort_by_key(|c| c.seq);
    let record = history.record_mut(lp.site());
    for c in &log {
        let chunk = crate::loop_desc::Chunk::new(c.first, c.size, c.seq);
        record.record_chunk(c.thread, &chunk, c.t_end - c.t_begin);
    }
    strategy.fini(record);
    if error.is_none() {
        record.complete_invocation();
    }
    Ok(ExecutionReport::assemble(
        mode,
        team_size,
        lp.clone(),
        strategy.info(),
        log,
        error,
    ))
}

/// Runs the same loop site `count` times so its history accumulates.
/// Real mode executes a spin body calibrated from `workload`. Stops at the
/// first failed invocation.
pub fn run_invocations<S>(
    count: usize,
    lp: &LoopDescriptor,
    strategy: &mut S,
    workload: &CostModel,
    team: &TeamConfig,
    history: &mut HistoryStore,
) -> Result<Vec<ExecutionReport>, RunError>
where
    S: Scheduler + ?Sized,
{
    if count == 0 {
        return Err(RunError::Team("invocation count must be at least 1".into()));
    }
    let mut reports = Vec::with_capacity(count);
    for invocation in 0..count {
        let report = match team.mode {
            Mode::Sim => simulate(lp, strategy, workload, team, history)?,
            Mode::Real => parallel_for(lp, strategy, as_spin_body(*workload, lp), team, history)?,
        };
        if let Some(failure) = report.error.clone() {
            return Err(RunError::Invocation { invocation, failure });
        }
        if let Some(violation) = report.coverage_violation.clone() {
            return Err(RunError::Coverage { invocation, violation });
        }
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::AtomicU32;

    use super::*;
    use crate::strategies::{lookup, StaticBlock};
    use crate::trace::{chunk_size_sequence, imbalance_metrics};

    fn unit_cost() -> CostModel {
        CostModel::constant(1.0).unwrap()
    }

    #[test]
    fn empty_loop_runs_fini() {
        let mut h = HistoryStore::new();
        let lp = LoopDescriptor::range(0);
        let mut s = lookup("guided", 0).unwrap();
        let r = parallel_for(&lp, &mut s, |_, _| Ok(()), &TeamConfig::real(3), &mut h).unwrap();
        assert_eq!(r.total_chunks(), 0);
        assert!(r.is_ok());
        assert_eq!(h.get(lp.site()).unwrap().invocation_count, 1);
    }

    #[test]
    fn real_static_touches_every_index_once() {
        let lp = LoopDescriptor::range(100);
        let visits: Vec<AtomicU32> = (0..100).map(|_| AtomicU32::new(0)).collect();
        let mut s = StaticBlock::new(None);
        let r = parallel_for(
            &lp,
            &mut s,
            |_, i| {
                visits[i as usize].fetch_add(1, Ordering::Relaxed);
                Ok(())
            },
            &TeamConfig::real(4),
            &mut HistoryStore::new(),
        )
        .unwrap();
        assert!(visits.iter().all(|v| v.load(Ordering::Relaxed) == 1));
        let mut by_thread: Vec<(usize, u64, u64)> =
            r.chunk_log.iter().map(|c| (c.thread, c.first, c.size)).collect();
        by_thread.sort();
        assert_eq!(by_thread, vec![(0, 0, 25), (1, 25, 25), (2, 50, 25), (3, 75, 25)]);
    }

    #[test]
    fn body_failure_drains_and_reports() {
        let lp = LoopDescriptor::range(1000);
        let mut s = lookup("dynamic,10", 0).unwrap();
        let mut h = HistoryStore::new();
        let r = parallel_for(
            &lp,
            &mut s,
            |_, i| if i == 505 { Err(BodyError::new("bad index")) } else { Ok(()) },
            &TeamConfig::real(2),
            &mut h,
        )
        .unwrap();
        match r.error {
            Some(RunFailure::Body { index, ref message, .. }) => {
                assert_eq!(index, 505);
                assert_eq!(message, "bad index");
            }
            ref other => panic!("unexpected {other:?}"),
        }
        assert!(r.total_chunks() < 100);
        assert_eq!(h.get(lp.site()).unwrap().invocation_count, 0);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let lp = LoopDescriptor::range(10);
        let mut s = lookup("ss", 0).unwrap();
        let mut h = HistoryStore::new();
        assert!(simulate(&lp, &mut s, &unit_cost(), &TeamConfig::real(2), &mut h).is_err());
        assert!(parallel_for(&lp, &mut s, |_, _| Ok(()), &TeamConfig::sim(2), &mut h).is_err());
        assert!(simulate(&lp, &mut s, &unit_cost(), &TeamConfig::sim(2).with_speeds(vec![1.0]), &mut h).is_err());
        assert!(simulate(&lp, &mut s, &unit_cost(), &TeamConfig::sim(0), &mut h).is_err());
    }

    #[test]
    fn sim_static_perfect_balance() {
        let lp = LoopDescriptor::range(100);
        let mut s = lookup("static", 0).unwrap();
        let r = simulate(&lp, &mut s, &unit_cost(), &TeamConfig::sim(4), &mut HistoryStore::new()).unwrap();
        assert_eq!(r.thread_finish, vec![25; 4]);
        assert_eq!(r.makespan(), 25);
        assert_eq!(chunk_size_sequence(&r), vec![25; 4]);
    }

    #[test]
    fn sim_slow_thread() {
        let lp = LoopDescriptor::range(100);
        let team = TeamConfig::sim(4).with_speeds(vec![1.0, 1.0, 1.0, 0.5]);
        let mut st = lookup("static", 0).unwrap();
        let r_static = simulate(&lp, &mut st, &unit_cost(), &team, &mut HistoryStore::new()).unwrap();
        assert_eq!(r_static.makespan(), 50);
        let mut ss = lookup("ss", 0).unwrap();
        let r_ss = simulate(&lp, &mut ss, &unit_cost(), &team, &mut HistoryStore::new()).unwrap();
        // fluid bound 100 / 3.5 = 28.6, rounded up per iteration
        assert_eq!(r_ss.makespan(), 29);
    }

    #[test]
    fn sim_overhead_charged_per_dequeue() {
        let lp = LoopDescriptor::range(12);
        let mut s = lookup("dynamic,3", 0).unwrap();
        let team = TeamConfig::sim(2).with_overhead(5);
        let r = simulate(&lp, &mut s, &unit_cost(), &team, &mut HistoryStore::new()).unwrap();
        // each thread: two chunks of 3 ticks plus 2 * 5 overhead
        assert_eq!(r.thread_finish, vec![16, 16]);
        for t in 0..2 {
            let own: Vec<&ChunkRecord> = r.chunk_log.iter().filter(|c| c.thread == t).collect();
            let busy: u64 = own.iter().map(|c| c.t_end - c.t_begin).sum();
            assert_eq!(r.thread_finish[t], busy + 5 * own.len() as u64);
        }
    }

    #[test]
    fn sim_is_deterministic() {
        let lp = LoopDescriptor::range(2000);
        let cost = CostModel::exponential(10.0, 3).unwrap();
        let team = TeamConfig::sim(5).with_speeds(vec![1.0, 2.0, 0.5, 1.0, 1.5]);
        for token in ["rand", "awf", "guided", "fac2"] {
            let run = || {
                let mut s = lookup(token, 11).unwrap();
                let reports = run_invocations(3, &lp, &mut s, &cost, &team, &mut HistoryStore::new()).unwrap();
                reports.iter().map(|r| r.to_csv()).collect::<Vec<_>>()
            };
            assert_eq!(run(), run(), "{token}");
        }
    }

    #[test]
    fn invocations_accumulate_history() {
        let lp = LoopDescriptor::range(50).with_site("kernel");
        let mut s = lookup("static", 0).unwrap();
        let mut h = HistoryStore::new();
        let reports = run_invocations(3, &lp, &mut s, &unit_cost(), &TeamConfig::sim(2), &mut h).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports.windows(2).all(|w| w[0].chunk_log == w[1].chunk_log));
        let rec = h.get(lp.site()).unwrap();
        assert_eq!(rec.invocation_count, 3);
        assert_eq!(rec.thread_stats[0].iters + rec.thread_stats[1].iters, 50);
        assert!(run_invocations(0, &lp, &mut s, &unit_cost(), &TeamConfig::sim(2), &mut h).is_err());
    }

    #[test]
    fn single_invocation_matches_direct_call() {
        let lp = LoopDescriptor::range(300);
        let cost = CostModel::uniform(1.0, 9.0, 2).unwrap();
        let team = TeamConfig::sim(3);
        let mut a = lookup("tss", 0).unwrap();
        let direct = simulate(&lp, &mut a, &cost, &team, &mut HistoryStore::new()).unwrap();
        let mut b = lookup("tss", 0).unwrap();
        let via = run_invocations(1, &lp, &mut b, &cost, &team, &mut HistoryStore::new()).unwrap();
        assert_eq!(via, vec![direct]);
    }

    struct Broken;

    impl Scheduler for Broken {
        fn init(&mut self, _: &LoopDescriptor, _: usize, _: &crate::history::LoopRecord) -> Result<(), crate::error::SchedError> {
            Ok(())
        }
        fn next(&self, _: usize) -> Option<crate::loop_desc::Chunk> {
            Some(crate::loop_desc::Chunk::new(5, 10, 0))
        }
        fn info(&self) -> crate::contract::StrategyInfo {
            crate::contract::StrategyInfo::new("broken", false)
        }
    }

    #[test]
    fn contract_violation_identifies_chunk() {
        let lp = LoopDescriptor::range(8);
        let r = simulate(&lp, &mut Broken, &unit_cost(), &TeamConfig::sim(2), &mut HistoryStore::new()).unwrap();
        assert_eq!(
            r.error,
            Some(RunFailure::ContractViolation { thread: 0, seq: 0, first: 5, size: 10, count: 8 })
        );
        let r = parallel_for(&lp, &mut Broken, |_, _| Ok(()), &TeamConfig::real(2), &mut HistoryStore::new()).unwrap();
        assert!(matches!(r.error, Some(RunFailure::ContractViolation { first: 5, size: 10, .. })));
        let err = run_invocations(2, &lp, &mut Broken, &unit_cost(), &TeamConfig::sim(1), &mut HistoryStore::new())
            .unwrap_err();
        assert!(matches!(err, RunError::Invocation { invocation: 0, .. }));
    }

    #[test]
    fn real_and_sim_agree_for_deterministic_strategies() {
        let lp = LoopDescriptor::range(500);
        let cost = unit_cost();
        for token in ["static", "static-cyclic", "static,7"] {
            let mut a = lookup(token, 0).unwrap();
            let sim = simulate(&lp, &mut a, &cost, &TeamConfig::sim(3), &mut HistoryStore::new()).unwrap();
            let mut b = lookup(token, 0).unwrap();
            let real = run_invocations(1, &lp, &mut b, &cost, &TeamConfig::real(3), &mut HistoryStore::new()).unwrap();
            let key = |r: &ExecutionReport| {
                let mut v: Vec<(usize, u64, u64)> = r.chunk_log.iter().map(|c| (c.thread, c.first, c.size)).collect();
                v.sort();
                v
            };
            assert_eq!(key(&sim), key(&real[0]), "{token}");
        }
    }

    #[test]
    fn guided_beats_static_on_increasing_costs() {
        let lp = LoopDescriptor::range(400);
        let cost = CostModel::linear(1.0, 1.0).unwrap();
        let team = TeamConfig::sim(4);
        let mut a = lookup("static", 0).unwrap();
        let st = imbalance_metrics(&simulate(&lp, &mut a, &cost, &team, &mut HistoryStore::new()).unwrap());
        let mut b = lookup("guided", 0).unwrap();
        let gd = imbalance_metrics(&simulate(&lp, &mut b, &cost, &team, &mut HistoryStore::new()).unwrap());
        assert!(gd.percent_imbalance < st.percent_imbalance);
    }
}
