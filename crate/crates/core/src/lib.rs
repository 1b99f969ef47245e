//! Pluggable parallel-loop scheduling.
//!
//! A loop is described once ([`LoopDescriptor`]) and executed by the
//! [`executor`] under any [`Scheduler`]: one of the built-in
//! [`strategies`] or your own `init` / `next` / `fini` implementation.
//! Loop sites keep a [`HistoryStore`] record across invocations so adaptive
//! strategies can learn from earlier runs. The virtual-time simulator makes
//! every experiment reproducible, and [`trace`] turns runs into
//! load-balance metrics and CSV/JSON traces.
//!
//! ```
//! use loopsched::{simulate, strategies, CostModel, HistoryStore, LoopDescriptor, TeamConfig};
//!
//! let lp = LoopDescriptor::range(100);
//! let mut guided = strategies::lookup("guided", 0).unwrap();
//! let cost = CostModel::constant(1.0).unwrap();
//! let report = simulate(&lp, &mut guided, &cost, &TeamConfig::sim(4), &mut HistoryStore::new()).unwrap();
//! assert_eq!(loopsched::trace::chunk_size_sequence(&report)[..3], [25, 19, 14]);
//! ```

pub mod cli;
pub mod contract;
pub mod error;
pub mod executor;
pub mod history;
pub mod loop_desc;
pub mod strategies;
pub mod trace;
pub mod workload;

pub use contract::{Scheduler, StrategyInfo};
pub use error::{LoopError, RunError, RunFailure, SchedError, TraceError, WorkloadError};
pub use executor::{parallel_for, run_invocations, simulate, BodyError, TeamConfig};
pub use history::{history_record_chunk, HistoryStore, LoopRecord, ThreadStats};
pub use loop_desc::{canonicalize, chunk_to_source_indices, Canonical, Chunk, LoopDescriptor, SiteId};
pub use strategies::{ScheduleSpec, WeightVector};
pub use trace::{
    chunk_size_sequence, export, imbalance_metrics, verify_coverage, ChunkRecord, CoverageViolation,
    ExecutionReport, Format, ImbalanceMetrics, Mode,
};
pub use workload::{as_spin_body, CostModel};
