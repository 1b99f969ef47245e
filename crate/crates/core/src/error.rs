use thiserror::Error;

use crate::loop_desc::Chunk;

/// Errors from building or mapping an iteration space.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoopError {
    #[error("loop stride must be nonzero")]
    ZeroStride,
    #[error("chunk parameter must be at least 1")]
    ZeroChunk,
    #[error("chunk [{first}, {first}+{size}) lies outside the iteration space of {count} iterations")]
    ChunkOutOfRange { first: u64, size: u64, count: u64 },
}

/// Errors raised while parsing, configuring or initializing a strategy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error("unknown schedule `{token}`; expected one of: {}", crate::strategies::TOKENS.join(", "))]
    UnknownToken { token: String },
    #[error("invalid parameter for schedule `{schedule}`: {reason}")]
    InvalidParam {
        schedule: &'static str,
        reason: String,
    },
    #[error("weight vector has {got} entries but the team has {expected} threads")]
    WeightCount { got: usize, expected: usize },
    #[error("team size must be at least 1")]
    EmptyTeam,
}

/// Errors from cost-model construction and parsing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid workload `{spec}`; expected one of constant:C, linear:A:B, uniform:LO:HI:SEED, gaussian:MEAN:STDDEV:SEED, exponential:MEAN:SEED")]
    Grammar { spec: String },
    #[error("invalid cost model parameter: {0}")]
    Param(String),
}

/// Failures that abort or poison a single loop execution.
#[derive(Debug, Clone, PartialEq, Eq, Error, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunFailure {
    #[error("loop body failed at index {index} on thread {thread}: {message}")]
    Body {
        thread: usize,
        index: i64,
        message: String,
    },
    #[error("strategy yielded an invalid chunk (seq {seq}, first {first}, size {size}) on thread {thread} for {count} iterations")]
    ContractViolation {
        thread: usize,
        seq: u64,
        first: u64,
        size: u64,
        count: u64,
    },
}

impl RunFailure {
    pub(crate) fn contract(thread: usize, chunk: &Chunk, count: u64) -> Self {
        RunFailure::ContractViolation {
            thread,
            seq: chunk.seq,
            first: chunk.first,
            size: chunk.size,
            count,
        }
    }
}

/// Errors returned by the executor entry points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("team configuration: {0}")]
    Team(String),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error("invocation {invocation} failed: {failure}")]
    Invocation {
        invocation: usize,
        failure: RunFailure,
    },
    #[error("invocation {invocation}: {violation}")]
    Coverage {
        invocation: usize,
        violation: crate::trace::CoverageViolation,
    },
}

/// Errors from trace import/export.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
