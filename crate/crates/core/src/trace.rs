//! Execution reports, coverage checking, load-balance metrics and trace
//! serialization.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contract::StrategyInfo;
use crate::error::{RunFailure, TraceError};
use crate::loop_desc::LoopDescriptor;

/// Execution mode. Times are virtual ticks in `Sim` and nanoseconds since
/// the start of the run in `Real`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Sim,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "real" => Ok(Mode::Real),
            "sim" => Ok(Mode::Sim),
            other => Err(format!("unknown mode `{other}`; expected `real` or `sim`")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Real => "real",
            Mode::Sim => "sim",
        })
    }
}

/// One executed chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub seq: u64,
    pub thread: usize,
    pub first: u64,
    pub size: u64,
    pub t_begin: u64,
    pub t_end: u64,
}

/// Why a run's chunk log does not cover the loop exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverageViolation {
    #[error("iteration {index} executed more than once")]
    Duplicate { index: u64 },
    #[error("iteration {index} never executed")]
    Missing { index: u64 },
    #[error("chunk seq {seq} [{first}, {first}+{size}) exceeds the iteration space")]
    OutOfRange { seq: u64, first: u64, size: u64 },
}

/// Everything observed during one loop execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub mode: Mode,
    pub team_size: usize,
    #[serde(rename = "loop")]
    pub loop_desc: LoopDescriptor,
    pub strategy: StrategyInfo,
    /// Sorted by `seq`.
    pub chunk_log: Vec<ChunkRecord>,
    /// Latest `t_end` per thread, 0 for threads that ran nothing.
    pub thread_finish: Vec<u64>,
    #[serde(default)]
    pub error: Option<RunFailure>,
    #[serde(default)]
    pub coverage_violation: Option<CoverageViolation>,
    /// Flat `key = value` echo of the configuration that produced the run.
    #[serde(default)]
    pub config: Option<String>,
}

impl ExecutionReport {
    pub(crate) fn assemble(
        mode: Mode,
        team_size: usize,
        loop_desc: LoopDescriptor,
        strategy: StrategyInfo,
        mut chunk_log: Vec<ChunkRecord>,
        error: Option<RunFailure>,
    ) -> Self {
        chunk_log.sort_by_key(|c| c.seq);
        let mut thread_finish = vec![0; team_size];
        for c in &chunk_log {
            thread_finish[c.thread] = thread_finish[c.thread].max(c.t_end);
        }
        let mut report = ExecutionReport {
            mode,
            team_size,
            loop_desc,
            strategy,
            chunk_log,
            thread_finish,
            error,
            coverage_violation: None,
            config: None,
        };
        if report.error.is_none() {
            report.coverage_violation = verify_coverage(&report, &report.loop_desc).err();
        }
        report
    }

    pub fn makespan(&self) -> u64 {
        self.thread_finish.iter().copied().max().unwrap_or(0)
    }

    pub fn total_chunks(&self) -> usize {
        self.chunk_log.len()
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.coverage_violation.is_none()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "seq,thread,first,size,t_begin,t_end")?;
        for c in &self.chunk_log {
            writeln!(out, "{},{},{},{},{},{}", c.seq, c.thread, c.first, c.size, c.t_begin, c.t_end)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Checks that the chunk log covers `0..N` exactly once. Reports the first
/// duplicate found in `seq` order, otherwise the lowest missing index.
pub fn verify_coverage(report: &ExecutionReport, lp: &LoopDescriptor) -> Result<(), CoverageViolation> {
    let n = lp.iteration_count();
    let mut seen = vec![false; n as usize];
    for c in &report.chunk_log {
        match c.first.checked_add(c.size) {
            Some(end) if end <= n => {}
            _ => {
                return Err(CoverageViolation::OutOfRange {
                    seq: c.seq,
                    first: c.first,
                    size: c.size,
                })
            }
        }
        for k in c.first..c.first + c.size {
            let slot = &mut seen[k as usize];
            if *slot {
                return Err(CoverageViolation::Duplicate { index: k });
            }
            *slot = true;
        }
    }
    match seen.iter().position(|s| !s) {
        Some(k) => Err(CoverageViolation::Missing { index: k as u64 }),
        None => Ok(()),
    }
}

/// Load-balance summary of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceMetrics {
    pub makespan: f64,
    pub mean_finish: f64,
    /// `(makespan / mean_finish - 1) * 100`
    pub percent_imbalance: f64,
    /// Population coefficient of variation of finish times.
    pub cov: f64,
    pub total_chunks: usize,
}

impl ImbalanceMetrics {
    /// Metrics over every team thread's finish time. An all-zero vector
    /// (empty loop) yields all-zero metrics.
    pub fn from_finish_times(finish: &[f64], total_chunks: usize) -> Self {
        let n = finish.len() as f64;
        let mean = if finish.is_empty() { 0.0 } else { finish.iter().sum::<f64>() / n };
        if mean == 0.0 {
            return ImbalanceMetrics {
                makespan: 0.0,
                mean_finish: 0.0,
                percent_imbalance: 0.0,
                cov: 0.0,
                total_chunks,
            };
        }
        let makespan = finish.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let var = finish.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        ImbalanceMetrics {
            makespan,
            mean_finish: mean,
            percent_imbalance: (makespan / mean - 1.0) * 100.0,
            cov: var.sqrt() / mean,
            total_chunks,
        }
    }
}

pub fn imbalance_metrics(report: &ExecutionReport) -> ImbalanceMetrics {
    let finish: Vec<f64> = report.thread_finish.iter().map(|&t| t as f64).collect();
    ImbalanceMetrics::from_finish_times(&finish, report.total_chunks())
}

/// Chunk sizes in dequeue order.
pub fn chunk_size_sequence(report: &ExecutionReport) -> Vec<u64> {
    let mut log: Vec<&ChunkRecord> = report.chunk_log.iter().collect();
    log.sort_by_key(|c| c.seq);
    log.into_iter().map(|c| c.size).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`; expected `csv` or `json`")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

pub fn export(report: &ExecutionReport, format: Format, destination: &Path) -> Result<(), TraceError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(destination)?);
    match format {
        Format::Csv => report.write_csv(&mut file)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut file, report)?;
            writeln!(file)?;
        }
    }
    file.flush()?;
    Ok(())
}

pub fn import_json(source: &Path) -> Result<ExecutionReport, TraceError> {
    let text = std::fs::read_to_string(source)?;
    Ok(ExecutionReport::from_json(&text)?)
}
