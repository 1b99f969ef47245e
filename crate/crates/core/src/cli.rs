//! Benchmark harness behind the `loopsched` binary.
//!
//! Every flag can also come from a config file of `key = value` lines using
//! the flag names without dashes; flags win over the file. Giving
//! `--schedule` or `--workload` more than once turns a run into a sweep
//! over their Cartesian product.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::executor::{run_invocations, TeamConfig};
use crate::history::HistoryStore;
use crate::loop_desc::LoopDescriptor;
use crate::strategies::ScheduleSpec;
use crate::trace::{export, imbalance_metrics, ExecutionReport, Format, ImbalanceMetrics, Mode};
use crate::workload::CostModel;

/// Harness failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config file or parameters (exit 1).
    #[error("{0}")]
    Usage(String),
    /// The experiment itself failed (exit 2).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser, Default)]
#[command(name = "loopsched", about = "Run loop scheduling experiments", version)]
struct Flags {
    /// Number of loop iterations
    #[arg(long)]
    iters: Option<u64>,
    /// First loop index
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<i64>,
    /// Index increment (nonzero, may be negative)
    #[arg(long, allow_hyphen_values = true)]
    stride: Option<i64>,
    /// Loop chunk parameter
    #[arg(long)]
    chunk: Option<u64>,
    /// Schedule token with optional parameters, e.g. `dynamic,16`; repeat to sweep
    #[arg(long)]
    schedule: Vec<String>,
    /// Team size
    #[arg(long)]
    threads: Option<usize>,
    /// `real` or `sim`
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated per-thread speeds (sim)
    #[arg(long)]
    speeds: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cost model, e.g. `exponential:10:7`; repeat to sweep
    #[arg(long)]
    workload: Vec<String>,
    #[arg(long)]
    invocations: Option<usize>,
    /// Per-dequeue overhead in ticks (sim)
    #[arg(long)]
    overhead: Option<u64>,
    /// Trace format: `csv` or `json`
    #[arg(long)]
    format: Option<String>,
    /// Output directory for traces and history
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the loop history as JSON
    #[arg(long)]
    dump_history: bool,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub iters: u64,
    pub lower: i64,
    pub stride: i64,
    pub chunk: Option<u64>,
    pub schedules: Vec<ScheduleSpec>,
    pub threads: usize,
    pub mode: Mode,
    pub speeds: Vec<f64>,
    pub seed: u64,
    pub workloads: Vec<CostModel>,
    pub invocations: usize,
    pub overhead: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub dump_history: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            iters: 1000,
            lower: 0,
            stride: 1,
            chunk: None,
            schedules: vec![ScheduleSpec::Static { chunk: None }],
            threads: 4,
            mode: Mode::Sim,
            speeds: Vec::new(),
            seed: 0,
            workloads: vec![CostModel::Constant { cost: 1.0 }],
            invocations: 1,
            overhead: 0,
            format: Format::Csv,
            out: None,
            dump_history: false,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value `{value}` for `{key}`")))
}

fn parse_speeds(value: &str) -> Result<Vec<f64>, CliError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse_num("speeds", s)).collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting. List keys (`schedule`, `workload`)
    /// append.
    fn apply(&mut self, key: &str, value: &str, lists_seen: &mut (bool, bool)) -> Result<(), CliError> {
        match key {
            "iters" => self.iters = parse_num(key, value)?,
            "lower" => self.lower = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "chunk" => self.chunk = Some(parse_num(key, value)?),
            "schedule" => {
                if !lists_seen.0 {
                    self.schedules.clear();
                    lists_seen.0 = true;
                }
                self.schedules.push(value.parse().map_err(usage)?);
            }
            "threads" => self.threads = parse_num(key, value)?,
            "mode" => self.mode = value.trim().parse().map_err(usage)?,
            "speeds" => self.speeds = parse_speeds(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "workload" => {
                if !lists_seen.1 {
                    self.workloads.clear();
                    lists_seen.1 = true;
                }
                self.workloads.push(value.parse().map_err(usage)?);
            }
            "invocations" => self.invocations = parse_num(key, value)?,
            "overhead" => self.overhead = parse_num(key, value)?,
            "format" => self.format = value.trim().parse().map_err(usage)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "dump-history" | "dump_history" => self.dump_history = parse_num(key, value)?,
            other => return Err(usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text. Blank lines and `#` comments are
    /// skipped.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_config_text(text)?;
        Ok(cfg)
    }

    fn merge_config_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = (false, false);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected `key = value`", n + 1)))?;
            self.apply(key.trim(), value.trim(), &mut seen)?;
        }
        Ok(())
    }

    /// Parses command-line arguments; the first item is the program name.
    pub fn from_args<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let flags = Flags::try_parse_from(args)?;
        Self::from_flags(flags).map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
    }

    fn from_flags(flags: Flags) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg.merge_config_text(&text)?;
        }
        let mut seen = (false, false);
        let mut set = |key: &str, value: Option<String>, cfg: &mut ExperimentConfig| match value {
            Some(v) => cfg.apply(key, &v, &mut seen),
            None => Ok(()),
        };
        set("iters", flags.iters.map(|v| v.to_string()), &mut cfg)?;
        set("lower", flags.lower.map(|v| v.to_string()), &mut cfg)?;
        set("stride", flags.stride.map(|v| v.to_string()), &mut cfg)?;
        set("chunk", flags.chunk.map(|v| v.to_string()), &mut cfg)?;
        for s in flags.schedule {
            set("schedule", Some(s), &mut cfg)?;
        }
        set("threads", flags.threads.map(|v| v.to_string()), &mut cfg)?;
        set("mode", flags.mode, &mut cfg)?;
        set("speeds", flags.speeds, &mut cfg)?;
        set("seed", flags.seed.map(|v| v.to_string()), &mut cfg)?;
        for w in flags.workload {
            set("workload", Some(w), &mut cfg)?;
        }
        set("invocations", flags.invocations.map(|v| v.to_string()), &mut cfg)?;
        set("overhead", flags.overhead.map(|v| v.to_string()), &mut cfg)?;
        set("format", flags.format, &mut cfg)?;
        set("out", flags.out.map(|p| p.display().to_string()), &mut cfg)?;
        if flags.dump_history {
            cfg.dump_history = true;
        }
        Ok(cfg)
    }

    /// Config text that reproduces this experiment.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "iters = {}", self.iters);
        let _ = writeln!(s, "lower = {}", self.lower);
        let _ = writeln!(s, "stride = {}", self.stride);
        if let Some(c) = self.chunk {
            let _ = writeln!(s, "chunk = {c}");
        }
        for sched in &self.schedules {
            let _ = writeln!(s, "schedule = {sched}");
        }
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "mode = {}", self.mode);
        if !self.speeds.is_empty() {
            let speeds: Vec<String> = self.speeds.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "speeds = {}", speeds.join(","));
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        for w in &self.workloads {
            let _ = writeln!(s, "workload = {w}");
        }
        let _ = writeln!(s, "invocations = {}", self.invocations);
        let _ = writeln!(s, "overhead = {}", self.overhead);
        let _ = writeln!(s, "format = {}", self.format);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        let _ = writeln!(s, "dump-history = {}", self.dump_history);
        s
    }

    pub fn is_sweep(&self) -> bool {
        self.schedules.len() > 1 || self.workloads.len() > 1
    }

    pub fn loop_descriptor(&self) -> Result<LoopDescriptor, CliError> {
        let upper = (self.iters as i128)
            .checked_mul(self.stride as i128)
            .and_then(|span| span.checked_add(self.lower as i128))
            .and_then(|u| i64::try_from(u).ok())
            .ok_or_else(|| usage("loop bounds overflow i64"))?;
        let mut lp = LoopDescriptor::new(self.lower, upper, self.stride).map_err(usage)?;
        if let Some(c) = self.chunk {
            lp = lp.with_chunk(c).map_err(usage)?;
        }
        Ok(lp)
    }

    pub fn team(&self) -> TeamConfig {
        TeamConfig {
            team_size: self.threads,
            mode: self.mode,
            speeds: self.speeds.clone(),
            seed: self.seed,
            overhead: self.overhead,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schedules.is_empty() || self.workloads.is_empty() {
            return Err(usage("at least one schedule and one workload are required"));
        }
        if self.invocations == 0 {
            return Err(usage("invocations must be at least 1"));
        }
        self.team().validate().map_err(usage)?;
        self.loop_descriptor()?;
        Ok(())
    }
}

/// Result of a single (non-sweep) experiment.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<ExecutionReport>,
    pub history: HistoryStore,
}

impl RunOutcome {
    pub fn metrics(&self) -> Vec<ImbalanceMetrics> {
        self.reports.iter().map(imbalance_metrics).collect()
    }

    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:>10} {:>14} {:>18} {:>10} {:>12}\n",
            "invocation", "makespan", "percent_imbalance", "cov", "total_chunks"
        );
        for (i, m) in self.metrics().iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>10} {:>14} {:>18.6} {:>10.6} {:>12}",
                i + 1,
                m.makespan,
                m.percent_imbalance,
                m.cov,
                m.total_chunks
            );
        }
        s
    }
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn run_one(
    cfg: &ExperimentConfig,
    schedule: &ScheduleSpec,
    workload: &CostModel,
    lp: &LoopDescriptor,
    history: &mut HistoryStore,
) -> Result<Vec<ExecutionReport>, CliError> {
    let mut strategy = schedule.build(cfg.seed);
    let mut reports = run_invocations(cfg.invocations, lp, &mut strategy, workload, &cfg.team(), history)
        .map_err(|e| match e {
            crate::error::RunError::Sched(s) => usage(s),
            other => runtime(other),
        })?;
    let echo = cfg.echo();
    for r in &mut reports {
        r.config = Some(echo.clone());
    }
    Ok(reports)
}

/// Runs a single experiment: every invocation of the first schedule on the
/// first workload.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let lp = cfg.loop_descriptor()?;
    let mut history = HistoryStore::new();
    let reports = run_one(cfg, &cfg.schedules[0], &cfg.workloads[0], &lp, &mut history)?;
    Ok(RunOutcome { reports, history })
}

/// One row of a sweep: metrics of the final invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub schedule: String,
    pub workload: String,
    pub metrics: ImbalanceMetrics,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub history: HistoryStore,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl SweepOutcome {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("schedule,workload,makespan,percent_imbalance,cov,total_chunks\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{}",
                csv_field(&r.schedule),
                csv_field(&r.workload),
                r.metrics.makespan,
                r.metrics.percent_imbalance,
                r.metrics.cov,
                r.metrics.total_chunks
            );
        }
        s
    }
}

/// Runs every schedule against every workload with the shared seed. Each
/// combination gets its own loop site (`schedule|workload`) in one history.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let mut history = HistoryStore::new();
    let mut rows = Vec::new();
    for schedule in &cfg.schedules {
        for workload in &cfg.workloads {
            let lp = cfg
                .loop_descriptor()?
                .with_site(format!("{schedule}|{workload}"));
            let reports = run_one(cfg, schedule, workload, &lp, &mut history)?;
            let last = reports.last().expect("at least one invocation");
            rows.push(SweepRow {
                schedule: schedule.to_string(),
                workload: workload.to_string(),
                metrics: imbalance_metrics(last),
            });
        }
    }
    Ok(SweepOutcome { rows, history })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// Trace file name for 1-based invocation `i`.
pub fn trace_file_name(i: usize, format: Format) -> String {
    format!("trace_{i:03}.{}", format.extension())
}

/// Runs the harness for parsed config and writes all outputs.
pub fn execute(cfg: &ExperimentConfig, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| runtime(e);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    let history = if cfg.is_sweep() {
        let outcome = sweep(cfg)?;
        let csv = outcome.to_csv();
        match &cfg.out {
            Some(dir) => write_file(&dir.join("sweep.csv"), &csv)?,
            None => stdout.write_all(csv.as_bytes()).map_err(io)?,
        }
        outcome.history
    } else {
        let outcome = run(cfg)?;
        stdout.write_all(outcome.summary_table().as_bytes()).map_err(io)?;
        if let Some(dir) = &cfg.out {
            for (i, r) in outcome.reports.iter().enumerate() {
                export(r, cfg.format, &dir.join(trace_file_name(i + 1, cfg.format))).map_err(runtime)?;
            }
        }
        outcome.history
    };
    if cfg.dump_history {
        let json = history.to_json().map_err(runtime)?;
        match &cfg.out {
            Some(dir) => write_file(&dir.join("history.json"), &json)?,
            None => writeln!(stdout, "{json}").map_err(io)?,
        }
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(args) {
        Ok(f) => f,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = ExperimentConfig::from_flags(flags).and_then(|cfg| {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        execute(&cfg, &mut lock)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
