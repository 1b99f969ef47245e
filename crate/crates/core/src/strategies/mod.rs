//! Built-in loop scheduling strategies and the name registry.
//!
//! | token           | strategy                                        |
//! |-----------------|-------------------------------------------------|
//! | `static`        | block-cyclic static assignment, ⌈N/P⌉ default   |
//! | `static-cyclic` | iteration `i` to thread `i mod P`               |
//! | `dynamic`       | fixed-size chunks from a shared counter         |
//! | `ss`            | pure self-scheduling, one iteration per dequeue |
//! | `guided`        | guided self-scheduling, ⌈R/P⌉                   |
//! | `tss`           | trapezoid self-scheduling                       |
//! | `fac2`          | factoring, batches of P chunks of ⌈R/2P⌉        |
//! | `wf2`           | weighted factoring with fixed per-thread weights |
//! | `rand`          | uniformly random chunk sizes in `lo..=hi`       |
//! | `awf`           | weighted factoring with weights learned across invocations |
//!
//! Parameters follow the token after a comma, colon-separated:
//! `dynamic,16`, `wf2,1.5:0.5`, `rand,1:8`, `tss,13:1`.

mod dynamic;
mod factoring;
mod guided;
mod random;
mod static_block;
mod tss;
mod weights;

use std::fmt;
use std::str::FromStr;

pub use dynamic::DynamicChunked;
pub use factoring::{AdaptiveWeightedFactoring, Fac2, WeightedFactoring};
pub use guided::Guided;
pub use random::RandomChunk;
pub use static_block::StaticBlock;
pub use tss::Trapezoid;
pub use weights::WeightVector;

use crate::contract::Scheduler;
use crate::error::SchedError;

/// Every registry token, in documentation order.
pub const TOKENS: [&str; 10] = [
    "static",
    "static-cyclic",
    "dynamic",
    "ss",
    "guided",
    "tss",
    "fac2",
    "wf2",
    "rand",
    "awf",
];

/// A parsed `--schedule` value.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Static { chunk: Option<u64> },
    StaticCyclic,
    Dynamic { chunk: Option<u64> },
    SelfSched,
    Guided { min_chunk: Option<u64> },
    Tss { first: Option<u64>, last: Option<u64> },
    Fac2,
    Wf2 { weights: Vec<f64> },
    Rand { lo: Option<u64>, hi: Option<u64>, seed: Option<u64> },
    Awf,
}

impl ScheduleSpec {
    pub fn token(&self) -> &'static str {
        match self {
            ScheduleSpec::Static { .. } => "static",
            ScheduleSpec::StaticCyclic => "static-cyclic",
            ScheduleSpec::Dynamic { .. } => "dynamic",
            ScheduleSpec::SelfSched => "ss",
            ScheduleSpec::Guided { .. } => "guided",
            ScheduleSpec::Tss { .. } => "tss",
            ScheduleSpec::Fac2 => "fac2",
            ScheduleSpec::Wf2 { .. } => "wf2",
            ScheduleSpec::Rand { .. } => "rand",
            ScheduleSpec::Awf => "awf",
        }
    }

    /// Instantiates the strategy. `seed` feeds `rand` when the spec carries
    /// no seed of its own.
    pub fn build(&self, seed: u64) -> Box<dyn Scheduler> {
        match self {
            ScheduleSpec::Static { chunk } => Box::new(StaticBlock::new(*chunk)),
            ScheduleSpec::StaticCyclic => Box::new(StaticBlock::cyclic()),
            ScheduleSpec::Dynamic { chunk } => Box::new(DynamicChunked::new(*chunk)),
            ScheduleSpec::SelfSched => Box::new(DynamicChunked::self_sched()),
            ScheduleSpec::Guided { min_chunk } => Box::new(Guided::new(*min_chunk)),
            ScheduleSpec::Tss { first, last } => Box::new(Trapezoid::new(*first, *last)),
            ScheduleSpec::Fac2 => Box::new(Fac2::new()),
            ScheduleSpec::Wf2 { weights } => Box::new(WeightedFactoring::new(weights.clone())),
            ScheduleSpec::Rand { lo, hi, seed: s } => {
                Box::new(RandomChunk::new(*lo, *hi, s.unwrap_or(seed)))
            }
            ScheduleSpec::Awf => Box::new(AdaptiveWeightedFactoring::new()),
        }
    }
}

/// Parses a schedule token and builds it in one step.
pub fn lookup(spec: &str, seed: u64) -> Result<Box<dyn Scheduler>, SchedError> {
    Ok(spec.parse::<ScheduleSpec>()?.build(seed))
}

fn parse_u64(schedule: &'static str, text: &str) -> Result<u64, SchedError> {
    text.trim().parse::<u64>().map_err(|_| SchedError::InvalidParam {
        schedule,
        reason: format!("`{text}` is not a nonnegative integer"),
    })
}

fn positive(schedule: &'static str, text: &str) -> Result<u64, SchedError> {
    let v = parse_u64(schedule, text)?;
    if v == 0 {
        return Err(SchedError::InvalidParam {
            schedule,
            reason: "chunk sizes must be at least 1".into(),
        });
    }
    Ok(v)
}

fn at_most(schedule: &'static str, params: &[&str], max: usize) -> Result<(), SchedError> {
    if params.len() > max {
        return Err(SchedError::InvalidParam {
            schedule,
            reason: format!("expected at most {max} parameter(s), got {}", params.len()),
        });
    }
    Ok(())
}

impl FromStr for ScheduleSpec {
    type Err = SchedError;

    fn from_str(s: &str) -> Result<Self, SchedError> {
        let s = s.trim();
        let (token, rest) = match s.split_once(',') {
            Some((t, r)) => (t.trim(), Some(r.trim())),
            None => (s, None),
        };
        let params: Vec<&str> = match rest {
            Some(r) if !r.is_empty() => r.split(':').collect(),
            _ => Vec::new(),
        };
        let spec = match token {
            "static" => {
                at_most("static", &params, 1)?;
                ScheduleSpec::Static {
                    chunk: params.first().map(|p| positive("static", p)).transpose()?,
                }
            }
            "static-cyclic" => {
                at_most("static-cyclic", &params, 0)?;
                ScheduleSpec::StaticCyclic
            }
            "dynamic" => {
                at_most("dynamic", &params, 1)?;
                ScheduleSpec::Dynamic {
                    chunk: params.first().map(|p| positive("dynamic", p)).transpose()?,
                }
            }
            "ss" => {
                at_most("ss", &params, 0)?;
                ScheduleSpec::SelfSched
            }
            "guided" => {
                at_most("guided", &params, 1)?;
                ScheduleSpec::Guided {
                    min_chunk: params.first().map(|p| positive("guided", p)).transpose()?,
                }
            }
            "tss" => {
                at_most("tss", &params, 2)?;
                let first = params.first().map(|p| positive("tss", p)).transpose()?;
                let last = params.get(1).map(|p| positive("tss", p)).transpose()?;
                if let (Some(f), Some(l)) = (first, last) {
                    if f < l {
                        return Err(SchedError::InvalidParam {
                            schedule: "tss",
                            reason: format!("first chunk {f} is smaller than last chunk {l}"),
                        });
                    }
                }
                ScheduleSpec::Tss { first, last }
            }
            "fac2" => {
                at_most("fac2", &params, 0)?;
                ScheduleSpec::Fac2
            }
            "wf2" => {
                if params.is_empty() {
                    return Err(SchedError::InvalidParam {
                        schedule: "wf2",
                        reason: "weights are required, e.g. `wf2,1.5:0.5`".into(),
                    });
                }
                let weights = params
                    .iter()
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|_| SchedError::InvalidParam {
                            schedule: "wf2",
                            reason: format!("`{p}` is not a number"),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                WeightVector::new(weights.clone())?;
                ScheduleSpec::Wf2 { weights }
            }
            "rand" => {
                at_most("rand", &params, 3)?;
                let lo = params.first().map(|p| positive("rand", p)).transpose()?;
                let hi = params.get(1).map(|p| positive("rand", p)).transpose()?;
                let seed = params.get(2).map(|p| parse_u64("rand", p)).transpose()?;
                if let (Some(l), Some(h)) = (lo, hi) {
                    if l > h {
                        return Err(SchedError::InvalidParam {
                            schedule: "rand",
                            reason: format!("lower bound {l} exceeds upper bound {h}"),
                        });
                    }
                }
                ScheduleSpec::Rand { lo, hi, seed }
            }
            "awf" => {
                at_most("awf", &params, 0)?;
                ScheduleSpec::Awf
            }
            other => {
                return Err(SchedError::UnknownToken {
                    token: other.to_owned(),
                })
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = match self {
            ScheduleSpec::Static { chunk } | ScheduleSpec::Dynamic { chunk } => {
                chunk.iter().map(u64::to_string).collect()
            }
            ScheduleSpec::Guided { min_chunk } => min_chunk.iter().map(u64::to_string).collect(),
            ScheduleSpec::Tss { first, last } => {
                first.iter().chain(last.iter()).map(u64::to_string).collect()
            }
            ScheduleSpec::Wf2 { weights } => weights.iter().map(f64::to_string).collect(),
            ScheduleSpec::Rand { lo, hi, seed } => lo
                .iter()
                .chain(hi.iter())
                .chain(seed.iter())
                .map(u64::to_string)
                .collect(),
            ScheduleSpec::StaticCyclic | ScheduleSpec::SelfSched | ScheduleSpec::Fac2 | ScheduleSpec::Awf => {
                Vec::new()
            }
        };
        f.write_str(self.token())?;
        if !params.is_empty() {
            write!(f, ",{}", params.join(":"))?;
        }
        Ok(())
    }
}

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub(crate) fn check_team(team_size: usize) -> Result<(), SchedError> {
    if team_size == 0 {
        Err(SchedError::EmptyTeam)
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_token_parses() {
        for t in TOKENS {
            let spec = if t == "wf2" { "wf2,1:1".to_owned() } else { t.to_owned() };
            let parsed: ScheduleSpec = spec.parse().unwrap();
            assert_eq!(parsed.token(), t);
            assert_eq!(parsed.build(0).info().name, t);
        }
    }

    #[test]
    fn parameters_parse() {
        assert_eq!("dynamic,16".parse::<ScheduleSpec>().unwrap(), ScheduleSpec::Dynamic { chunk: Some(16) });
        assert_eq!(
            "wf2,1.5:0.5".parse::<ScheduleSpec>().unwrap(),
            ScheduleSpec::Wf2 { weights: vec![1.5, 0.5] }
        );
        assert_eq!(
            "rand,1:8".parse::<ScheduleSpec>().unwrap(),
            ScheduleSpec::Rand { lo: Some(1), hi: Some(8), seed: None }
        );
        assert_eq!(
            "tss,13:1".parse::<ScheduleSpec>().unwrap(),
            ScheduleSpec::Tss { first: Some(13), last: Some(1) }
        );
    }

    #[test]
    fn display_round_trips() {
        for s in ["static", "static,10", "dynamic,16", "wf2,1.5:0.5", "rand,1:8:3", "tss,13:1", "guided,2", "awf"] {
            let spec: ScheduleSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn unknown_token_lists_registry() {
        let err = "foo".parse::<ScheduleSpec>().unwrap_err();
        let msg = err.to_string();
        for t in TOKENS {
            assert!(msg.contains(t), "{msg}");
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        for s in ["dynamic,0", "dynamic,x", "static,1:2", "tss,1:5", "rand,8:1", "wf2", "wf2,1:-1", "ss,3"] {
            assert!(s.parse::<ScheduleSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn ceil_div_matches_float() {
        for a in 0..50 {
            for b in 1..9 {
                assert_eq!(ceil_div(a, b), (a as f64 / b as f64).ceil() as u64);
            }
        }
    }
}
