//! Cross-invocation loop history, keyed by loop site.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::loop_desc::{Chunk, SiteId};
use crate::strategies::WeightVector;

/// Per-thread accumulators for one invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadStats {
    pub busy: u64,
    pub iters: u64,
    pub chunks: u64,
}

/// What a loop site remembers between invocations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub invocation_count: u64,
    #[serde(rename = "per_thread")]
    pub thread_stats: Vec<ThreadStats>,
    pub weights: Vec<f64>,
    /// Strategy-owned state carried across invocations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_blob: Option<serde_json::Value>,
}

impl LoopRecord {
    /// Resets per-thread stats for a new invocation and makes sure `weights`
    /// has one entry per thread.
    pub fn begin_invocation(&mut self, team_size: usize) {
        self.thread_stats = vec![ThreadStats::default(); team_size];
        if self.weights.len() != team_size {
            self.weights = vec![1.0; team_size];
        }
    }

    pub fn record_chunk(&mut self, thread: usize, chunk: &Chunk, elapsed: u64) {
        if self.thread_stats.len() <= thread {
            self.thread_stats.resize(thread + 1, ThreadStats::default());
        }
        let s = &mut self.thread_stats[thread];
        s.busy = s.busy.saturating_add(elapsed);
        s.iters = s.iters.saturating_add(chunk.size);
        s.chunks = s.chunks.saturating_add(1);
    }

    pub fn complete_invocation(&mut self) {
        self.invocation_count += 1;
    }

    /// Stores normalized weights (sum equals the number of entries).
    pub fn set_weights(&mut self, weights: &WeightVector) {
        self.weights = weights.as_slice().to_vec();
    }
}

/// Applies one chunk's measurement to a record.
pub fn history_record_chunk(mut record: LoopRecord, thread: usize, chunk: &Chunk, elapsed: u64) -> LoopRecord {
    record.record_chunk(thread, chunk, elapsed);
    record
}

/// Loop records for every site seen by a runtime instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryStore {
    records: BTreeMap<SiteId, LoopRecord>,
}

/// Serialized form of one history entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecordDump {
    pub site_id: SiteId,
    #[serde(flatten)]
    pub record: LoopRecord,
}

impl HistoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The record for `site`, created fresh on first lookup.
    pub fn record_mut(&mut self, site: &SiteId) -> &mut LoopRecord {
        self.records.entry(site.clone()).or_default()
    }

    pub fn get(&self, site: &SiteId) -> Option<&LoopRecord> {
        self.records.get(site)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dump(&self) -> Vec<LoopRecordDump> {
        self.records
            .iter()
            .map(|(site, record)| LoopRecordDump {
                site_id: site.clone(),
                record: record.clone(),
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.dump())
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let dumps: Vec<LoopRecordDump> = serde_json::from_str(text)?;
        Ok(HistoryStore {
            records: dumps.into_iter().map(|d| (d.site_id, d.record)).collect(),
        })
    }
}
