use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::cluster::ClusterId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// A document opened a new cluster. `ids = [new]`.
    Created,
    /// A document was merged into a cluster. `ids = [target]`.
    MergedInto,
    /// A cluster faded below the threshold or lost all tokens. `ids = [removed]`.
    Removed,
    /// Two clusters were merged at cleanup. `ids = [survivor, absorbed]`.
    PairMerged,
    /// Snapshot of a surviving cluster after a cleanup pass. `ids = [cluster]`.
    Faded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvent {
    pub t: f64,
    pub event: EventKind,
    pub ids: Vec<ClusterId>,
    pub top_tokens: Vec<(String, f64)>,
    pub weight: f64,
}

/// Append-only, time-ordered record of cluster lifecycle events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterEventLog {
    events: Vec<ClusterEvent>,
}

impl ClusterEventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, event: ClusterEvent) {
        debug_assert!(self.events.last().map_or(true, |e| e.t <= event.t));
        self.events.push(event);
    }

    pub fn events(&self) -> &[ClusterEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn from_events(events: Vec<ClusterEvent>) -> Self {
        ClusterEventLog { events }
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> std::io::Result<Self> {
        let mut events = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line)?);
        }
        Ok(ClusterEventLog { events })
    }
}
