//! Online text stream clustering with fading micro-clusters.
//!
//! Documents are assigned to the most similar micro-cluster (cosine over
//! tf-idf weights) when the similarity exceeds the radius `r`, and open a new
//! cluster otherwise. Every `t_gap` time units a cleanup pass fades all
//! clusters by `2^(-lambda * dt)`, drops clusters and tokens whose weight has
//! fallen to `2^(-lambda * t_gap)` or below, and merges clusters whose
//! similarity reaches `r_merge`.
//!
//! The idf table used for similarities is rebuilt from the clusters' token
//! sets at each cleanup and held fixed until the next one. Before the first
//! cleanup every token has idf 1.

mod cluster;
mod events;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{cosine, tfidf, IdfTable, SparseVector, TokenDoc};

pub use cluster::{decay_factor, fade, top_tokens, ClusterId, MicroCluster};
pub use events::{ClusterEvent, ClusterEventLog, EventKind};

/// How stream time advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    /// `t` is the number of documents read so far.
    CountTime,
    /// `t` is the document timestamp measured in `time_unit_secs` since the
    /// first document.
    WallTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClustererConfig {
    /// Fading rate per time unit.
    pub lambda: f64,
    /// Similarity a document must exceed to join a cluster.
    pub radius: f64,
    /// Similarity at which two clusters are merged during cleanup.
    pub merge_radius: f64,
    /// Cleanup period in time units. Also sets the removal threshold.
    pub t_gap: u64,
    pub n_min: usize,
    pub n_max: usize,
    /// Length of one time unit in wall-time mode.
    pub time_unit_secs: u64,
    pub mode: TimeMode,
    /// Number of top tokens captured in each logged event.
    pub event_top_k: usize,
}

impl Default for ClustererConfig {
    fn default() -> Self {
        ClustererConfig {
            lambda: 0.01,
            radius: 0.06,
            merge_radius: 0.06,
            t_gap: 100,
            n_min: 1,
            n_max: 2,
            time_unit_secs: 3600,
            mode: TimeMode::WallTime,
            event_top_k: 10,
        }
    }
}

impl ClustererConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.radius > 0.0 && self.radius < 1.0) {
            return fail(format!("radius must lie in (0, 1), got {}", self.radius));
        }
        if !(self.merge_radius > 0.0 && self.merge_radius <= 1.0) {
            return fail(format!("merge radius must lie in (0, 1], got {}", self.merge_radius));
        }
        if self.t_gap < 1 {
            return fail("t_gap must be at least 1".into());
        }
        if self.n_min < 1 || self.n_max < self.n_min {
            return fail(format!(
                "n-gram range must satisfy 1 <= n_min <= n_max, got ({}, {})",
                self.n_min, self.n_max
            ));
        }
        if self.time_unit_secs == 0 {
            return fail("time unit must be at least one second".into());
        }
        if self.event_top_k == 0 {
            return fail("event_top_k must be at least 1".into());
        }
        Ok(())
    }

    /// Weight at or below which clusters and tokens are dropped.
    pub fn removal_threshold(&self) -> f64 {
        decay_factor(self.lambda, self.t_gap as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Merged,
    Created,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cluster_id: ClusterId,
    pub action: Action,
    /// Best similarity found, 0 when there were no clusters.
    pub similarity: f64,
    pub t: f64,
}

/// A cluster together with its squared tf-idf norm under the current idf,
/// at the scale of its stored (lazily faded) token weights.
#[derive(Debug, Clone)]
struct Slot {
    mc: MicroCluster,
    norm_sq: f64,
}

/// Serializable view of the clusterer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub origin: Option<DateTime<Utc>>,
    pub time_unit_secs: u64,
    pub mode: TimeMode,
    pub t: Option<f64>,
    pub clusters: Vec<MicroCluster>,
}

/// The clusterer. Single-writer: callers serialize inserts in stream order.
#[derive(Debug, Clone)]
pub struct TextClust {
    config: ClustererConfig,
    slots: Vec<Slot>,
    next_id: ClusterId,
    idf: Option<IdfTable>,
    last_t: Option<f64>,
    next_cleanup: f64,
    origin: Option<DateTime<Utc>>,
    docs_read: u64,
    skipped: u64,
    log: ClusterEventLog,
}

impl TextClust {
    pub fn new(config: ClustererConfig) -> Result<Self> {
        config.validate()?;
        let next_cleanup = match config.mode {
            TimeMode::CountTime => 0.0,
            TimeMode::WallTime => config.t_gap as f64,
        };
        Ok(TextClust {
            config,
            slots: Vec::new(),
            next_id: 0,
            idf: None,
            last_t: None,
            next_cleanup,
            origin: None,
            docs_read: 0,
            skipped: 0,
            log: ClusterEventLog::new(),
        })
    }

    /// Pins the wall-time origin instead of taking the first document's timestamp.
    pub fn with_origin(mut self, origin: DateTime<Utc>) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn config(&self) -> &ClustererConfig {
        &self.config
    }

    pub fn clusters(&self) -> impl Iterator<Item = &MicroCluster> + '_ {
        self.slots.iter().map(|s| &s.mc)
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&MicroCluster> {
        self.slots.iter().find(|s| s.mc.id == id).map(|s| &s.mc)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn idf(&self) -> Option<&IdfTable> {
        self.idf.as_ref()
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn current_time(&self) -> Option<f64> {
        self.last_t
    }

    pub fn origin(&self) -> Option<DateTime<Utc>> {
        self.origin
    }

    pub fn log(&self) -> &ClusterEventLog {
        &self.log
    }

    pub fn into_log(self) -> ClusterEventLog {
        self.log
    }

    /// Copies of all clusters, faded to the last processed time.
    pub fn snapshot(&self) -> StateSnapshot {
        let clusters = self
            .slots
            .iter()
            .map(|s| match self.last_t {
                Some(t) => fade(&s.mc, t, self.config.lambda).unwrap_or_else(|_| s.mc.clone()),
                None => s.mc.clone(),
            })
            .collect();
        StateSnapshot {
            origin: self.origin,
            time_unit_secs: self.config.time_unit_secs,
            mode: self.config.mode,
            t: self.last_t,
            clusters,
        }
    }

    /// Applies the current idf to a tf map.
    pub fn weighted(&self, tf: &SparseVector) -> SparseVector {
        match &self.idf {
            Some(idf) => tfidf(tf, idf),
            None => tf.clone(),
        }
    }

    fn idf_of(&self, token: &str) -> f64 {
        self.idf.as_ref().map_or(1.0, |t| t.idf(token))
    }

    fn norm_sq(&self, tf: &SparseVector) -> f64 {
        tf.iter()
            .map(|(k, w)| {
                let x = w * self.idf_of(k);
                x * x
            })
            .sum()
    }

    /// Tf-idf cosine similarity between two clusters under the current idf.
    pub fn similarity(&self, a: &MicroCluster, b: &MicroCluster) -> f64 {
        cosine(&self.weighted(&a.tf), &self.weighted(&b.tf))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::StreamOrder(format!("stream time {t} is not finite")));
        }
        if let Some(last) = self.last_t {
            if t < last {
                return Err(Error::StreamOrder(format!(
                    "stream time went backwards from {last} to {t}"
                )));
            }
        }
        Ok(())
    }

    fn event(&self, t: f64, event: EventKind, ids: Vec<ClusterId>, mc: &MicroCluster) -> ClusterEvent {
        ClusterEvent {
            t,
            event,
            ids,
            top_tokens: mc.top_tokens(self.config.event_top_k),
            weight: mc.weight,
        }
    }

    /// Inserts one document at stream time `t` without scheduling cleanups.
    ///
    /// Returns `None` when the document has no tokens.
    pub fn insert(&mut self, tokens: &[String], t: f64) -> Result<Option<Assignment>> {
        self.check_time(t)?;
        if tokens.is_empty() {
            self.skipped += 1;
            self.last_t = Some(t);
            return Ok(None);
        }
        let mut doc_tf = SparseVector::new();
        for tok in tokens {
            doc_tf.add(tok, 1.0);
        }
        let doc_weighted: Vec<(&str, f64)> =
            doc_tf.iter().map(|(k, w)| (k, w * self.idf_of(k))).collect();
        let doc_norm_sq: f64 = doc_weighted.iter().map(|(_, x)| x * x).sum();

        let mut best: Option<(usize, f64)> = None;
        for (i, slot) in self.slots.iter().enumerate() {
            let dot: f64 = doc_weighted
                .iter()
                .map(|(k, x)| x * slot.mc.tf.get(k) * self.idf_of(k))
                .sum();
            let denom = (doc_norm_sq * slot.norm_sq).sqrt();
            let s = if denom > 0.0 { (dot / denom).clamp(0.0, 1.0) } else { 0.0 };
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((i, s));
            }
        }

        self.last_t = Some(t);
        let lambda = self.config.lambda;
        let assignment = match best {
            Some((i, s)) if s > self.config.radius => {
                let slot = &mut self.slots[i];
                slot.mc.fade_to(t, lambda)?;
                slot.mc.absorb_doc(&doc_tf, t);
                let norm_sq = self.norm_sq(&self.slots[i].mc.tf);
                self.slots[i].norm_sq = norm_sq;
                let mc = &self.slots[i].mc;
                let ev = self.event(t, EventKind::MergedInto, vec![mc.id], mc);
                self.log.push(ev);
                Assignment {
                    cluster_id: self.slots[i].mc.id,
                    action: Action::Merged,
                    similarity: s,
                    t,
                }
            }
            other => {
                let id = self.next_id;
                self.next_id += 1;
                let mc = MicroCluster::new(id, doc_tf, t);
                let norm_sq = self.norm_sq(&mc.tf);
                let ev = self.event(t, EventKind::Created, vec![id], &mc);
                self.log.push(ev);
                self.slots.push(Slot { mc, norm_sq });
                Assignment {
                    cluster_id: id,
                    action: Action::Created,
                    similarity: other.map_or(0.0, |(_, s)| s),
                    t,
                }
            }
        };
        Ok(Some(assignment))
    }

    /// Fades all clusters to `t`, removes weak clusters and tokens, and merges
    /// similar clusters until no pair reaches `merge_radius`.
    pub fn cleanup(&mut self, t: f64) -> Result<()> {
        self.check_time(t)?;
        self.last_t = Some(t);
        let lambda = self.config.lambda;
        let threshold = self.config.removal_threshold();

        let mut kept = Vec::with_capacity(self.slots.len());
        for mut slot in std::mem::take(&mut self.slots) {
            slot.mc.fade_to(t, lambda)?;
            if slot.mc.weight > threshold {
                slot.mc.tf.retain(|_, w| w > threshold);
            }
            if slot.mc.weight <= threshold || slot.mc.tf.is_empty() {
                let ev = self.event(t, EventKind::Removed, vec![slot.mc.id], &slot.mc);
                self.log.push(ev);
            } else {
                kept.push(slot);
            }
        }
        self.slots = kept;

        loop {
            self.rebuild_idf()?;
            if !self.merge_pass(t) {
                break;
            }
        }

        for i in 0..self.slots.len() {
            self.slots[i].norm_sq = self.norm_sq(&self.slots[i].mc.tf);
            let mc = &self.slots[i].mc;
            let ev = self.event(t, EventKind::Faded, vec![mc.id], mc);
            self.log.push(ev);
        }
        Ok(())
    }

    fn rebuild_idf(&mut self) -> Result<()> {
        self.idf = if self.slots.is_empty() {
            None
        } else {
            Some(IdfTable::from_token_sets(
                self.slots.iter().map(|s| s.mc.tf.keys()),
            )?)
        };
        Ok(())
    }

    /// One greedy pass in ascending id order; returns whether anything merged.
    fn merge_pass(&mut self, t: f64) -> bool {
        let mut weighted: Vec<SparseVector> = self.slots.iter().map(|s| self.weighted(&s.mc.tf)).collect();
        let mut alive = vec![true; self.slots.len()];
        let mut merged_any = false;

        for i in 0..self.slots.len() {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..self.slots.len() {
                if !alive[j] {
                    continue;
                }
                if cosine(&weighted[i], &weighted[j]) >= self.config.merge_radius {
                    let absorbed = self.slots[j].mc.clone();
                    self.slots[i].mc.absorb_cluster(&absorbed, t);
                    weighted[i] = self.weighted(&self.slots[i].mc.tf);
                    alive[j] = false;
                    merged_any = true;
                    let mc = &self.slots[i].mc;
                    let ev = self.event(t, EventKind::PairMerged, vec![mc.id, absorbed.id], mc);
                    self.log.push(ev);
                }
            }
        }

        if merged_any {
            let mut idx = 0;
            self.slots.retain(|_| {
                let keep = alive[idx];
                idx += 1;
                keep
            });
        }
        merged_any
    }

    /// Runs every cleanup scheduled at or before `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        self.check_time(t)?;
        let gap = self.config.t_gap as f64;
        while self.next_cleanup <= t {
            let at = self.next_cleanup;
            self.cleanup(at)?;
            self.next_cleanup += gap;
        }
        Ok(())
    }

    /// Stream time of a document under the configured mode.
    pub fn stream_time(&self, timestamp: DateTime<Utc>) -> f64 {
        match self.config.mode {
            TimeMode::CountTime => self.docs_read as f64,
            TimeMode::WallTime => {
                let origin = self.origin.unwrap_or(timestamp);
                let ms = (timestamp - origin).num_milliseconds() as f64;
                ms / (self.config.time_unit_secs as f64 * 1000.0)
            }
        }
    }

    /// Reads the next document from the stream, running cleanups on schedule.
    pub fn process(&mut self, doc: &TokenDoc) -> Result<Option<Assignment>> {
        if self.config.mode == TimeMode::WallTime && self.origin.is_none() {
            self.origin = Some(doc.timestamp);
        }
        let t = self.stream_time(doc.timestamp);
        self.check_time(t)?;
        let assignment = match self.config.mode {
            TimeMode::WallTime => {
                self.advance_to(t)?;
                self.insert(&doc.tokens, t)?
            }
            TimeMode::CountTime => {
                let a = self.insert(&doc.tokens, t)?;
                self.advance_to(t)?;
                a
            }
        };
        self.docs_read += 1;
        Ok(assignment)
    }
}

/// Orders documents by timestamp, ties by document id.
pub fn sort_stream(docs: &mut [TokenDoc]) {
    docs.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.doc_id.cmp(&b.doc_id)));
}

/// Clusters a time-ordered document stream from scratch.
pub fn run_stream(docs: &[TokenDoc], config: &ClustererConfig) -> Result<(TextClust, Vec<Option<Assignment>>)> {
    if let Some(w) = docs.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::StreamOrder(format!(
            "document {}/{} at {} precedes its predecessor at {}",
            w[1].doc_id.platform, w[1].doc_id.repo_id, w[1].timestamp, w[0].timestamp
        )));
    }
    let mut state = TextClust::new(config.clone())?;
    let mut assignments = Vec::with_capacity(docs.len());
    for doc in docs {
        assignments.push(state.process(doc)?);
    }
    Ok((state, assignments))
}
