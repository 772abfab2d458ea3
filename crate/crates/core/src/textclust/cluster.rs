use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::SparseVector;

/// Identifier of a micro-cluster; assigned in increasing order, never reused.
pub type ClusterId = u64;

/// `2^(-lambda * dt)`.
pub fn decay_factor(lambda: f64, dt: f64) -> f64 {
    (-(lambda * dt)).exp2()
}

/// A faded summary of similar documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroCluster {
    pub id: ClusterId,
    /// Faded term frequencies as of `last_update`.
    pub tf: SparseVector,
    /// Faded document count as of `last_update`.
    pub weight: f64,
    pub last_update: f64,
}

impl MicroCluster {
    pub(crate) fn new(id: ClusterId, tf: SparseVector, t: f64) -> Self {
        MicroCluster {
            id,
            tf,
            weight: 1.0,
            last_update: t,
        }
    }

    /// Fades weight and every token weight to time `t`.
    pub fn fade_to(&mut self, t: f64, lambda: f64) -> Result<()> {
        let dt = t - self.last_update;
        if dt < 0.0 {
            return Err(Error::StreamOrder(format!(
                "cannot fade cluster {} back from t={} to t={t}",
                self.id, self.last_update
            )));
        }
        if dt > 0.0 {
            let f = decay_factor(lambda, dt);
            self.weight *= f;
            self.tf.scale(f);
        }
        self.last_update = t;
        Ok(())
    }

    /// Weight the cluster would have at `t` without further inserts.
    pub fn weight_at(&self, t: f64, lambda: f64) -> f64 {
        self.weight * decay_factor(lambda, (t - self.last_update).max(0.0))
    }

    /// Adds a document's counts; the cluster must already be faded to `t`.
    pub(crate) fn absorb_doc(&mut self, doc_tf: &SparseVector, t: f64) {
        debug_assert_eq!(self.last_update, t);
        self.tf.merge_from(doc_tf);
        self.weight += 1.0;
    }

    /// Merges another cluster faded to the same time into this one.
    pub(crate) fn absorb_cluster(&mut self, other: &MicroCluster, t: f64) {
        self.tf.merge_from(&other.tf);
        self.weight += other.weight;
        self.last_update = t;
    }

    pub fn top_tokens(&self, k: usize) -> Vec<(String, f64)> {
        top_tokens(self, k)
    }
}

/// Pure variant of [`MicroCluster::fade_to`].
pub fn fade(mc: &MicroCluster, t: f64, lambda: f64) -> Result<MicroCluster> {
    let mut out = mc.clone();
    out.fade_to(t, lambda)?;
    Ok(out)
}

/// Highest-weight tokens, ties broken by token.
pub fn top_tokens(mc: &MicroCluster, k: usize) -> Vec<(String, f64)> {
    crate::rank::top_k(mc.tf.iter(), k)
}
