//! Pareto non-domination filtering over repository indicator vectors.
//!
//! Each repository is scored by commit count and lifespan (both maximized) and
//! timeliness (minimized). A vector dominates another when it is at least as
//! good on every indicator and strictly better on at least one.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::schema::{lifespan, timeliness, Platform, RepoRecord};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndicatorVector {
    pub n_commits: u64,
    pub lifespan_days: i64,
    pub timeliness_days: i64,
    pub platform: Platform,
    pub repo_id: String,
}

impl IndicatorVector {
    pub fn new(n_commits: u64, lifespan_days: i64, timeliness_days: i64) -> Self {
        IndicatorVector {
            n_commits,
            lifespan_days,
            timeliness_days,
            platform: Platform::Github,
            repo_id: String::new(),
        }
    }
}

/// Why a record has no indicator vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    UnknownCommits,
}

/// Computes the indicator vector of `r` at reference time `now`.
///
/// The outer `Result` carries validation failures; the inner one signals
/// records excluded from selection.
pub fn indicator_vector(
    r: &RepoRecord,
    now: DateTime<Utc>,
) -> Result<std::result::Result<IndicatorVector, Exclusion>> {
    let Some(n_commits) = r.commit_count else {
        return Ok(Err(Exclusion::UnknownCommits));
    };
    Ok(Ok(IndicatorVector {
        n_commits,
        lifespan_days: lifespan(r)?,
        timeliness_days: timeliness(r, now)?,
        platform: r.platform,
        repo_id: r.repo_id.clone(),
    }))
}

/// True iff `v` dominates `w`.
pub fn dominates(v: &IndicatorVector, w: &IndicatorVector) -> bool {
    let no_worse = v.n_commits >= w.n_commits
        && v.lifespan_days >= w.lifespan_days
        && v.timeliness_days <= w.timeliness_days;
    let better = v.n_commits > w.n_commits
        || v.lifespan_days > w.lifespan_days
        || v.timeliness_days < w.timeliness_days;
    no_worse && better
}

/// Indices of the vectors not dominated by any other, in input order.
pub fn non_dominated_indices(vs: &[IndicatorVector]) -> Vec<usize> {
    (0..vs.len())
        .filter(|&i| !vs.iter().any(|w| dominates(w, &vs[i])))
        .collect()
}

/// The non-dominated subset, in input order. Equal vectors are all kept.
pub fn non_dominated_filter(vs: &[IndicatorVector]) -> Vec<IndicatorVector> {
    non_dominated_indices(vs)
        .into_iter()
        .map(|i| vs[i].clone())
        .collect()
}

/// Peels up to `layers` successive non-dominated fronts. Returns the front
/// index (0-based) of each selected input index, in input order.
pub fn peel_fronts(vs: &[IndicatorVector], layers: usize) -> Vec<(usize, usize)> {
    let mut remaining: Vec<usize> = (0..vs.len()).collect();
    let mut assigned = Vec::new();
    for layer in 0..layers {
        if remaining.is_empty() {
            break;
        }
        let subset: Vec<IndicatorVector> = remaining.iter().map(|&i| vs[i].clone()).collect();
        let front = non_dominated_indices(&subset);
        let front_set: Vec<usize> = front.iter().map(|&k| remaining[k]).collect();
        assigned.extend(front_set.iter().map(|&i| (i, layer)));
        remaining.retain(|i| !front_set.contains(i));
    }
    assigned.sort_unstable();
    assigned
}
