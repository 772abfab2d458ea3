use std::collections::{BTreeMap, HashMap};

use crate::schema::{Platform, RepoRecord};

/// Preference among collaboration platforms when the same project is
/// mirrored on several. Higher wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformPriority(BTreeMap<Platform, u32>);

impl PlatformPriority {
    pub fn new(priorities: BTreeMap<Platform, u32>) -> Self {
        PlatformPriority(priorities)
    }

    pub fn of(&self, p: Platform) -> u32 {
        self.0.get(&p).copied().unwrap_or(0)
    }
}

impl Default for PlatformPriority {
    /// Ordered by how many repositories each platform hosts.
    fn default() -> Self {
        PlatformPriority(
            [
                (Platform::Github, 5),
                (Platform::Gitlab, 4),
                (Platform::Bitbucket, 3),
                (Platform::Sourceforge, 2),
                (Platform::Launchpad, 1),
            ]
            .into_iter()
            .collect(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DedupeOutcome {
    pub kept: Vec<RepoRecord>,
    /// `(kept copy, dropped mirror)` pairs.
    pub duplicates: Vec<(RepoRecord, RepoRecord)>,
}

fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Flags cross-platform mirrors: records on different platforms whose
/// case-folded, whitespace-collapsed names and descriptions are both equal and
/// non-empty. Within a group the copies on the highest-priority platform are
/// kept (all of them; same-platform records are never mirrors of each other)
/// and copies elsewhere are reported as duplicates of the first kept copy.
pub fn dedupe_mirrors(records: &[RepoRecord], priority: &PlatformPriority) -> DedupeOutcome {
    let mut groups: HashMap<(String, String), Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let (name, desc) = (fold(&r.name), fold(&r.description));
        if !name.is_empty() && !desc.is_empty() {
            groups.entry((name, desc)).or_default().push(i);
        }
    }

    // Index of a dropped record -> index of the copy it duplicates.
    let mut dropped: BTreeMap<usize, usize> = BTreeMap::new();
    for members in groups.values() {
        let best = members
            .iter()
            .map(|&i| priority.of(records[i].platform))
            .max()
            .unwrap_or(0);
        let Some(&keeper) = members
            .iter()
            .find(|&&i| priority.of(records[i].platform) == best)
        else {
            continue;
        };
        let keeper_platform = records[keeper].platform;
        for &i in members {
            if records[i].platform != keeper_platform {
                dropped.insert(i, keeper);
            }
        }
    }

    let mut out = DedupeOutcome::default();
    for (i, r) in records.iter().enumerate() {
        match dropped.get(&i) {
            Some(&k) => {
                log::info!(
                    "{}/{} mirrors {}/{}",
                    r.platform,
                    r.repo_id,
                    records[k].platform,
                    records[k].repo_id
                );
                out.duplicates.push((records[k].clone(), r.clone()));
            }
            None => out.kept.push(r.clone()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::tests::record;

    fn rec(id: &str, platform: Platform, name: &str, desc: &str) -> RepoRecord {
        let mut r = record(id, "2018-01-01", "2018-01-02");
        r.platform = platform;
        r.name = name.into();
        r.description = desc.into();
        r
    }

    #[test]
    fn github_copy_wins() {
        let sf = rec("1", Platform::Sourceforge, "WeatherBot", "Posts  the weather");
        let gh = rec("2", Platform::Github, "weatherbot", "posts the Weather");
        let out = dedupe_mirrors(&[sf.clone(), gh.clone()], &PlatformPriority::default());
        assert_eq!(out.kept, vec![gh.clone()]);
        assert_eq!(out.duplicates, vec![(gh, sf)]);
    }

    #[test]
    fn different_descriptions_are_kept() {
        let a = rec("1", Platform::Sourceforge, "bot", "one");
        let b = rec("2", Platform::Github, "bot", "two");
        let out = dedupe_mirrors(&[a, b], &PlatformPriority::default());
        assert_eq!(out.kept.len(), 2);
        assert!(out.duplicates.is_empty());
    }

    #[test]
    fn empty_descriptions_are_kept() {
        let a = rec("1", Platform::Sourceforge, "bot", "");
        let b = rec("2", Platform::Github, "bot", " ");
        let out = dedupe_mirrors(&[a, b], &PlatformPriority::default());
        assert_eq!(out.kept.len(), 2);
    }

    #[test]
    fn same_platform_twins_are_not_mirrors() {
        let a = rec("1", Platform::Github, "bot", "same");
        let b = rec("2", Platform::Github, "bot", "same");
        let c = rec("3", Platform::Gitlab, "bot", "same");
        let out = dedupe_mirrors(&[a.clone(), b.clone(), c.clone()], &PlatformPriority::default());
        assert_eq!(out.kept, vec![a.clone(), b]);
        assert_eq!(out.duplicates, vec![(a, c)]);
    }

    #[test]
    fn custom_priority() {
        let a = rec("1", Platform::Gitlab, "bot", "same");
        let b = rec("2", Platform::Github, "bot", "same");
        let prio = PlatformPriority::new([(Platform::Gitlab, 9), (Platform::Github, 1)].into_iter().collect());
        let out = dedupe_mirrors(&[a.clone(), b], &prio);
        assert_eq!(out.kept, vec![a]);
    }
}
