//! Prefix-aware LRU cache over classifier results.
//!
//! Tenants create disks in batches under one project/VM context with disk
//! names differing only by a suffix, so a lookup matches any entry with the
//! same project and VM whose disk name shares a long enough common prefix
//! (LCP length over new-name length at least the threshold). Hits refresh
//! the matched entry's recency; eviction is least-recently-used.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

use super::{SemanticResult, SemanticSource};

/// Default entry bound.
pub const DEFAULT_CACHE_CAPACITY: usize = 10_000;

/// Length of the longest common prefix over the new name's length,
/// counted in Unicode scalar values.
pub fn lcp_ratio(d_new: &str, d_cached: &str) -> Result<f64> {
    if d_new.is_empty() {
        return Err(Error::data("lcp ratio undefined for an empty new disk name"));
    }
    let lcp = d_new
        .chars()
        .zip(d_cached.chars())
        .take_while(|(a, b)| a == b)
        .count();
    Ok(lcp as f64 / d_new.chars().count() as f64)
}

/// One cached semantic inference.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub project: String,
    pub vm: String,
    pub disk_name: String,
    pub result: SemanticResult,
    pub recency: u64,
}

/// Bounded LRU store indexed by (project, vm) scope.
pub struct PrefixCache {
    capacity: usize,
    next_recency: u64,
    next_id: u64,
    entries: HashMap<u64, CacheEntry>,
    by_recency: BTreeMap<u64, u64>,
    by_scope: HashMap<(String, String), Vec<u64>>,
}

impl PrefixCache {
    pub fn new(capacity: usize) -> Self {
        PrefixCache {
            capacity: capacity.max(1),
            next_recency: 0,
            next_id: 0,
            entries: HashMap::new(),
            by_recency: BTreeMap::new(),
            by_scope: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn bump(&mut self, id: u64) {
        let entry = self.entries.get_mut(&id).expect("live entry");
        self.by_recency.remove(&entry.recency);
        entry.recency = self.next_recency;
        self.by_recency.insert(entry.recency, id);
        self.next_recency += 1;
    }

    /// Most-recently-used scope entry whose disk name clears the LCP
    /// threshold. A hit refreshes that entry's recency.
    pub fn lookup(&mut self, project: &str, vm: &str, disk: &str, lcp_threshold: f64) -> Option<SemanticResult> {
        if disk.is_empty() {
            return None;
        }
        let scope = (project.to_string(), vm.to_string());
        let ids = self.by_scope.get(&scope)?;
        let mut best: Option<(u64, u64)> = None; // (recency, id)
        for id in ids {
            let entry = &self.entries[id];
            let ratio = lcp_ratio(disk, &entry.disk_name).expect("non-empty disk name");
            if ratio >= lcp_threshold && best.is_none_or(|(r, _)| entry.recency > r) {
                best = Some((entry.recency, *id));
            }
        }
        let (_, id) = best?;
        self.bump(id);
        let result = self.entries[&id].result.clone();
        Some(SemanticResult { source: SemanticSource::CacheHit, ..result })
    }

    /// Inserts a fresh classifier result, evicting the LRU entry past
    /// capacity. Filtered results and cache hits are never inserted.
    pub fn insert(&mut self, project: &str, vm: &str, disk: &str, result: SemanticResult) {
        assert_eq!(
            result.source,
            SemanticSource::Classifier,
            "only classifier results are cached"
        );
        let id = self.next_id;
        self.next_id += 1;
        let recency = self.next_recency;
        self.next_recency += 1;
        self.entries.insert(
            id,
            CacheEntry {
                project: project.to_string(),
                vm: vm.to_string(),
                disk_name: disk.to_string(),
                result,
                recency,
            },
        );
        self.by_recency.insert(recency, id);
        self.by_scope
            .entry((project.to_string(), vm.to_string()))
            .or_default()
            .push(id);

        if self.entries.len() > self.capacity {
            let (_, victim) = self.by_recency.pop_first().expect("non-empty cache");
            let gone = self.entries.remove(&victim).expect("live victim");
            let scope = (gone.project, gone.vm);
            if let Some(ids) = self.by_scope.get_mut(&scope) {
                ids.retain(|i| *i != victim);
                if ids.is_empty() {
                    self.by_scope.remove(&scope);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::ApplicationClass;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn classified(label: ApplicationClass, confidence: f64) -> SemanticResult {
        SemanticResult { label, confidence, source: SemanticSource::Classifier }
    }

    #[test]
    fn lcp_ratio_fixtures() {
        // LCP "db-data-0" has length 9 over the 10-char new name
        assert_abs_diff_eq!(lcp_ratio("db-data-02", "db-data-01").unwrap(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(lcp_ratio("same", "same").unwrap(), 1.0);
        assert_abs_diff_eq!(lcp_ratio("abc", "xyz").unwrap(), 0.0);
        assert!(lcp_ratio("", "x").is_err());
    }

    #[test]
    fn lcp_ratio_counts_unicode_scalars() {
        assert_abs_diff_eq!(lcp_ratio("día-2", "día-1").unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn prefix_hit_within_scope() {
        let mut c = PrefixCache::new(10);
        c.insert("p", "v", "db-data-01", classified(ApplicationClass::Database, 0.75));
        let hit = c.lookup("p", "v", "db-data-02", 0.4).unwrap();
        assert_eq!(hit.label, ApplicationClass::Database);
        assert_eq!(hit.source, SemanticSource::CacheHit);
        assert_eq!(hit.confidence, 0.75);
    }

    #[test]
    fn different_project_misses() {
        let mut c = PrefixCache::new(10);
        c.insert("p", "v", "db-data-01", classified(ApplicationClass::Database, 0.75));
        assert!(c.lookup("other", "v", "db-data-02", 0.4).is_none());
        assert!(c.lookup("p", "other", "db-data-02", 0.4).is_none());
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let mut c = PrefixCache::new(10);
        c.insert("p", "v", "ab--------", classified(ApplicationClass::Database, 0.75));
        // ratio 0.3 < 0.4 misses; ratio exactly 0.4 hits
        assert!(c.lookup("p", "v", "abcxxxxxxx", 0.4).is_none());
        assert!(c.lookup("p", "v", "ab--xxxxxx", 0.4).is_some());
    }

    #[test]
    fn most_recent_matching_entry_wins() {
        let mut c = PrefixCache::new(10);
        c.insert("p", "v", "db-data-01", classified(ApplicationClass::Database, 0.7));
        c.insert("p", "v", "db-data-02", classified(ApplicationClass::Gaming, 0.8));
        let hit = c.lookup("p", "v", "db-data-03", 0.4).unwrap();
        assert_eq!(hit.label, ApplicationClass::Gaming);
    }

    #[test]
    fn lru_eviction_at_capacity() {
        let mut c = PrefixCache::new(2);
        c.insert("p", "v", "aaa-1", classified(ApplicationClass::Database, 0.7));
        c.insert("p", "v", "bbb-1", classified(ApplicationClass::Gaming, 0.7));
        // touch aaa so bbb becomes LRU
        assert!(c.lookup("p", "v", "aaa-2", 0.4).is_some());
        c.insert("p", "v", "ccc-1", classified(ApplicationClass::Travel, 0.7));
        assert_eq!(c.len(), 2);
        assert!(c.lookup("p", "v", "bbb-2", 0.4).is_none());
        assert!(c.lookup("p", "v", "aaa-2", 0.4).is_some());
        assert!(c.lookup("p", "v", "ccc-2", 0.4).is_some());
    }

    #[test]
    fn size_never_exceeds_capacity() {
        let mut c = PrefixCache::new(100);
        for i in 0..201 {
            c.insert("p", "v", &format!("disk-{i:04}"), classified(ApplicationClass::Database, 0.7));
        }
        assert_eq!(c.len(), 100);
    }

    proptest! {
        #[test]
        fn lcp_ratio_is_bounded(a in "[a-z0-9-]{1,24}", b in "[a-z0-9-]{0,24}") {
            let r = lcp_ratio(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!((lcp_ratio(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
