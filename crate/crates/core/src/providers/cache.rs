//! Append-only journal of [`CountRecord`]s.
//!
//! Records are only ever appended. On open it is replayed into a map holding
//! the most recent record per canonical query; later entries win ties.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, PoisonError, RwLock};

use super::CountRecord;
use crate::error::ProviderError;

pub struct CountCache {
    path: PathBuf,
    latest: RwLock<HashMap<String, CountRecord>>,
    journal: Mutex<File>,
}

impl std::fmt::Debug for CountCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CountCache")
            .field("path", &self.path)
            .finish()
    }
}

impl CountCache {
    /// Opens (creating if needed) the journal at `path` and replays it.
    ///
    /// A final line without its newline is an interrupted append and is
    /// truncated away; any other unparsable line is a storage failure.
    pub fn open(path: &Path) -> Result<Self, ProviderError> {
        let storage = |reason: String| ProviderError::StorageFailure {
            path: path.to_path_buf(),
            reason,
        };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(storage(e.to_string())),
        };
        let complete = match text.rfind('\n') {
            Some(end) => &text[..=end],
            None => "",
        };
        let mut latest = HashMap::new();
        for record in super::parse_records(path, complete)? {
            insert_latest(&mut latest, record);
        }
        if complete.len() != text.len() {
            // Cut the torn line so the next append starts on a fresh line.
            OpenOptions::new()
                .write(true)
                .open(path)
                .and_then(|f| f.set_len(complete.len() as u64))
                .map_err(|e| storage(e.to_string()))?;
        }
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| storage(e.to_string()))?;
        Ok(CountCache {
            path: path.to_path_buf(),
            latest: RwLock::new(latest),
            journal: Mutex::new(journal),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, canonical: &str) -> Option<CountRecord> {
        self.latest
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(canonical)
            .cloned()
    }

    pub fn put(&self, record: &CountRecord) -> Result<(), ProviderError> {
        let mut line = record.to_json_line();
        line.push('\n');
        // The journal lock is held across the map update so journal order and
        // in-memory resolution of same-timestamp ties always agree.
        let mut file = self.journal.lock().unwrap_or_else(PoisonError::into_inner);
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| ProviderError::StorageFailure {
                path: self.path.clone(),
                reason: e.to_string(),
            })?;
        insert_latest(
            &mut self.latest.write().unwrap_or_else(PoisonError::into_inner),
            record.clone(),
        );
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.latest
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn insert_latest(map: &mut HashMap<String, CountRecord>, record: CountRecord) {
    let key = record.canonical();
    match map.get(&key) {
        Some(existing) if existing.observed_at > record.observed_at => {}
        _ => {
            map.insert(key, record);
        }
    }
}

pub fn cache_get(cache: &CountCache, canonical: &str) -> Option<CountRecord> {
    cache.get(canonical)
}

pub fn cache_put(cache: &CountCache, record: &CountRecord) -> Result<(), ProviderError> {
    cache.put(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Count;
    use chrono::{TimeZone, Utc};

    fn rec(q: &str, n: u64, secs: i64) -> CountRecord {
        CountRecord::new(
            q.parse().unwrap(),
            Count::new(n).unwrap(),
            "web",
            Utc.timestamp_opt(secs, 0).unwrap(),
        )
    }

    #[test]
    fn empty_store_returns_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CountCache::open(&dir.path().join("c.jsonl")).unwrap();
        assert!(cache.get("pet").is_none());
        assert!(cache.is_empty());
    }

    #[test]
    fn put_then_get_round_trips_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let r = rec("\"pet fish\" -guppy", 1_710_000, 1_272_931_200);
        {
            let cache = CountCache::open(&path).unwrap();
            cache_put(&cache, &r).unwrap();
            assert_eq!(cache_get(&cache, &r.canonical()), Some(r.clone()));
        }
        let reopened = CountCache::open(&path).unwrap();
        assert_eq!(reopened.get(&r.canonical()), Some(r));
    }

    #[test]
    fn most_recent_record_wins_and_history_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = CountCache::open(&path).unwrap();
        cache.put(&rec("pet", 2, 200)).unwrap();
        cache.put(&rec("pet", 1, 100)).unwrap();
        assert_eq!(cache.get("pet").unwrap().count.get(), 2);
        cache.put(&rec("pet", 3, 300)).unwrap();
        assert_eq!(cache.get("pet").unwrap().count.get(), 3);
        drop(cache);

        let lines = fs::read_to_string(&path).unwrap();
        assert_eq!(lines.lines().count(), 3);
        assert_eq!(
            CountCache::open(&path)
                .unwrap()
                .get("pet")
                .unwrap()
                .count
                .get(),
            3
        );
    }

    #[test]
    fn torn_final_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let good = rec("pet", 5, 10).to_json_line();
        fs::write(&path, format!("{good}\n{{\"q\":\"fi")).unwrap();
        let cache = CountCache::open(&path).unwrap();
        assert_eq!(cache.get("pet").unwrap().count.get(), 5);
        cache.put(&rec("fish", 7, 11)).unwrap();
        drop(cache);
        let cache = CountCache::open(&path).unwrap();
        assert_eq!(cache.get("fish").unwrap().count.get(), 7);
    }

    #[test]
    fn corrupt_interior_line_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(&path, "not json\n").unwrap();
        assert!(matches!(
            CountCache::open(&path),
            Err(ProviderError::StorageFailure { .. })
        ));
    }

    #[test]
    fn concurrent_appends_all_land() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = CountCache::open(&path).unwrap();
        std::thread::scope(|s| {
            for t in 0..8u64 {
                let cache = &cache;
                s.spawn(move || {
                    for i in 0..25u64 {
                        cache.put(&rec(&format!("w{t}x{i}"), i, 1)).unwrap();
                    }
                });
            }
        });
        assert_eq!(cache.len(), 200);
        drop(cache);
        assert_eq!(CountCache::open(&path).unwrap().len(), 200);
    }
}
