use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{parse_records, CountProvider, CountRecord};
use crate::error::ProviderError;
use crate::query::Query;

/// Recorded counts keyed by canonical query string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureTable {
    entries: BTreeMap<String, CountRecord>,
}

impl FixtureTable {
    pub fn from_records(records: Vec<CountRecord>) -> Result<Self, ProviderError> {
        let mut entries = BTreeMap::new();
        for r in records {
            let key = r.canonical();
            if entries.insert(key.clone(), r).is_some() {
                return Err(ProviderError::Config(format!(
                    "fixture lists `{key}` more than once"
                )));
            }
        }
        Ok(FixtureTable { entries })
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, ProviderError> {
        Self::from_records(parse_records(path, text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path).map_err(|e| ProviderError::StorageFailure {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(path, &text)
    }

    pub fn get(&self, canonical: &str) -> Option<&CountRecord> {
        self.entries.get(canonical)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &CountRecord> {
        self.entries.values()
    }
}

/// Replays a [`FixtureTable`]. Unknown queries are errors, never zero.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    table: FixtureTable,
    source_id: String,
}

impl FixtureProvider {
    pub fn new(table: FixtureTable) -> Self {
        FixtureProvider {
            table,
            source_id: "fixture".into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        Ok(Self::new(FixtureTable::load(path)?))
    }

    pub fn table(&self) -> &FixtureTable {
        &self.table
    }
}

impl CountProvider for FixtureProvider {
    fn source_id(&self) -> &str {
        &self.source_id
    }

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError> {
        let key = query.canonical();
        self.table
            .get(&key)
            .cloned()
            .ok_or(ProviderError::MissingFixtureEntry(key))
    }
}
