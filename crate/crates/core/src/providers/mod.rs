//! Sources of document counts.
//!
//! Every source answers the same question, "how many documents match this
//! query", and returns a [`CountRecord`] stamped with where and when the
//! count was observed. Records share one newline-delimited JSON layout:
//!
//! ```text
//! {"q":"\"pet fish\" guppy","n":37900,"src":"table1","t":"2010-05-04T00:00:00Z"}
//! ```

mod cache;
mod fixture;
mod local;
mod web;

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SubsecRound, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::ProviderError;
use crate::model::Count;
use crate::query::Query;

pub use cache::{cache_get, cache_put, CountCache};
pub use fixture::{FixtureProvider, FixtureTable};
pub use local::LocalProvider;
pub use web::{
    Clock, HttpResponse, ReqwestTransport, SystemClock, Transport, WebConfig, WebProvider,
};

/// One observed count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    #[serde(rename = "q")]
    pub query: Query,
    #[serde(rename = "n")]
    pub count: Count,
    #[serde(rename = "src")]
    pub source_id: String,
    #[serde(rename = "t", with = "utc_seconds")]
    pub observed_at: DateTime<Utc>,
}

impl CountRecord {
    pub fn new(query: Query, count: Count, source_id: &str, observed_at: DateTime<Utc>) -> Self {
        CountRecord {
            query,
            count,
            source_id: source_id.to_string(),
            observed_at: observed_at.trunc_subsecs(0),
        }
    }

    pub fn canonical(&self) -> String {
        self.query.canonical()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("count records always serialize")
    }
}

/// Timestamp used for records that were not observed at a meaningful time
/// (fixtures built by hand, local corpora).
pub fn sentinel_epoch() -> DateTime<Utc> {
    Utc.timestamp_opt(0, 0).unwrap()
}

mod utc_seconds {
    use chrono::{DateTime, NaiveDateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format(FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        if let Ok(naive) = NaiveDateTime::parse_from_str(&raw, FORMAT) {
            return Ok(naive.and_utc());
        }
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

pub trait CountProvider: Send + Sync {
    fn source_id(&self) -> &str;

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError>;
}

impl<P: CountProvider + ?Sized> CountProvider for &P {
    fn source_id(&self) -> &str {
        (**self).source_id()
    }

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError> {
        (**self).get_count(query)
    }
}

impl<P: CountProvider + ?Sized> CountProvider for Box<P> {
    fn source_id(&self) -> &str {
        (**self).source_id()
    }

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError> {
        (**self).get_count(query)
    }
}

/// Parses newline-delimited records. Blank lines and lines starting with `#`
/// are skipped.
pub(crate) fn parse_records(path: &Path, text: &str) -> Result<Vec<CountRecord>, ProviderError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record: CountRecord =
            serde_json::from_str(line).map_err(|e| ProviderError::StorageFailure {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", i + 1),
            })?;
        out.push(record);
    }
    Ok(out)
}

/// Fetches every query (first occurrence order, duplicates dropped) and writes
/// the results as a fixture file.
pub fn record_fixture<P: CountProvider + ?Sized>(
    provider: &P,
    queries: &[Query],
    out: &Path,
) -> Result<FixtureTable, ProviderError> {
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for q in queries {
        if !seen.insert(q.canonical()) {
            continue;
        }
        let record = provider
            .get_count(q)
            .map_err(|source| ProviderError::Annotated {
                query: q.canonical(),
                source: Box::new(source),
            })?;
        records.push(record);
    }

    let storage = |reason: String| ProviderError::StorageFailure {
        path: out.to_path_buf(),
        reason,
    };
    let mut body = String::new();
    for r in &records {
        body.push_str(&r.to_json_line());
        body.push('\n');
    }
    let tmp = out.with_extension("jsonl.tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| storage(e.to_string()))?;
    file.write_all(body.as_bytes())
        .and_then(|_| file.sync_all())
        .map_err(|e| storage(e.to_string()))?;
    fs::rename(&tmp, out).map_err(|e| storage(e.to_string()))?;

    FixtureTable::from_records(records)
}
