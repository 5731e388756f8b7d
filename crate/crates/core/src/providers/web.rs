//! Hit-count client for a generic search API.
//!
//! The endpoint is a URL template with a `{query}` placeholder; the total-hits
//! estimate is pulled out of the JSON response by a dotted field path such as
//! `searchInformation.totalResults`. Outbound requests go through a single
//! rate-limited dispatch point, and every fetched count is appended to the
//! cache journal when one is configured.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, PoisonError};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;
use serde_json::Value;

use super::{CountCache, CountProvider, CountRecord};
use crate::error::ProviderError;
use crate::model::Count;
use crate::query::Query;

/// RFC 3986 unreserved characters stay literal.
const QUERY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

fn default_api_key_header() -> String {
    "X-API-Key".into()
}

fn default_source_id() -> String {
    "web".into()
}

fn default_interval_ms() -> u64 {
    1000
}

fn default_retries() -> u32 {
    3
}

fn default_timeout_ms() -> u64 {
    30_000
}

/// Web provider settings, usually read from a TOML file:
///
/// ```toml
/// endpoint_url = "https://search.example.com/v1/count?q={query}"
/// api_key_env_name = "SEARCH_API_KEY"
/// count_field_path = "totalResults"
/// min_request_interval_ms = 1000
/// max_retries = 3
/// cache_path = "counts.jsonl"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WebConfig {
    pub endpoint_url: String,
    #[serde(default)]
    pub api_key_env_name: Option<String>,
    #[serde(default = "default_api_key_header")]
    pub api_key_header: String,
    pub count_field_path: String,
    #[serde(default = "default_interval_ms")]
    pub min_request_interval_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_source_id")]
    pub source_id: String,
    /// Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
}

impl WebConfig {
    pub fn from_toml(text: &str) -> Result<Self, ProviderError> {
        let config: WebConfig =
            toml::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(cache), Some(dir)) = (&config.cache_path, path.parent()) {
            if cache.is_relative() {
                config.cache_path = Some(dir.join(cache));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if !self.endpoint_url.contains("{query}") {
            return Err(ProviderError::Config(
                "endpoint_url needs a {query} placeholder".into(),
            ));
        }
        if self.min_request_interval_ms == 0 {
            return Err(ProviderError::Config(
                "min_request_interval_ms must be positive".into(),
            ));
        }
        if self.count_field_path.trim().is_empty() {
            return Err(ProviderError::Config("count_field_path is empty".into()));
        }
        Ok(())
    }

    pub fn min_request_interval(&self) -> Duration {
        Duration::from_millis(self.min_request_interval_ms)
    }

    pub fn request_url(&self, query: &Query) -> String {
        let encoded = utf8_percent_encode(&query.canonical(), QUERY_ENCODE).to_string();
        self.endpoint_url.replace("{query}", &encoded)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking HTTP GET. `Err` means the request never produced a response.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, String> {
        let mut req = self.client.get(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Time source for rate limiting and record timestamps.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn monotonic(&self) -> Duration;
    fn sleep(&self, d: Duration);
    fn utc_now(&self) -> DateTime<Utc>;
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn monotonic(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }

    fn utc_now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

pub struct WebProvider {
    config: WebConfig,
    api_key: Option<String>,
    transport: Box<dyn Transport>,
    clock: Arc<dyn Clock>,
    cache: Option<CountCache>,
    /// Monotonic time of the last request sent; the lock is the dispatch point.
    last_request: Mutex<Option<Duration>>,
}

impl WebProvider {
    /// Real HTTP transport, system clock, and the cache from the config.
    pub fn from_config(config: WebConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let transport = ReqwestTransport::new(Duration::from_millis(config.timeout_ms))?;
        let cache = config
            .cache_path
            .as_deref()
            .map(CountCache::open)
            .transpose()?;
        let api_key = read_api_key(&config)?;
        Ok(Self::with_parts(
            config,
            api_key,
            Box::new(transport),
            Arc::new(SystemClock::default()),
            cache,
        ))
    }

    pub fn with_parts(
        config: WebConfig,
        api_key: Option<String>,
        transport: Box<dyn Transport>,
        clock: Arc<dyn Clock>,
        cache: Option<CountCache>,
    ) -> Self {
        WebProvider {
            config,
            api_key,
            transport,
            clock,
            cache,
            last_request: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &WebConfig {
        &self.config
    }

    pub fn cache(&self) -> Option<&CountCache> {
        self.cache.as_ref()
    }

    /// Like [`CountProvider::get_count`]; `force_refresh` skips the cache
    /// lookup (the new record is still journaled).
    pub fn fetch(&self, query: &Query, force_refresh: bool) -> Result<CountRecord, ProviderError> {
        let key = query.canonical();
        if !force_refresh {
            if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
                return Ok(hit);
            }
        }
        let count = self.dispatch(query)?;
        let record = CountRecord::new(
            query.clone(),
            count,
            &self.config.source_id,
            self.clock.utc_now(),
        );
        if let Some(cache) = &self.cache {
            cache.put(&record)?;
        }
        Ok(record)
    }

    fn dispatch(&self, query: &Query) -> Result<Count, ProviderError> {
        let key = query.canonical();
        let url = self.config.request_url(query);
        let headers: Vec<(String, String)> = self
            .api_key
            .iter()
            .map(|k| (self.config.api_key_header.clone(), k.clone()))
            .collect();
        let interval = self.config.min_request_interval();

        let mut last = self
            .last_request
            .lock()
            .unwrap_or_else(PoisonError::into_inner);
        let mut failure = String::new();
        for attempt in 0..=self.config.max_retries {
            // Back off on retries: interval, 2x, 4x, ...
            let spacing = interval * 2u32.saturating_pow(attempt.min(16));
            if let Some(prev) = *last {
                let ready = prev + if attempt == 0 { interval } else { spacing };
                let now = self.clock.monotonic();
                if now < ready {
                    self.clock.sleep(ready - now);
                }
            }
            *last = Some(self.clock.monotonic());

            match self.transport.get(&url, &headers) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    return extract_count(&resp.body, &self.config.count_field_path).map_err(
                        |reason| ProviderError::MalformedResponse {
                            query: key.clone(),
                            reason,
                        },
                    );
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    failure = format!("HTTP {}", resp.status);
                }
                Ok(resp) => {
                    return Err(ProviderError::TransportFailure {
                        query: key,
                        reason: format!("HTTP {}", resp.status),
                    })
                }
                Err(e) => failure = e,
            }
        }
        Err(ProviderError::TransportFailure {
            query: key,
            reason: format!(
                "{failure} (gave up after {} attempts)",
                self.config.max_retries + 1
            ),
        })
    }
}

impl CountProvider for WebProvider {
    fn source_id(&self) -> &str {
        &self.config.source_id
    }

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError> {
        self.fetch(query, false)
    }
}

fn read_api_key(config: &WebConfig) -> Result<Option<String>, ProviderError> {
    match &config.api_key_env_name {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| ProviderError::Config(format!("environment variable {name} is not set"))),
    }
}

/// Follows a dotted path (numeric segments index arrays) and reads a
/// non-negative integer, accepting numeric strings such as `"1,290,000"`.
pub(crate) fn extract_count(body: &str, path: &str) -> Result<Count, String> {
    let root: Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
    let mut node = &root;
    for seg in path.split('.') {
        node = match node {
            Value::Object(map) => map.get(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
            _ => None,
        }
        .ok_or_else(|| format!("field `{path}` not found (at `{seg}`)"))?;
    }
    let raw = match node {
        Value::Number(n) => n
            .as_u64()
            .ok_or_else(|| format!("`{path}` is not a non-negative integer: {n}"))?,
        Value::String(s) => {
            let digits: String = s
                .chars()
                .filter(|c| !matches!(c, ',' | '_' | ' '))
                .collect();
            digits
                .parse::<u64>()
                .map_err(|_| format!("`{path}` is not an integer: {s:?}"))?
        }
        other => return Err(format!("`{path}` has unexpected type: {other}")),
    };
    Count::new(raw).map_err(|e| e.to_string())
}
