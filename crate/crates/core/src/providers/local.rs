use super::{sentinel_epoch, CountProvider, CountRecord};
use crate::corpus::CorpusIndex;
use crate::error::ProviderError;
use crate::query::Query;

/// Exact counts from an in-memory corpus index.
#[derive(Debug, Clone)]
pub struct LocalProvider {
    index: CorpusIndex,
}

impl LocalProvider {
    pub fn new(index: CorpusIndex) -> Self {
        LocalProvider { index }
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }
}

impl CountProvider for LocalProvider {
    fn source_id(&self) -> &str {
        "local"
    }

    fn get_count(&self, query: &Query) -> Result<CountRecord, ProviderError> {
        Ok(CountRecord::new(
            query.clone(),
            self.index.count(query),
            self.source_id(),
            sentinel_epoch(),
        ))
    }
}
