//! Meaning bounds between words from document co-occurrence counts, and
//! detection of exemplars whose association with a conjunction of two
//! concepts exceeds their association with either concept alone.
//!
//! The pipeline: a [`providers::CountProvider`] answers document-count
//! [`query::Query`]s; [`analysis::run_study`] turns those counts into
//! corrected relative weights, meaning bounds and verdicts using the pure
//! arithmetic in [`model`]; [`report`] renders the result.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod model;
pub mod providers;
pub mod query;
pub mod report;

/// Raw counts of the reference pet / fish study, in fixture format.
pub const TABLE1_FIXTURE: &str = include_str!("../data/table1.jsonl");

/// The reference fixture as a ready-to-use provider.
pub fn table1_provider() -> providers::FixtureProvider {
    let table =
        providers::FixtureTable::parse(std::path::Path::new("table1.jsonl"), TABLE1_FIXTURE)
            .expect("bundled fixture parses");
    providers::FixtureProvider::new(table)
}
