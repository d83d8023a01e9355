//! Synthetic corpora, designed fixtures and brute-force oracles for testing
//! the transitflow pipeline.

pub mod corpus;
pub mod fixtures;
pub mod oracle;
pub mod truth;

pub use corpus::{build_acceptance_corpus, AcceptanceCorpus, CorpusConfig, CorpusError};
pub use fixtures::{detour_fixture, loop_trip_fixture, Fixture};
pub use truth::{GroundTruth, TruthLabel};
