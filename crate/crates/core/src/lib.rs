//! Query suggestion from search click logs.
//!
//! The pipeline aggregates a click log into query–document pairs
//! ([`ingest`]), builds a bipartite click graph from the clicked pairs
//! ([`graph`]), trains CBOW word embeddings on the whole log
//! ([`embeddings`]) and answers queries either from co-click neighbors or,
//! for queries without clicks, through their nearest in-graph queries
//! ([`suggest`]). Built engines persist to a directory of artifacts
//! ([`store`]); [`eval`] aggregates human relevance annotations.

pub mod embeddings;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod store;
pub mod suggest;

pub use embeddings::{CbowConfig, CentroidIndex, CentroidMode, EmbeddingModel};
pub use graph::{Candidate, ClickGraph};
pub use ingest::{NormalizationRules, QueryDocPair};
pub use suggest::{Engine, QueryClass, QueryKind, Route, SuggestOptions, SuggestionList};
