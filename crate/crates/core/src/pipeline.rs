//! Offline build: pairs → graph → embeddings → centroid index → suggestion table.

use thiserror::Error;

use crate::embeddings::{
    train_cbow_with_report, CbowConfig, CentroidIndex, CentroidMode, EmbeddingError, TrainingReport,
};
use crate::graph::{ClickGraph, GraphError};
use crate::ingest::{click_totals, training_corpus, LongTailRule, NormalizationRules, QueryDocPair};
use crate::store::{precompute_suggestions, SuggestionTable};
use crate::suggest::{Engine, SuggestOptions};

#[derive(Debug, Clone, Default)]
pub struct BuildConfig {
    pub cbow: CbowConfig,
    pub centroid_mode: CentroidMode,
    pub options: SuggestOptions,
    pub long_tail: LongTailRule,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("graph stage: {0}")]
    Graph(#[from] GraphError),
    #[error("embedding stage: {0}")]
    Embeddings(#[from] EmbeddingError),
}

impl BuildError {
    pub fn stage(&self) -> &'static str {
        match self {
            BuildError::Graph(_) => "graph",
            BuildError::Embeddings(_) => "embeddings",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltEngine {
    pub engine: Engine,
    pub table: SuggestionTable,
    /// Graph queries with no in-vocabulary token, hence absent from the index.
    pub uncovered_graph_queries: Vec<String>,
    /// Observed queries with zero total clicks.
    pub absent_queries: Vec<String>,
    pub training: TrainingReport,
}

pub fn build_engine(
    pairs: &[QueryDocPair],
    rules: NormalizationRules,
    config: &BuildConfig,
) -> Result<BuiltEngine, BuildError> {
    let graph = ClickGraph::build(pairs)?;
    let (model, training) = train_cbow_with_report(training_corpus(pairs), &config.cbow)?;
    let (index, uncovered) = CentroidIndex::build(
        &model,
        graph.queries().iter().map(String::as_str),
        config.centroid_mode,
    );
    if !uncovered.is_empty() {
        log::info!("{} graph queries have no embedded token", uncovered.len());
    }
    let engine = Engine {
        graph,
        model,
        index,
        rules,
        long_tail: config.long_tail,
    };
    let absent_queries: Vec<String> = click_totals(pairs)
        .into_iter()
        .filter(|(_, clicks)| *clicks == 0)
        .map(|(q, _)| q)
        .collect();
    let table = precompute_suggestions(&engine, &absent_queries, config.options);
    Ok(BuiltEngine {
        engine,
        table,
        uncovered_graph_queries: uncovered,
        absent_queries,
        training,
    })
}
