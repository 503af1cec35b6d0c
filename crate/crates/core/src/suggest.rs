//! Query classification and the two suggestion routes.
//!
//! Queries that are vertices of the click graph are answered directly from
//! their co-click neighbors. Queries the graph has never seen are bridged:
//! their centroid finds the `m` most similar in-graph queries, whose co-click
//! neighbors are pooled with each bridge's contribution weighted by its
//! cosine similarity.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{query_centroid, CentroidIndex, EmbeddingError, EmbeddingModel};
use crate::graph::{top_k, ClickGraph, GraphError, DEFAULT_TOP_K};
use crate::ingest::{normalize, LongTailRule, NormalizationRules};

pub const DEFAULT_BRIDGES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryKind {
    ClickExisting,
    ClickAbsent,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::ClickExisting => "existing",
            QueryKind::ClickAbsent => "absent",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryClass {
    pub kind: QueryKind,
    pub long_tail: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    GraphDirect,
    EmbeddingBridge,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::GraphDirect => "graph",
            Route::EmbeddingBridge => "bridge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuggestWarning {
    /// No query token has an embedding.
    NoCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub query_key: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionList {
    pub source_query: String,
    pub class: QueryClass,
    pub via: Route,
    pub items: Vec<Suggestion>,
    /// Bridge queries with their cosine similarity, when the embedding path ran.
    pub similar: Vec<(String, f64)>,
    pub warning: Option<SuggestWarning>,
    /// Graph items were followed by bridge items (long-tail enrichment).
    pub enriched: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuggestError {
    #[error("query normalizes to no tokens")]
    Unclassifiable,
    #[error("query {query:?} must go through the {expected:?} route")]
    WrongPath { query: String, expected: Route },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestOptions {
    /// Bridge queries used for click-absent queries.
    pub m: usize,
    pub k: usize,
    /// Append bridge items after graph items for long-tail click-existing queries.
    pub enrich_long_tail: bool,
}

impl Default for SuggestOptions {
    fn default() -> Self {
        Self {
            m: DEFAULT_BRIDGES,
            k: DEFAULT_TOP_K,
            enrich_long_tail: false,
        }
    }
}

/// Click totals come from the graph: a query with any click is a vertex, so
/// every non-vertex has zero clicks.
pub fn classify<S: AsRef<str>>(
    tokens: &[S],
    graph: &ClickGraph,
    rule: LongTailRule,
) -> Result<QueryClass, SuggestError> {
    if tokens.is_empty() {
        return Err(SuggestError::Unclassifiable);
    }
    let key = join_key(tokens);
    let kind = if graph.contains_query(&key) {
        QueryKind::ClickExisting
    } else {
        QueryKind::ClickAbsent
    };
    Ok(QueryClass {
        kind,
        long_tail: rule.is_long_tail(tokens.len(), graph.total_clicks(&key)),
    })
}

fn join_key<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}

pub fn suggest_existing(
    graph: &ClickGraph,
    query_key: &str,
    k: usize,
    rule: LongTailRule,
) -> Result<SuggestionList, SuggestError> {
    if !graph.contains_query(query_key) {
        return Err(SuggestError::WrongPath {
            query: query_key.to_string(),
            expected: Route::EmbeddingBridge,
        });
    }
    let tokens: Vec<&str> = query_key.split(' ').collect();
    let class = classify(&tokens, graph, rule)?;
    let items = top_k(graph.connected_queries(query_key)?, k)
        .into_iter()
        .map(|c| Suggestion {
            query_key: c.query_key,
            score: c.score as f64,
        })
        .collect();
    Ok(SuggestionList {
        source_query: query_key.to_string(),
        class,
        via: Route::GraphDirect,
        items,
        similar: Vec::new(),
        warning: None,
        enriched: false,
    })
}

struct Bridged {
    similar: Vec<(String, f64)>,
    items: Vec<Suggestion>,
}

/// Pools the co-click neighbors of the `m` queries nearest to `tokens`:
/// `score(c) = Σ_s sim(s) · W(s, c)`. Returns `None` without coverage.
fn bridge(
    graph: &ClickGraph,
    model: &EmbeddingModel,
    index: &CentroidIndex,
    tokens: &[&str],
    m: usize,
) -> Result<Option<Bridged>, SuggestError> {
    let probe = match query_centroid(model, tokens, index.mode()) {
        Ok(c) => c,
        Err(EmbeddingError::NoCoverage) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let similar = index.nearest(&probe, m)?;
    let mut pooled: HashMap<String, f64> = HashMap::new();
    for (bridge_key, sim) in &similar {
        for cand in graph.connected_queries(bridge_key)? {
            if cand.query_key == probe.query_key {
                continue;
            }
            *pooled.entry(cand.query_key).or_insert(0.0) += sim * cand.score as f64;
        }
    }
    let mut items: Vec<Suggestion> = pooled
        .into_iter()
        .map(|(query_key, score)| Suggestion { query_key, score })
        .collect();
    sort_items(&mut items);
    Ok(Some(Bridged { similar, items }))
}

pub(crate) fn sort_items(items: &mut [Suggestion]) {
    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.query_key.cmp(&b.query_key))
    });
}

pub fn suggest_absent<S: AsRef<str>>(
    graph: &ClickGraph,
    model: &EmbeddingModel,
    index: &CentroidIndex,
    tokens: &[S],
    m: usize,
    k: usize,
    rule: LongTailRule,
) -> Result<SuggestionList, SuggestError> {
    let class = classify(tokens, graph, rule)?;
    let key = join_key(tokens);
    if class.kind == QueryKind::ClickExisting {
        return Err(SuggestError::WrongPath {
            query: key,
            expected: Route::GraphDirect,
        });
    }
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut list = SuggestionList {
        source_query: key,
        class,
        via: Route::EmbeddingBridge,
        items: Vec::new(),
        similar: Vec::new(),
        warning: None,
        enriched: false,
    };
    match bridge(graph, model, index, &tokens, m)? {
        Some(b) => {
            list.similar = b.similar;
            list.items = b.items;
            list.items.truncate(k);
        }
        None => list.warning = Some(SuggestWarning::NoCoverage),
    }
    Ok(list)
}

/// Everything needed to answer suggestion requests. Immutable once built.
#[derive(Debug, Clone)]
pub struct Engine {
    pub graph: ClickGraph,
    pub model: EmbeddingModel,
    pub index: CentroidIndex,
    pub rules: NormalizationRules,
    pub long_tail: LongTailRule,
}

impl Engine {
    pub fn classify_text(&self, text: &str) -> Result<(Vec<String>, QueryClass), SuggestError> {
        let tokens = normalize(text, &self.rules).tokens;
        let class = classify(&tokens, &self.graph, self.long_tail)?;
        Ok((tokens, class))
    }

    /// Normalize, classify and route.
    pub fn suggest(&self, text: &str, opts: SuggestOptions) -> Result<SuggestionList, SuggestError> {
        let (tokens, class) = self.classify_text(text)?;
        self.suggest_tokens(&tokens, class, opts)
    }

    /// Routes an already-normalized query.
    pub fn suggest_key(&self, key: &str, opts: SuggestOptions) -> Result<SuggestionList, SuggestError> {
        let tokens: Vec<String> = key.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
        let class = classify(&tokens, &self.graph, self.long_tail)?;
        self.suggest_tokens(&tokens, class, opts)
    }

    fn suggest_tokens(
        &self,
        tokens: &[String],
        class: QueryClass,
        opts: SuggestOptions,
    ) -> Result<SuggestionList, SuggestError> {
        match class.kind {
            QueryKind::ClickAbsent => suggest_absent(
                &self.graph,
                &self.model,
                &self.index,
                tokens,
                opts.m,
                opts.k,
                self.long_tail,
            ),
            QueryKind::ClickExisting => {
                let key = join_key(tokens);
                let mut list = suggest_existing(&self.graph, &key, opts.k, self.long_tail)?;
                if opts.enrich_long_tail && class.long_tail && list.items.len() < opts.k {
                    self.enrich(&mut list, tokens, opts)?;
                }
                Ok(list)
            }
        }
    }

    fn enrich(&self, list: &mut SuggestionList, tokens: &[String], opts: SuggestOptions) -> Result<(), SuggestError> {
        let tokens: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let bridged = match bridge(&self.graph, &self.model, &self.index, &tokens, opts.m) {
            Ok(Some(b)) => b,
            Ok(None) | Err(SuggestError::Embedding(EmbeddingError::EmptyIndex)) => return Ok(()),
            Err(e) => return Err(e),
        };
        list.similar = bridged.similar;
        for item in bridged.items {
            if list.items.len() >= opts.k {
                break;
            }
            if item.query_key != list.source_query
                && !list.items.iter().any(|i| i.query_key == item.query_key)
            {
                list.items.push(item);
                list.enriched = true;
            }
        }
        Ok(())
    }
}
