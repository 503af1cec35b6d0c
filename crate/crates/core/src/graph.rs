//! Weighted bipartite query–document click graph and co-click scoring.
//!
//! Documents are identified by their normalized titles. Two queries are
//! related when they share at least one clicked document; their score is the
//! sum, over shared documents, of the product of the two click counts.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::QueryDocPair;

/// Co-click score type. Wide enough for `u64` click counts squared times any
/// realistic fan-out.
pub type Score = u128;

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("query {0:?} is not a vertex of the click graph")]
    UnknownQuery(String),
    #[error("duplicate pair ({query:?}, {doc:?}) in graph input")]
    DuplicatePair { query: String, doc: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub query_key: String,
    pub score: Score,
}

/// Ranking order: score descending, then key ascending (byte order).
pub fn rank_order(a_score: Score, a_key: &str, b_score: Score, b_key: &str) -> Ordering {
    b_score.cmp(&a_score).then_with(|| a_key.cmp(b_key))
}

/// Immutable bipartite graph. Query and document vertices are indexed in
/// sorted key order; adjacency lists are sorted by neighbor index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClickGraph {
    queries: Vec<String>,
    docs: Vec<String>,
    query_index: HashMap<String, u32>,
    query_adj: Vec<Vec<(u32, u64)>>,
    doc_adj: Vec<Vec<(u32, u64)>>,
}

impl ClickGraph {
    /// Builds the graph from clicked pairs; pairs with zero clicks are ignored.
    pub fn build(pairs: &[QueryDocPair]) -> Result<Self, GraphError> {
        Self::from_edges(
            pairs
                .iter()
                .filter(|p| p.click_count > 0)
                .map(|p| (p.query_key.as_str(), p.doc_key.as_str(), p.click_count)),
        )
    }

    /// Builds from `(query, doc, weight)` edges. Zero weights are skipped.
    pub fn from_edges<'a, I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let edges: Vec<(&str, &str, u64)> = edges.into_iter().filter(|e| e.2 > 0).collect();
        let queries: Vec<String> = edges
            .iter()
            .map(|e| e.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(String::from)
            .collect();
        let docs: Vec<String> = edges
            .iter()
            .map(|e| e.1)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(String::from)
            .collect();
        let query_index: HashMap<String, u32> = queries
            .iter()
            .enumerate()
            .map(|(i, q)| (q.clone(), i as u32))
            .collect();
        let doc_index: HashMap<&str, u32> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i as u32))
            .collect();

        let mut query_adj = vec![Vec::new(); queries.len()];
        let mut doc_adj = vec![Vec::new(); docs.len()];
        for (q, d, w) in &edges {
            let qi = query_index[*q];
            let di = doc_index[*d];
            query_adj[qi as usize].push((di, *w));
            doc_adj[di as usize].push((qi, *w));
        }
        for (qi, adj) in query_adj.iter_mut().enumerate() {
            adj.sort_unstable();
            if let Some(w) = adj.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(GraphError::DuplicatePair {
                    query: queries[qi].clone(),
                    doc: docs[w[0].0 as usize].clone(),
                });
            }
        }
        for adj in &mut doc_adj {
            adj.sort_unstable();
        }
        Ok(Self {
            queries,
            docs,
            query_index,
            query_adj,
            doc_adj,
        })
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_edges(&self) -> usize {
        self.query_adj.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Query keys in vertex order (sorted).
    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn contains_query(&self, key: &str) -> bool {
        self.query_index.contains_key(key)
    }

    fn vertex(&self, key: &str) -> Result<u32, GraphError> {
        self.query_index
            .get(key)
            .copied()
            .ok_or_else(|| GraphError::UnknownQuery(key.to_string()))
    }

    /// `(doc_key, weight)` for every clicked document of `query`.
    pub fn documents_of(&self, query: &str) -> Result<impl Iterator<Item = (&str, u64)>, GraphError> {
        let qi = self.vertex(query)?;
        Ok(self.query_adj[qi as usize]
            .iter()
            .map(|&(d, w)| (self.docs[d as usize].as_str(), w)))
    }

    /// All `(query, doc, weight)` edges in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.query_adj.iter().enumerate().flat_map(move |(qi, adj)| {
            adj.iter().map(move |&(di, w)| {
                (self.queries[qi].as_str(), self.docs[di as usize].as_str(), w)
            })
        })
    }

    /// Sum of edge weights of a query vertex, zero for non-vertices.
    pub fn total_clicks(&self, query: &str) -> u64 {
        self.query_index
            .get(query)
            .map(|&qi| self.query_adj[qi as usize].iter().map(|e| e.1).sum())
            .unwrap_or(0)
    }

    /// Sum over shared documents of the product of the two edge weights.
    pub fn coclick_score(&self, qa: &str, qb: &str) -> Result<Score, GraphError> {
        let a = &self.query_adj[self.vertex(qa)? as usize];
        let b = &self.query_adj[self.vertex(qb)? as usize];
        let (mut i, mut j, mut total) = (0, 0, 0 as Score);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    total += Score::from(a[i].1) * Score::from(b[j].1);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(total)
    }

    /// Every query sharing a document with `q`, ranked by co-click score.
    pub fn connected_queries(&self, q: &str) -> Result<Vec<Candidate>, GraphError> {
        let qi = self.vertex(q)?;
        let mut scores: HashMap<u32, Score> = HashMap::new();
        for &(di, w) in &self.query_adj[qi as usize] {
            for &(other, w2) in &self.doc_adj[di as usize] {
                if other != qi {
                    *scores.entry(other).or_insert(0) += Score::from(w) * Score::from(w2);
                }
            }
        }
        let mut out: Vec<Candidate> = scores
            .into_iter()
            .map(|(idx, score)| Candidate {
                query_key: self.queries[idx as usize].clone(),
                score,
            })
            .collect();
        out.sort_by(|a, b| rank_order(a.score, &a.query_key, b.score, &b.query_key));
        Ok(out)
    }

    /// Materializes `top_k(connected_queries(q), k)` for every query vertex,
    /// in vertex order.
    pub fn precompute_all(&self, k: usize) -> Vec<(String, Vec<Candidate>)> {
        self.queries
            .par_iter()
            .map(|q| {
                let ranked = self.connected_queries(q).expect("vertex of this graph");
                (q.clone(), top_k(ranked, k))
            })
            .collect()
    }
}

pub fn top_k(mut candidates: Vec<Candidate>, k: usize) -> Vec<Candidate> {
    candidates.truncate(k);
    candidates
}
