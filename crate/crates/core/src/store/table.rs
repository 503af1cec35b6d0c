//! Precomputed suggestion tables, serialized as `suggestions.tsv`:
//!
//! ```text
//! query_key<TAB>kind<TAB>rank<TAB>suggested_key<TAB>score
//! ```
//!
//! `kind` is `existing` or `absent` for suggestions and `similar` for the
//! bridge queries of a click-absent query. Ranks start at 1. An entry without
//! suggestions is a single rank-0 row with an empty key and a reason code in
//! the score column.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::suggest::{
    Engine, QueryKind, SuggestError, SuggestOptions, SuggestWarning, Suggestion, SuggestionList,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmptyReason {
    /// The query has no connected queries.
    NoCandidates,
    /// No query token has an embedding.
    NoCoverage,
    /// The centroid index was empty.
    EmptyIndex,
}

impl EmptyReason {
    pub fn code(self) -> &'static str {
        match self {
            EmptyReason::NoCandidates => "no-candidates",
            EmptyReason::NoCoverage => "no-coverage",
            EmptyReason::EmptyIndex => "empty-index",
        }
    }
}

impl FromStr for EmptyReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no-candidates" => Ok(EmptyReason::NoCandidates),
            "no-coverage" => Ok(EmptyReason::NoCoverage),
            "empty-index" => Ok(EmptyReason::EmptyIndex),
            other => Err(format!("unknown reason code {other:?}")),
        }
    }
}

impl fmt::Display for EmptyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub kind: QueryKind,
    pub items: Vec<Suggestion>,
    pub similar: Vec<(String, f64)>,
    pub reason: Option<EmptyReason>,
}

impl TableEntry {
    pub fn from_list(list: &SuggestionList) -> Self {
        let reason = if !list.items.is_empty() {
            None
        } else if list.warning == Some(SuggestWarning::NoCoverage) {
            Some(EmptyReason::NoCoverage)
        } else {
            Some(EmptyReason::NoCandidates)
        };
        Self {
            kind: list.class.kind,
            items: list.items.clone(),
            similar: list.similar.clone(),
            reason,
        }
    }
}

/// Suggestions keyed by canonical query string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuggestionTable {
    entries: BTreeMap<String, TableEntry>,
}

impl SuggestionTable {
    pub fn get(&self, key: &str) -> Option<&TableEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, entry: TableEntry) {
        self.entries.insert(key, entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TableEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn keys_of(&self, kind: QueryKind) -> Vec<&str> {
        self.iter()
            .filter(|(_, e)| e.kind == kind)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (key, entry) in &self.entries {
            for (rank, (similar, sim)) in entry.similar.iter().enumerate() {
                writeln!(out, "{key}\tsimilar\t{}\t{similar}\t{sim}", rank + 1)?;
            }
            let kind = entry.kind.as_str();
            if entry.items.is_empty() {
                let reason = entry.reason.unwrap_or(EmptyReason::NoCandidates);
                writeln!(out, "{key}\t{kind}\t0\t\t{reason}")?;
            }
            for (rank, item) in entry.items.iter().enumerate() {
                writeln!(out, "{key}\t{kind}\t{}\t{}\t{}", rank + 1, item.query_key, item.score)?;
            }
        }
        out.flush()
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, String> {
        let mut entries: BTreeMap<String, TableEntry> = BTreeMap::new();
        let mut pending_similar: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            let bad = |why: &str| format!("suggestions.tsv line {}: {why}", i + 1);
            let fields: Vec<&str> = line.split('\t').collect();
            let [key, kind, rank, suggested, score] = fields[..] else {
                return Err(bad("expected 5 fields"));
            };
            let rank: usize = rank.parse().map_err(|_| bad("bad rank"))?;
            if kind == "similar" {
                let sim: f64 = score.parse().map_err(|_| bad("bad similarity"))?;
                pending_similar
                    .entry(key.to_string())
                    .or_default()
                    .push((suggested.to_string(), sim));
                continue;
            }
            let kind = match kind {
                "existing" => QueryKind::ClickExisting,
                "absent" => QueryKind::ClickAbsent,
                _ => return Err(bad("unknown kind")),
            };
            let entry = entries.entry(key.to_string()).or_insert_with(|| TableEntry {
                kind,
                items: Vec::new(),
                similar: Vec::new(),
                reason: None,
            });
            if rank == 0 {
                entry.reason = Some(score.parse().map_err(|e: String| bad(&e))?);
            } else {
                if rank != entry.items.len() + 1 {
                    return Err(bad("ranks out of order"));
                }
                let score: f64 = score.parse().map_err(|_| bad("bad score"))?;
                entry.items.push(Suggestion {
                    query_key: suggested.to_string(),
                    score,
                });
            }
        }
        for (key, similar) in pending_similar {
            let entry = entries
                .get_mut(&key)
                .ok_or_else(|| format!("similar rows for {key:?} without an entry"))?;
            entry.similar = similar;
        }
        Ok(Self { entries })
    }
}

/// Suggestions for every graph query plus every given click-absent query.
/// Per-query failures become empty entries with a reason code.
pub fn precompute_suggestions<S: AsRef<str>>(
    engine: &Engine,
    absent_queries: &[S],
    opts: SuggestOptions,
) -> SuggestionTable {
    use rayon::prelude::*;

    let keys: Vec<&str> = engine
        .graph
        .queries()
        .iter()
        .map(String::as_str)
        .chain(
            absent_queries
                .iter()
                .map(AsRef::as_ref)
                .filter(|k| !k.is_empty() && !engine.graph.contains_query(k)),
        )
        .collect();
    let computed: Vec<(String, TableEntry)> = keys
        .par_iter()
        .map(|key| {
            let entry = match engine.suggest_key(key, opts) {
                Ok(list) => TableEntry::from_list(&list),
                Err(err) => {
                    let reason = match err {
                        SuggestError::Embedding(crate::embeddings::EmbeddingError::EmptyIndex) => {
                            EmptyReason::EmptyIndex
                        }
                        _ => EmptyReason::NoCandidates,
                    };
                    TableEntry {
                        kind: if engine.graph.contains_query(key) {
                            QueryKind::ClickExisting
                        } else {
                            QueryKind::ClickAbsent
                        },
                        items: Vec::new(),
                        similar: Vec::new(),
                        reason: Some(reason),
                    }
                }
            };
            (key.to_string(), entry)
        })
        .collect();
    SuggestionTable {
        entries: computed.into_iter().collect(),
    }
}
