//! Human evaluation support: sampling queries, annotation worksheets, and
//! score aggregation.
//!
//! Annotators rate each (query, suggestion) pair from 1 (not related) to 5
//! (strongly related). A class's mean score maps to a correlation
//! percentage as `floor(mean / 5 × 100)`.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::io::BufRead;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::SuggestionTable;
use crate::suggest::QueryKind;

/// Suggestions per query shown to annotators.
pub const WORKSHEET_DEPTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub query: String,
    pub suggestion: String,
    pub annotator_id: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub class: QueryKind,
    pub n_queries: usize,
    pub n_records: usize,
    pub mean_score: f64,
    pub correlation_pct: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("annotation line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("record {index}: score {score} outside 1..=5")]
    ScoreOutOfRange { index: usize, score: u8 },
    #[error("no annotation records")]
    Empty,
}

/// Parses `query<TAB>suggestion<TAB>annotator_id<TAB>score` lines; blank
/// lines and `#` comments are skipped.
pub fn parse_annotations<R: BufRead>(input: R) -> Result<Vec<AnnotationRecord>, EvalError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let err = |reason: String| EvalError::Parse { line: i + 1, reason };
        let line = line.map_err(|e| err(e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, suggestion, annotator, score] = fields[..] else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        let score: u8 = score
            .trim()
            .parse()
            .map_err(|_| err(format!("score {score:?} is not an integer")))?;
        if !(1..=5).contains(&score) {
            return Err(err(format!("score {score} outside 1..=5")));
        }
        records.push(AnnotationRecord {
            query: query.to_string(),
            suggestion: suggestion.to_string(),
            annotator_id: annotator.to_string(),
            score,
        });
    }
    Ok(records)
}

/// `floor(mean / 5 × 100)`, computed as `floor(20 · mean)` with a guard
/// against binary representation error just below an integer.
pub fn correlation_pct(mean: f64) -> u32 {
    let x = mean * 20.0;
    let nearest = x.round();
    let v = if (x - nearest).abs() < 1e-9 { nearest } else { x.floor() };
    v.max(0.0) as u32
}

/// Flat mean over every (query, suggestion, annotator) score.
pub fn aggregate(records: &[AnnotationRecord], class: QueryKind) -> Result<EvalSummary, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum: u64 = 0;
    for (index, r) in records.iter().enumerate() {
        if !(1..=5).contains(&r.score) {
            return Err(EvalError::ScoreOutOfRange { index, score: r.score });
        }
        sum += u64::from(r.score);
    }
    let n = records.len() as u64;
    let queries: HashSet<&str> = records.iter().map(|r| r.query.as_str()).collect();
    Ok(EvalSummary {
        class,
        n_queries: queries.len(),
        n_records: records.len(),
        mean_score: sum as f64 / n as f64,
        // exact integer form of floor(sum / n / 5 * 100)
        correlation_pct: (20 * sum / n) as u32,
    })
}

impl EvalSummary {
    pub fn to_records(&self) -> String {
        let c = self.class.as_str();
        format!(
            "{c}.n_queries={}\n{c}.n_records={}\n{c}.mean_score={:.4}\n{c}.correlation_pct={}\n",
            self.n_queries, self.n_records, self.mean_score, self.correlation_pct
        )
    }
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "click-{:<8} queries {:>4}  scores {:>5}  mean {:.2}  correlation {}%",
            self.class.as_str(),
            self.n_queries,
            self.n_records,
            self.mean_score,
            self.correlation_pct
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalSample {
    pub existing: Vec<String>,
    pub absent: Vec<String>,
    /// Classes that had fewer than `n` queries, with the number available.
    pub shortfall: Vec<(QueryKind, usize)>,
}

/// Uniform sample without replacement of `n` queries per class.
pub fn sample_eval_queries(table: &SuggestionTable, n: usize, seed: u64) -> EvalSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = EvalSample::default();
    for kind in [QueryKind::ClickExisting, QueryKind::ClickAbsent] {
        let pool = table.keys_of(kind);
        if pool.len() < n {
            log::warn!(
                "only {} click-{} queries available, {n} requested",
                pool.len(),
                kind.as_str()
            );
            sample.shortfall.push((kind, pool.len()));
        }
        let picked: Vec<String> = pool
            .choose_multiple(&mut rng, n.min(pool.len()))
            .map(|s| s.to_string())
            .collect();
        match kind {
            QueryKind::ClickExisting => sample.existing = picked,
            QueryKind::ClickAbsent => sample.absent = picked,
        }
    }
    sample
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorksheetEntry {
    pub query: String,
    pub suggestions: Vec<String>,
}

/// Top suggestions of each query, straight from the table.
pub fn worksheet_entries(table: &SuggestionTable, queries: &[String]) -> Vec<WorksheetEntry> {
    queries
        .iter()
        .map(|q| WorksheetEntry {
            query: q.clone(),
            suggestions: table
                .get(q)
                .map(|e| {
                    e.items
                        .iter()
                        .take(WORKSHEET_DEPTH)
                        .map(|i| i.query_key.clone())
                        .collect()
                })
                .unwrap_or_default(),
        })
        .collect()
}

const WORKSHEET_HEADER: &str = "\
# Relevance worksheet
#
# For every row, judge how related the suggested query is to the original
# query and fill in your annotator id and a score:
#   1 = unrelated, 2 = weakly related, 3 = somewhat related,
#   4 = clearly related, 5 = strongly related.
# Suggestions of one query are listed in shuffled order; their position
# carries no meaning. Several suggestions may receive the same score.
# Comparing the suggestions of a query with each other can help calibrate.
# Looking up unfamiliar product names or non-English terms is allowed.
#
# query\tsuggestion\tannotator_id\tscore
";

/// Renders an annotation file; each query's suggestions are shuffled with a
/// generator seeded by `seed`.
pub fn render_worksheet(entries: &[WorksheetEntry], seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from(WORKSHEET_HEADER);
    for entry in entries {
        let mut shuffled = entry.suggestions.clone();
        shuffled.shuffle(&mut rng);
        for s in shuffled {
            let _ = writeln!(out, "{}\t{s}\t\t", entry.query);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::TableEntry;
    use crate::suggest::Suggestion;

    fn records(scores: &[u8]) -> Vec<AnnotationRecord> {
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| AnnotationRecord {
                query: format!("q{}", i / 5),
                suggestion: format!("s{i}"),
                annotator_id: "a1".into(),
                score: *s,
            })
            .collect()
    }

    #[test]
    fn constant_fours() {
        let s = aggregate(&records(&[4; 20]), QueryKind::ClickExisting).unwrap();
        assert_eq!(s.mean_score, 4.0);
        assert_eq!(s.correlation_pct, 80);
        assert_eq!(s.n_queries, 4);
    }

    #[test]
    fn reported_anchor_means() {
        // 50 scores summing to 199 → 3.98; 100 scores summing to 321 → 3.21
        let mut a = vec![4u8; 50];
        a[0] = 3;
        let s = aggregate(&records(&a), QueryKind::ClickExisting).unwrap();
        assert_eq!(s.mean_score, 3.98);
        assert_eq!(s.correlation_pct, 79);

        let mut b = vec![3u8; 100];
        for x in b.iter_mut().take(21) {
            *x = 4;
        }
        let s = aggregate(&records(&b), QueryKind::ClickAbsent).unwrap();
        assert_eq!(s.mean_score, 3.21);
        assert_eq!(s.correlation_pct, 64);
        assert_eq!(correlation_pct(3.98), 79);
        assert_eq!(correlation_pct(3.21), 64);
        assert_eq!(correlation_pct(4.0), 80);
        assert_eq!(correlation_pct(1.0), 20);
        assert_eq!(correlation_pct(5.0), 100);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(aggregate(&[], QueryKind::ClickAbsent), Err(EvalError::Empty));
        let mut bad = records(&[3, 4]);
        bad[1].score = 6;
        assert_eq!(
            aggregate(&bad, QueryKind::ClickAbsent),
            Err(EvalError::ScoreOutOfRange { index: 1, score: 6 })
        );
        let err = parse_annotations("# c\nq\ts\ta\t0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::Parse { line: 2, .. }));
        assert!(parse_annotations("q\ts\ta\n".as_bytes()).is_err());
        let ok = parse_annotations("q\ts\ta\t5\r\n\nq\tt\tb\t1\n".as_bytes()).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].score, 5);
    }

    fn table(n_existing: usize, n_absent: usize) -> SuggestionTable {
        let mut t = SuggestionTable::default();
        for i in 0..n_existing {
            t.insert(
                format!("e{i}"),
                TableEntry {
                    kind: QueryKind::ClickExisting,
                    items: (0..7)
                        .map(|j| Suggestion { query_key: format!("e{i}-s{j}"), score: (10 - j) as f64 })
                        .collect(),
                    similar: vec![],
                    reason: None,
                },
            );
        }
        for i in 0..n_absent {
            t.insert(
                format!("a{i}"),
                TableEntry {
                    kind: QueryKind::ClickAbsent,
                    items: vec![Suggestion { query_key: "x".into(), score: 1.0 }],
                    similar: vec![],
                    reason: None,
                },
            );
        }
        t
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let t = table(10, 3);
        let a = sample_eval_queries(&t, 2, 7);
        let b = sample_eval_queries(&t, 2, 7);
        assert_eq!(a, b);
        assert_eq!(a.existing.len(), 2);
        assert_eq!(a.absent.len(), 2);
        assert!(a.shortfall.is_empty());
    }

    #[test]
    fn shortfall_returns_everything() {
        let s = sample_eval_queries(&table(10, 3), 100, 1);
        assert_eq!(s.absent.len(), 3);
        assert_eq!(s.existing.len(), 10);
        assert_eq!(
            s.shortfall,
            vec![(QueryKind::ClickExisting, 10), (QueryKind::ClickAbsent, 3)]
        );
    }

    #[test]
    fn worksheet_shape_and_shuffle() {
        let t = table(2, 1);
        let queries = vec!["e0".to_string(), "a0".to_string()];
        let entries = worksheet_entries(&t, &queries);
        assert_eq!(entries[0].suggestions.len(), 5);
        assert_eq!(entries[1].suggestions.len(), 1);

        let sheet = render_worksheet(&entries, 3);
        assert_eq!(sheet, render_worksheet(&entries, 3));
        assert!(sheet.starts_with("# Relevance worksheet"));
        let rows: Vec<&str> = sheet.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 6);
        let mut e0: Vec<&str> = rows
            .iter()
            .filter(|r| r.starts_with("e0\t"))
            .map(|r| r.split('\t').nth(1).unwrap())
            .collect();
        e0.sort();
        let mut expected: Vec<&str> = entries[0].suggestions.iter().map(String::as_str).collect();
        expected.sort();
        assert_eq!(e0, expected);
    }
}
