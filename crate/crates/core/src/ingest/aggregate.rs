use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::normalize::{normalize, NormalizationRules};
use super::parse::RawLogRecord;

/// A deduplicated (query, document) pair with its accumulated click count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryDocPair {
    pub query_key: String,
    pub doc_key: String,
    pub click_count: u64,
}

/// Why a record never made it into a pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropReport {
    pub empty_query: usize,
    pub empty_title: usize,
    /// Clicked records among the dropped ones.
    pub dropped_clicks: u64,
}

impl DropReport {
    pub fn total(&self) -> usize {
        self.empty_query + self.empty_title
    }

    fn merge(&mut self, other: &DropReport) {
        self.empty_query += other.empty_query;
        self.empty_title += other.empty_title;
        self.dropped_clicks += other.dropped_clicks;
    }
}

/// Aggregated log: pairs sorted by `(query_key, doc_key)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aggregation {
    pub pairs: Vec<QueryDocPair>,
    pub total_records: usize,
    pub dropped: DropReport,
}

/// Partial aggregation state. Shards can be accumulated independently and
/// merged in any order; counts add.
#[derive(Debug, Clone, Default)]
pub struct PairAccumulator {
    counts: BTreeMap<(String, String), u64>,
    total_records: usize,
    dropped: DropReport,
}

impl PairAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, record: &RawLogRecord, rules: &NormalizationRules) {
        self.total_records += 1;
        let query = normalize(&record.query_text, rules);
        let title = normalize(&record.doc_title, rules);
        if query.is_empty() || title.is_empty() {
            if query.is_empty() {
                self.dropped.empty_query += 1;
            } else {
                self.dropped.empty_title += 1;
            }
            self.dropped.dropped_clicks += u64::from(record.clicked);
            return;
        }
        *self.counts.entry((query.key(), title.key())).or_insert(0) += u64::from(record.clicked);
    }

    pub fn merge(mut self, other: PairAccumulator) -> PairAccumulator {
        for (key, count) in other.counts {
            *self.counts.entry(key).or_insert(0) += count;
        }
        self.total_records += other.total_records;
        self.dropped.merge(&other.dropped);
        self
    }

    pub fn finish(self) -> Aggregation {
        if self.dropped.total() > 0 {
            log::warn!(
                "dropped {} records that normalized to nothing ({} queries, {} titles)",
                self.dropped.total(),
                self.dropped.empty_query,
                self.dropped.empty_title
            );
        }
        Aggregation {
            pairs: self
                .counts
                .into_iter()
                .map(|((query_key, doc_key), click_count)| QueryDocPair {
                    query_key,
                    doc_key,
                    click_count,
                })
                .collect(),
            total_records: self.total_records,
            dropped: self.dropped,
        }
    }
}

pub fn aggregate_pairs<'a, I>(records: I, rules: &NormalizationRules) -> Aggregation
where
    I: IntoIterator<Item = &'a RawLogRecord>,
{
    let mut acc = PairAccumulator::new();
    for rec in records {
        acc.add(rec, rules);
    }
    acc.finish()
}

/// Token sequences for embedding training: each distinct query, then each
/// distinct title, exactly once, in key order.
pub fn training_corpus(pairs: &[QueryDocPair]) -> impl Iterator<Item = Vec<String>> + '_ {
    let queries: BTreeSet<&str> = pairs.iter().map(|p| p.query_key.as_str()).collect();
    let docs: BTreeSet<&str> = pairs.iter().map(|p| p.doc_key.as_str()).collect();
    queries
        .into_iter()
        .chain(docs)
        .map(|key| key.split(' ').map(str::to_string).collect())
}

/// Total clicks per distinct query (zero for click-absent queries).
pub fn click_totals(pairs: &[QueryDocPair]) -> BTreeMap<String, u64> {
    let mut totals = BTreeMap::new();
    for p in pairs {
        *totals.entry(p.query_key.clone()).or_insert(0) += p.click_count;
    }
    totals
}

#[derive(Debug, Error)]
pub enum PairsFileError {
    #[error("pairs line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes `query_key<TAB>doc_key<TAB>click_count` lines.
pub fn write_pairs<W: Write>(mut out: W, pairs: &[QueryDocPair]) -> io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}\t{}", p.query_key, p.doc_key, p.click_count)?;
    }
    out.flush()
}

pub fn read_pairs<R: BufRead>(input: R) -> Result<Vec<QueryDocPair>, PairsFileError> {
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| PairsFileError::Malformed {
            line: i + 1,
            reason: reason.to_string(),
        };
        let mut fields = line.split('\t');
        let (Some(q), Some(d), Some(c), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(malformed("expected 3 tab-separated fields"));
        };
        if q.is_empty() || d.is_empty() {
            return Err(malformed("empty key"));
        }
        let click_count = c.parse().map_err(|_| malformed("click count is not an integer"))?;
        pairs.push(QueryDocPair {
            query_key: q.to_string(),
            doc_key: d.to_string(),
            click_count,
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(q: &str, t: &str, clicked: bool) -> RawLogRecord {
        RawLogRecord {
            query_text: q.into(),
            doc_title: t.into(),
            clicked,
        }
    }

    fn rules() -> NormalizationRules {
        NormalizationRules::without_stop_words()
    }

    #[test]
    fn clicked_duplicates_accumulate() {
        let records = vec![
            rec("java", "Java Guide", true),
            rec("Java", "java guide", true),
            rec("java!", "Java Guide", true),
            rec("java", "Java Guide", false),
        ];
        let agg = aggregate_pairs(&records, &rules());
        assert_eq!(
            agg.pairs,
            vec![QueryDocPair {
                query_key: "java".into(),
                doc_key: "java guide".into(),
                click_count: 3
            }]
        );
        assert_eq!(agg.total_records, 4);
    }

    #[test]
    fn distinct_titles_stay_separate() {
        let records = vec![rec("java", "A", true), rec("java", "B", false)];
        let agg = aggregate_pairs(&records, &rules());
        assert_eq!(agg.pairs.len(), 2);
        assert_eq!(agg.pairs[0].click_count, 1);
        assert_eq!(agg.pairs[1].click_count, 0);
    }

    #[test]
    fn empty_input() {
        let agg = aggregate_pairs(&[], &rules());
        assert!(agg.pairs.is_empty());
        assert_eq!(agg.total_records, 0);
    }

    #[test]
    fn punctuation_only_records_are_dropped_and_counted() {
        let records = vec![rec("!!!", "A", true), rec("q", "？？", false), rec("q", "t", true)];
        let agg = aggregate_pairs(&records, &rules());
        assert_eq!(agg.pairs.len(), 1);
        assert_eq!(agg.dropped.empty_query, 1);
        assert_eq!(agg.dropped.empty_title, 1);
        assert_eq!(agg.dropped.dropped_clicks, 1);
    }

    #[test]
    fn corpus_emits_each_query_and_title_once() {
        let pairs = vec![QueryDocPair {
            query_key: "java api".into(),
            doc_key: "java api documentation".into(),
            click_count: 1,
        }];
        let corpus: Vec<_> = training_corpus(&pairs).collect();
        assert_eq!(
            corpus,
            vec![vec!["java", "api"], vec!["java", "api", "documentation"]]
        );

        let shared = vec![
            QueryDocPair { query_key: "q".into(), doc_key: "a".into(), click_count: 0 },
            QueryDocPair { query_key: "q".into(), doc_key: "b".into(), click_count: 2 },
        ];
        let corpus: Vec<_> = training_corpus(&shared).collect();
        assert_eq!(corpus, vec![vec!["q"], vec!["a"], vec!["b"]]);

        assert_eq!(training_corpus(&[]).count(), 0);
    }

    #[test]
    fn pairs_file_round_trip() {
        let pairs = vec![
            QueryDocPair { query_key: "svn 安 装".into(), doc_key: "svn guide".into(), click_count: 7 },
            QueryDocPair { query_key: "x".into(), doc_key: "y".into(), click_count: 0 },
        ];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);
        assert!(matches!(
            read_pairs("a\tb\n".as_bytes()),
            Err(PairsFileError::Malformed { line: 1, .. })
        ));
        assert!(read_pairs("a\tb\tx\n".as_bytes()).is_err());
    }
}
