use std::fmt;

use serde::{Deserialize, Serialize};

use super::aggregate::{click_totals, Aggregation};

/// A query is long-tail when it has more than `min_words` tokens and fewer
/// than `max_clicks` total clicks (both bounds exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongTailRule {
    pub min_words: usize,
    pub max_clicks: u64,
}

impl Default for LongTailRule {
    fn default() -> Self {
        Self {
            min_words: 3,
            max_clicks: 5,
        }
    }
}

impl LongTailRule {
    pub fn is_long_tail(&self, token_count: usize, total_clicks: u64) -> bool {
        token_count > self.min_words && total_clicks < self.max_clicks
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_records: usize,
    pub unique_pairs: usize,
    pub clicked_unique_pairs: usize,
    pub unique_queries: usize,
    pub long_tail_queries: usize,
    pub click_absent_queries: usize,
}

pub fn compute_stats(agg: &Aggregation, rule: LongTailRule) -> DatasetStats {
    let totals = click_totals(&agg.pairs);
    let mut stats = DatasetStats {
        total_records: agg.total_records,
        unique_pairs: agg.pairs.len(),
        clicked_unique_pairs: agg.pairs.iter().filter(|p| p.click_count > 0).count(),
        unique_queries: totals.len(),
        ..Default::default()
    };
    for (query, clicks) in &totals {
        let words = query.split(' ').count();
        if rule.is_long_tail(words, *clicks) {
            stats.long_tail_queries += 1;
        }
        if *clicks == 0 {
            stats.click_absent_queries += 1;
        }
    }
    stats
}

impl DatasetStats {
    /// `key=value` lines for scripts.
    pub fn to_records(&self) -> String {
        format!(
            "total_records={}\nunique_pairs={}\nclicked_unique_pairs={}\nunique_queries={}\nlong_tail_queries={}\nclick_absent_queries={}\n",
            self.total_records,
            self.unique_pairs,
            self.clicked_unique_pairs,
            self.unique_queries,
            self.long_tail_queries,
            self.click_absent_queries
        )
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records read:          {}", self.total_records)?;
        writeln!(f, "unique pairs:          {}", self.unique_pairs)?;
        writeln!(f, "  with clicks:         {}", self.clicked_unique_pairs)?;
        writeln!(f, "unique queries:        {}", self.unique_queries)?;
        writeln!(f, "  long-tail:           {}", self.long_tail_queries)?;
        write!(f, "  click-absent:        {}", self.click_absent_queries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::QueryDocPair;

    fn agg(pairs: &[(&str, &str, u64)]) -> Aggregation {
        Aggregation {
            pairs: pairs
                .iter()
                .map(|(q, d, c)| QueryDocPair {
                    query_key: q.to_string(),
                    doc_key: d.to_string(),
                    click_count: *c,
                })
                .collect(),
            total_records: pairs.len(),
            ..Default::default()
        }
    }

    #[test]
    fn four_words_two_clicks_is_long_tail() {
        let s = compute_stats(&agg(&[("a b c d", "x", 1), ("a b c d", "y", 1)]), LongTailRule::default());
        assert_eq!(s.long_tail_queries, 1);
        assert_eq!(s.click_absent_queries, 0);
        assert_eq!(s.unique_queries, 1);
    }

    #[test]
    fn zero_clicks_is_click_absent() {
        let s = compute_stats(&agg(&[("q", "x", 0)]), LongTailRule::default());
        assert_eq!(s.click_absent_queries, 1);
        assert_eq!(s.long_tail_queries, 0);
        assert_eq!(s.clicked_unique_pairs, 0);
    }

    #[test]
    fn long_tail_bounds_are_exclusive() {
        let rule = LongTailRule::default();
        assert!(!rule.is_long_tail(3, 0));
        assert!(!rule.is_long_tail(4, 5));
        assert!(rule.is_long_tail(4, 4));
    }
}
