use proptest::prelude::*;
use qsuggest_core::ingest::{
    aggregate_pairs, compute_stats, normalize, LongTailRule, NormalizationRules, PairAccumulator,
    RawLogRecord, StopWords,
};

fn text_strategy() -> impl Strategy<Value = String> {
    // Latin, digits, CJK, ASCII and full-width punctuation, whitespace
    proptest::string::string_regex("[A-Za-z0-9éÅ安装线程的 \t!?.,，。（）\\-]{0,24}").unwrap()
}

fn rules() -> NormalizationRules {
    NormalizationRules {
        latin_stop_words: StopWords::parse("the\nto\na"),
        ..NormalizationRules::default()
    }
}

fn record_strategy() -> impl Strategy<Value = RawLogRecord> {
    (
        proptest::sample::select(vec!["java", "Java API", "svn 安装", "the", "a b c d", "!!", "unix kernel tuning guide"]),
        proptest::sample::select(vec!["Java Guide", "SVN 安装指导", "？？", "Docs", "Linux"]),
        any::<bool>(),
    )
        .prop_map(|(q, t, clicked)| RawLogRecord {
            query_text: q.to_string(),
            doc_title: t.to_string(),
            clicked,
        })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(text in text_strategy()) {
        let rules = rules();
        let first = normalize(&text, &rules);
        let again = normalize(&first.key(), &rules);
        prop_assert_eq!(&again.tokens, &first.tokens);
        for tok in &first.tokens {
            prop_assert!(!tok.is_empty());
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
            prop_assert!(!tok.chars().any(qsuggest_core::ingest::is_punctuation));
            prop_assert!(!tok.chars().any(char::is_whitespace));
            prop_assert!(!["the", "to", "a", "的"].contains(&tok.as_str()));
        }
    }

    #[test]
    fn aggregation_conserves_clicks_and_ignores_order(
        records in proptest::collection::vec(record_strategy(), 0..60),
        shuffle_seed in any::<u64>(),
    ) {
        let rules = rules();
        let agg = aggregate_pairs(&records, &rules);
        let clicked = records.iter().filter(|r| r.clicked).count() as u64;
        let total: u64 = agg.pairs.iter().map(|p| p.click_count).sum();
        prop_assert_eq!(total, clicked - agg.dropped.dropped_clicks);

        let mut permuted = records.clone();
        let n = permuted.len();
        let mut s = shuffle_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            permuted.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(aggregate_pairs(&permuted, &rules), agg.clone());

        // sharded accumulation merges to the same result
        let mid = n / 2;
        let mut left = PairAccumulator::new();
        records[..mid].iter().for_each(|r| left.add(r, &rules));
        let mut right = PairAccumulator::new();
        records[mid..].iter().for_each(|r| right.add(r, &rules));
        prop_assert_eq!(right.merge(left).finish(), agg);
    }

    #[test]
    fn stats_invariants_hold(records in proptest::collection::vec(record_strategy(), 0..60)) {
        let agg = aggregate_pairs(&records, &rules());
        let s = compute_stats(&agg, LongTailRule::default());
        prop_assert!(s.clicked_unique_pairs <= s.unique_pairs);
        prop_assert!(s.unique_pairs <= s.total_records);
        let clicked_queries = qsuggest_core::ingest::click_totals(&agg.pairs)
            .values()
            .filter(|c| **c > 0)
            .count();
        prop_assert_eq!(s.click_absent_queries + clicked_queries, s.unique_queries);
    }
}
