//! Click-log ingestion: parsing, normalization, pair aggregation and
//! dataset statistics.

mod aggregate;
mod normalize;
mod parse;
mod stats;

pub use aggregate::{
    aggregate_pairs, click_totals, read_pairs, training_corpus, write_pairs, Aggregation,
    DropReport, PairAccumulator, PairsFileError, QueryDocPair,
};
pub use normalize::{
    is_cjk, is_punctuation, normalize, CjkSegmenter, NormalizationRules, NormalizedText,
    StopWords, UnigramSegmenter,
};
pub use parse::{
    collect_records, parse_line, parse_log, LineError, LineErrorKind, LogFormat, MalformedPolicy,
    ParsedLog, RawLogRecord,
};
pub use stats::{compute_stats, DatasetStats, LongTailRule};
