use std::fs;
use std::path::Path;

use qsuggest_core::embeddings::CbowConfig;
use qsuggest_core::ingest::{NormalizationRules, QueryDocPair};
use qsuggest_core::pipeline::{build_engine, BuildConfig, BuiltEngine};
use qsuggest_core::store::{
    load_engine, save_engine, BuildMeta, StoreError, CENTROIDS_FILE, MANIFEST_FILE, SUGGESTIONS_FILE,
    VECTORS_FILE,
};
use qsuggest_core::SuggestOptions;

fn pair(q: &str, d: &str, c: u64) -> QueryDocPair {
    QueryDocPair {
        query_key: q.into(),
        doc_key: d.into(),
        click_count: c,
    }
}

fn small_build() -> (BuiltEngine, BuildMeta) {
    let pairs = vec![
        pair("java api", "java guide", 3),
        pair("java tutorial", "java guide", 2),
        pair("java tutorial", "java docs", 1),
        pair("svn install", "svn install guide", 4),
        pair("svn setup", "svn install guide", 1),
        pair("java threads", "java docs", 0),
        pair("svn install windows", "svn install guide", 0),
    ];
    let config = BuildConfig {
        cbow: CbowConfig { dim: 12, epochs: 20, min_count: 1, ..Default::default() },
        ..Default::default()
    };
    let built = build_engine(&pairs, NormalizationRules::default(), &config).unwrap();
    let meta = BuildMeta {
        source_log_digest: "0".repeat(64),
        options: config.options,
        cbow: config.cbow.clone(),
        uncovered_graph_queries: built.uncovered_graph_queries.len(),
    };
    (built, meta)
}

fn saved(dir: &Path) -> BuiltEngine {
    let (built, meta) = small_build();
    save_engine(&built.engine, &built.table, &meta, dir).unwrap();
    built
}

#[test]
fn reload_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let built = saved(dir.path());
    let loaded = load_engine(dir.path()).unwrap();
    let (a, b) = (&built.engine, &*loaded.engine);
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.model.vocab(), b.model.vocab());
    let bits = |m: &[f32]| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.model.input_matrix()), bits(b.model.input_matrix()));
    assert_eq!(bits(a.model.output_matrix()), bits(b.model.output_matrix()));
    assert_eq!(a.index, b.index);
    assert_eq!(built.table, loaded.table);
    assert_eq!(a.long_tail, b.long_tail);

    for q in ["svn install windows", "java threads", "java api", "unknown words"] {
        let before = a.suggest(q, SuggestOptions::default()).unwrap();
        let after = b.suggest(q, SuggestOptions::default()).unwrap();
        assert_eq!(format!("{before:?}"), format!("{after:?}"));
    }
}

#[test]
fn tampered_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    let path = dir.path().join(VECTORS_FILE);
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    match load_engine(dir.path()) {
        Err(StoreError::DigestMismatch { file, .. }) => assert_eq!(file, VECTORS_FILE),
        other => panic!("expected digest mismatch, got {other:?}"),
    }
}

#[test]
fn missing_pieces_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_engine(dir.path()), Err(StoreError::MissingManifest(_))));

    saved(dir.path());
    fs::remove_file(dir.path().join(CENTROIDS_FILE)).unwrap();
    assert!(matches!(load_engine(dir.path()), Err(StoreError::MissingFile(_))));
}

#[test]
fn newer_format_version_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    let path = dir.path().join(MANIFEST_FILE);
    let mut manifest: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    manifest["format_version"] = 99.into();
    fs::write(&path, serde_json::to_vec(&manifest).unwrap()).unwrap();
    assert!(matches!(
        load_engine(dir.path()),
        Err(StoreError::UnsupportedVersion { found: 99, supported: 1 })
    ));
}

#[test]
fn unwritable_target_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("not-a-dir");
    fs::write(&blocker, b"x").unwrap();
    let (built, meta) = small_build();
    let err = save_engine(&built.engine, &built.table, &meta, &blocker).unwrap_err();
    assert!(matches!(err, StoreError::Io { .. }), "{err:?}");
}

#[test]
fn precomputed_rows_cover_every_absent_query() {
    let dir = tempfile::tempdir().unwrap();
    let built = saved(dir.path());
    let text = fs::read_to_string(dir.path().join(SUGGESTIONS_FILE)).unwrap();
    for q in &built.absent_queries {
        assert!(text.lines().any(|l| l.starts_with(&format!("{q}\t"))), "{q} missing");
        let live = built.engine.suggest_key(q, SuggestOptions::default()).unwrap();
        let row = built.table.get(q).unwrap();
        let keys: Vec<_> = row.items.iter().map(|s| &s.query_key).collect();
        let live_keys: Vec<_> = live.items.iter().map(|s| &s.query_key).collect();
        assert_eq!(keys, live_keys);
    }
}
