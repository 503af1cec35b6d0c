//! On-disk engine artifacts.
//!
//! A saved engine is a directory holding `manifest` (JSON), `graph.tsv`,
//! `vocab.tsv`, `vectors.bin`, `centroids.bin` and `suggestions.tsv`. The
//! manifest records the SHA-256 of every other file; loading verifies all of
//! them before anything is parsed.

mod binary;
mod table;

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embeddings::{CbowConfig, CentroidMode, EmbeddingModel, Vocab};
use crate::graph::ClickGraph;
use crate::ingest::{CjkSegmenter, LongTailRule, NormalizationRules, StopWords, UnigramSegmenter};
use crate::suggest::{Engine, SuggestOptions};

pub use binary::{decode_centroids, decode_matrices, encode_centroids, encode_matrices};
pub use table::{precompute_suggestions, EmptyReason, SuggestionTable, TableEntry};

pub const FORMAT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest";
pub const GRAPH_FILE: &str = "graph.tsv";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const VECTORS_FILE: &str = "vectors.bin";
pub const CENTROIDS_FILE: &str = "centroids.bin";
pub const SUGGESTIONS_FILE: &str = "suggestions.tsv";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no manifest in {0}")]
    MissingManifest(PathBuf),
    #[error("artifact file missing: {0}")]
    MissingFile(PathBuf),
    #[error("artifact format version {found} is not supported (max {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("digest mismatch for {file}: manifest {expected}, file {actual}")]
    DigestMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("{file}: {reason}")]
    Format { file: String, reason: String },
    #[error("another writer holds {0}")]
    Locked(PathBuf),
    #[error("unknown segmenter {0:?}; load with an explicit segmenter")]
    UnknownSegmenter(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(file: &str, reason: impl ToString) -> StoreError {
    StoreError::Format {
        file: file.to_string(),
        reason: reason.to_string(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Settings that must survive a reload for answers to stay identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub segmenter: String,
    pub latin_stop_words: Vec<String>,
    pub cjk_stop_words: Vec<String>,
    pub long_tail: LongTailRule,
    pub centroid_mode: CentroidMode,
    pub options: SuggestOptions,
    pub cbow: CbowConfig,
    pub uncovered_graph_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub format_version: u32,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub source_log_digest: String,
    pub files: Vec<FileDigest>,
    pub settings: EngineSettings,
}

/// What the build produced besides the engine itself.
#[derive(Debug, Clone)]
pub struct BuildMeta {
    pub source_log_digest: String,
    pub options: SuggestOptions,
    pub cbow: CbowConfig,
    pub uncovered_graph_queries: usize,
}

/// A loaded artifact directory.
#[derive(Debug, Clone)]
pub struct LoadedEngine {
    pub engine: Arc<Engine>,
    pub table: SuggestionTable,
    pub manifest: ArtifactManifest,
    /// SHA-256 of the manifest file itself.
    pub manifest_digest: String,
}

/// Removes the lock file when the save finishes, successfully or not.
struct WriteLock(PathBuf);

impl WriteLock {
    fn acquire(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(StoreError::Locked(path)),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, &dest).map_err(io_err(&dest))
}

pub fn encode_graph(graph: &ClickGraph) -> Vec<u8> {
    let mut out = Vec::new();
    for q in graph.queries() {
        let _ = writeln!(out, "Q\t{q}\t{}", graph.total_clicks(q));
    }
    for d in graph.docs() {
        let _ = writeln!(out, "D\t{d}");
    }
    for (q, d, w) in graph.edges() {
        let _ = writeln!(out, "E\t{q}\t{d}\t{w}");
    }
    out
}

pub fn decode_graph(bytes: &[u8]) -> Result<ClickGraph, StoreError> {
    let err = |line: usize, why: &str| format_err(GRAPH_FILE, format!("line {line}: {why}"));
    let mut declared = Vec::new();
    let mut edges: Vec<(String, String, u64)> = Vec::new();
    for (i, line) in bytes.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, &e.to_string()))?;
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[..] {
            ["Q", q, ..] => declared.push(q.to_string()),
            ["D", _] => {}
            ["E", q, d, w] => {
                let w: u64 = w.parse().map_err(|_| err(i + 1, "bad weight"))?;
                if w == 0 {
                    return Err(err(i + 1, "zero weight"));
                }
                edges.push((q.to_string(), d.to_string(), w));
            }
            _ => return Err(err(i + 1, "unrecognized line")),
        }
    }
    let graph = ClickGraph::from_edges(edges.iter().map(|(q, d, w)| (q.as_str(), d.as_str(), *w)))
        .map_err(|e| format_err(GRAPH_FILE, e))?;
    if graph.queries() != declared.as_slice() {
        return Err(format_err(GRAPH_FILE, "query vertex lines disagree with edges"));
    }
    Ok(graph)
}

fn encode_vocab(vocab: &Vocab) -> Vec<u8> {
    let mut out = Vec::new();
    for (token, count) in vocab.iter() {
        let _ = writeln!(out, "{token}\t{count}");
    }
    out
}

fn decode_vocab(bytes: &[u8]) -> Result<Vocab, StoreError> {
    let mut entries = Vec::new();
    for (i, line) in bytes.lines().enumerate() {
        let line = line.map_err(|e| format_err(VOCAB_FILE, e))?;
        let (token, count) = line
            .split_once('\t')
            .ok_or_else(|| format_err(VOCAB_FILE, format!("line {}: expected token<TAB>count", i + 1)))?;
        let count = count
            .parse()
            .map_err(|_| format_err(VOCAB_FILE, format!("line {}: bad count", i + 1)))?;
        entries.push((token.to_string(), count));
    }
    Ok(Vocab::from_entries(entries))
}

/// Writes every artifact (each via temp file + rename), then the manifest.
pub fn save_engine(
    engine: &Engine,
    table: &SuggestionTable,
    meta: &BuildMeta,
    dir: impl AsRef<Path>,
) -> Result<ArtifactManifest, StoreError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let _lock = WriteLock::acquire(dir)?;

    let model = &engine.model;
    let mut table_bytes = Vec::new();
    table.write_tsv(&mut table_bytes).map_err(io_err(&dir.join(SUGGESTIONS_FILE)))?;
    let files: Vec<(&str, Vec<u8>)> = vec![
        (GRAPH_FILE, encode_graph(&engine.graph)),
        (VOCAB_FILE, encode_vocab(model.vocab())),
        (
            VECTORS_FILE,
            encode_matrices(
                model.vocab().len(),
                model.dim(),
                &[model.input_matrix(), model.output_matrix()],
            ),
        ),
        (CENTROIDS_FILE, encode_centroids(&engine.index)),
        (SUGGESTIONS_FILE, table_bytes),
    ];

    let mut digests = Vec::new();
    for (name, bytes) in &files {
        write_atomic(dir, name, bytes)?;
        digests.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }

    let manifest = ArtifactManifest {
        format_version: FORMAT_VERSION,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        source_log_digest: meta.source_log_digest.clone(),
        files: digests,
        settings: EngineSettings {
            segmenter: engine.rules.segmenter.name().to_string(),
            latin_stop_words: engine.rules.latin_stop_words.to_sorted_vec(),
            cjk_stop_words: engine.rules.cjk_stop_words.to_sorted_vec(),
            long_tail: engine.long_tail,
            centroid_mode: engine.index.mode(),
            options: meta.options,
            cbow: meta.cbow.clone(),
            uncovered_graph_queries: meta.uncovered_graph_queries,
        },
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| format_err(MANIFEST_FILE, e))?;
    write_atomic(dir, MANIFEST_FILE, &json)?;
    Ok(manifest)
}

/// Loads with the built-in segmenter named in the manifest.
pub fn load_engine(dir: impl AsRef<Path>) -> Result<LoadedEngine, StoreError> {
    load_engine_with(dir, None)
}

/// Loads an artifact directory. `segmenter` replaces the built-in lookup,
/// for engines built with a custom CJK segmenter.
pub fn load_engine_with(
    dir: impl AsRef<Path>,
    segmenter: Option<Arc<dyn CjkSegmenter>>,
) -> Result<LoadedEngine, StoreError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_bytes = match fs::read(&manifest_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StoreError::MissingManifest(dir.to_path_buf()))
        }
        Err(e) => return Err(io_err(&manifest_path)(e)),
    };
    // Check the version before committing to the full schema.
    let version = serde_json::from_slice::<serde_json::Value>(&manifest_bytes)
        .map_err(|e| format_err(MANIFEST_FILE, e))?
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| format_err(MANIFEST_FILE, "missing format_version"))?;
    if version > u64::from(FORMAT_VERSION) || version == 0 {
        return Err(StoreError::UnsupportedVersion {
            found: version.min(u64::from(u32::MAX)) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let manifest: ArtifactManifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| format_err(MANIFEST_FILE, e))?;

    let mut contents = std::collections::HashMap::new();
    for name in [GRAPH_FILE, VOCAB_FILE, VECTORS_FILE, CENTROIDS_FILE, SUGGESTIONS_FILE] {
        let entry = manifest
            .files
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| format_err(MANIFEST_FILE, format!("no digest for {name}")))?;
        let path = dir.join(name);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::MissingFile(path))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(StoreError::DigestMismatch {
                file: name.to_string(),
                expected: entry.sha256.clone(),
                actual,
            });
        }
        contents.insert(name, bytes);
    }

    let graph = decode_graph(&contents[GRAPH_FILE])?;
    let vocab = decode_vocab(&contents[VOCAB_FILE])?;
    let (rows, dim, mut matrices) =
        decode_matrices(&contents[VECTORS_FILE]).map_err(|e| format_err(VECTORS_FILE, e))?;
    if rows != vocab.len() || matrices.len() != 2 {
        return Err(format_err(VECTORS_FILE, "matrix shape disagrees with vocab.tsv"));
    }
    let output = matrices.pop().expect("two matrices");
    let input = matrices.pop().expect("two matrices");
    let model = EmbeddingModel::from_parts(vocab, dim, input, output)
        .map_err(|e| format_err(VECTORS_FILE, e))?;
    let index = decode_centroids(&contents[CENTROIDS_FILE]).map_err(|e| format_err(CENTROIDS_FILE, e))?;
    if index.dim() != dim && !index.is_empty() {
        return Err(format_err(CENTROIDS_FILE, "centroid dimension disagrees with vectors.bin"));
    }
    let table = SuggestionTable::read_tsv(contents[SUGGESTIONS_FILE].as_slice())
        .map_err(|e| format_err(SUGGESTIONS_FILE, e))?;

    let settings = &manifest.settings;
    let segmenter = match segmenter {
        Some(s) => s,
        None if settings.segmenter == "unigram" => Arc::new(UnigramSegmenter),
        None => return Err(StoreError::UnknownSegmenter(settings.segmenter.clone())),
    };
    let rules = NormalizationRules {
        latin_stop_words: settings.latin_stop_words.iter().collect::<StopWords>(),
        cjk_stop_words: settings.cjk_stop_words.iter().collect::<StopWords>(),
        segmenter,
    };
    let engine = Engine {
        graph,
        model,
        index,
        rules,
        long_tail: settings.long_tail,
    };
    Ok(LoadedEngine {
        engine: Arc::new(engine),
        table,
        manifest_digest: sha256_hex(&manifest_bytes),
        manifest,
    })
}
