//! Python bindings: normalization, the click graph, engines and evaluation.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qsuggest_core::eval::{self, AnnotationRecord};
use qsuggest_core::ingest::{self, write_pairs, NormalizationRules, QueryDocPair};
use qsuggest_core::pipeline::{build_engine, BuildConfig};
use qsuggest_core::store::{self, BuildMeta, StoreError, SuggestionTable};
use qsuggest_core::suggest::SuggestWarning;
use qsuggest_core::{CbowConfig, Engine, QueryKind, SuggestOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn store_err(e: StoreError) -> PyErr {
    match e {
        StoreError::Io { .. } | StoreError::MissingManifest(_) | StoreError::MissingFile(_) => {
            PyIOError::new_err(e.to_string())
        }
        other => value_err(other),
    }
}

fn rules(stop_words: bool) -> NormalizationRules {
    if stop_words {
        NormalizationRules::default()
    } else {
        NormalizationRules::without_stop_words()
    }
}

/// Lowercase, split and drop stop words; returns the token list.
#[pyfunction]
#[pyo3(signature = (text, stop_words = true))]
fn normalize(text: &str, stop_words: bool) -> Vec<String> {
    ingest::normalize(text, &rules(stop_words)).tokens
}

#[pyclass(name = "ClickGraph", frozen)]
struct PyClickGraph(qsuggest_core::ClickGraph);

#[pymethods]
impl PyClickGraph {
    /// `edges` is a list of `(query, document, clicks)` tuples.
    #[new]
    fn new(edges: Vec<(String, String, u64)>) -> PyResult<Self> {
        let graph = qsuggest_core::ClickGraph::from_edges(edges.iter().map(|(q, d, w)| (q.as_str(), d.as_str(), *w)))
            .map_err(value_err)?;
        Ok(Self(graph))
    }

    #[getter]
    fn num_queries(&self) -> usize {
        self.0.num_queries()
    }

    fn queries(&self) -> Vec<String> {
        self.0.queries().to_vec()
    }

    fn coclick_score(&self, a: &str, b: &str) -> PyResult<u128> {
        self.0.coclick_score(a, b).map_err(|e| PyKeyError::new_err(e.to_string()))
    }

    #[pyo3(signature = (query, k = None))]
    fn connected_queries(&self, query: &str, k: Option<usize>) -> PyResult<Vec<(String, u128)>> {
        let mut ranked = self.0.connected_queries(query).map_err(|e| PyKeyError::new_err(e.to_string()))?;
        if let Some(k) = k {
            ranked.truncate(k);
        }
        Ok(ranked.into_iter().map(|c| (c.query_key, c.score)).collect())
    }
}

#[pyclass(name = "Engine", frozen)]
struct PyEngine {
    engine: Arc<Engine>,
    table: SuggestionTable,
    options: SuggestOptions,
    /// Present only for engines built in this process.
    meta: Option<BuildMeta>,
}

#[pymethods]
impl PyEngine {
    /// Opens an artifact directory written by `qsuggest build` or `save`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let loaded = store::load_engine(path).map_err(store_err)?;
        Ok(Self {
            options: loaded.manifest.settings.options,
            engine: loaded.engine,
            table: loaded.table,
            meta: None,
        })
    }

    /// Builds from `(query, document, clicks)` pairs of normalized text.
    #[staticmethod]
    #[pyo3(signature = (pairs, dim = 100, epochs = 5, min_count = 2, seed = 1, k = 10, m = 5))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        py: Python<'_>,
        pairs: Vec<(String, String, u64)>,
        dim: usize,
        epochs: usize,
        min_count: u64,
        seed: u64,
        k: usize,
        m: usize,
    ) -> PyResult<Self> {
        let pairs: Vec<QueryDocPair> = pairs
            .into_iter()
            .map(|(query_key, doc_key, click_count)| QueryDocPair { query_key, doc_key, click_count })
            .collect();
        let config = BuildConfig {
            cbow: CbowConfig { dim, epochs, min_count, seed, ..Default::default() },
            options: SuggestOptions { k, m, enrich_long_tail: false },
            ..Default::default()
        };
        config.cbow.validate().map_err(value_err)?;
        let built = py
            .detach(|| build_engine(&pairs, NormalizationRules::default(), &config))
            .map_err(value_err)?;
        let mut bytes = Vec::new();
        write_pairs(&mut bytes, &pairs).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let meta = BuildMeta {
            source_log_digest: store::sha256_hex(&bytes),
            options: config.options,
            cbow: config.cbow.clone(),
            uncovered_graph_queries: built.uncovered_graph_queries.len(),
        };
        Ok(Self {
            engine: Arc::new(built.engine),
            table: built.table,
            options: config.options,
            meta: Some(meta),
        })
    }

    /// Writes the artifact directory; returns the source digest it records.
    fn save(&self, path: &str) -> PyResult<String> {
        let meta = self
            .meta
            .as_ref()
            .ok_or_else(|| value_err("only engines built in this process can be saved"))?;
        let manifest = store::save_engine(&self.engine, &self.table, meta, path).map_err(store_err)?;
        Ok(manifest.source_log_digest)
    }

    /// Returns `(class, long_tail)`, class being "existing" or "absent".
    fn classify(&self, text: &str) -> PyResult<(String, bool)> {
        let (_, class) = self.engine.classify_text(text).map_err(value_err)?;
        Ok((class.kind.as_str().to_string(), class.long_tail))
    }

    #[pyo3(signature = (text, k = None, m = None))]
    fn suggest<'py>(
        &self,
        py: Python<'py>,
        text: &str,
        k: Option<usize>,
        m: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = SuggestOptions {
            k: k.unwrap_or(self.options.k),
            m: m.unwrap_or(self.options.m),
            ..self.options
        };
        if opts.k == 0 || opts.m == 0 {
            return Err(value_err("k and m must be positive"));
        }
        let list = self.engine.suggest(text, opts).map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("query", &list.source_query)?;
        out.set_item("class", list.class.kind.as_str())?;
        out.set_item("long_tail", list.class.long_tail)?;
        out.set_item("via", list.via.as_str())?;
        let items: Vec<(&str, f64)> = list.items.iter().map(|s| (s.query_key.as_str(), s.score)).collect();
        out.set_item("suggestions", items)?;
        out.set_item("similar", list.similar.clone())?;
        out.set_item(
            "warning",
            list.warning.map(|w| match w {
                SuggestWarning::NoCoverage => "no-coverage",
            }),
        )?;
        Ok(out)
    }

    /// Normalized query keys stored in the precomputed table.
    fn table_keys(&self) -> Vec<String> {
        self.table.iter().map(|(k, _)| k.to_string()).collect()
    }
}

fn parse_kind(kind: &str) -> PyResult<QueryKind> {
    match kind {
        "existing" => Ok(QueryKind::ClickExisting),
        "absent" => Ok(QueryKind::ClickAbsent),
        other => Err(value_err(format!("unknown class {other:?}, expected existing or absent"))),
    }
}

/// Mean annotator score mapped to a percentage.
#[pyfunction]
fn correlation_pct(mean: f64) -> u32 {
    eval::correlation_pct(mean)
}

/// `records` is a list of `(query, suggestion, annotator, score)` tuples.
#[pyfunction]
fn aggregate<'py>(
    py: Python<'py>,
    records: Vec<(String, String, String, u8)>,
    kind: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let records: Vec<AnnotationRecord> = records
        .into_iter()
        .map(|(query, suggestion, annotator_id, score)| AnnotationRecord { query, suggestion, annotator_id, score })
        .collect();
    let s = eval::aggregate(&records, parse_kind(kind)?).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("class", s.class.as_str())?;
    out.set_item("n_queries", s.n_queries)?;
    out.set_item("n_records", s.n_records)?;
    out.set_item("mean_score", s.mean_score)?;
    out.set_item("correlation_pct", s.correlation_pct)?;
    Ok(out)
}

#[pymodule]
fn qsuggest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_pct, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_class::<PyClickGraph>()?;
    m.add_class::<PyEngine>()?;
    Ok(())
}
