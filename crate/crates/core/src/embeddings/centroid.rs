use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingModel};

/// How word vectors combine into a query vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidMode {
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCentroid {
    pub query_key: String,
    pub vector: Vec<f64>,
    pub covered_tokens: usize,
}

/// Combines the input vectors of the in-vocabulary tokens; OOV tokens are
/// skipped. Accumulation is in f64 over token indices in sorted order, so the
/// result does not depend on token order.
pub fn query_centroid<S: AsRef<str>>(
    model: &EmbeddingModel,
    tokens: &[S],
    mode: CentroidMode,
) -> Result<QueryCentroid, EmbeddingError> {
    let mut ids: Vec<u32> = tokens
        .iter()
        .filter_map(|t| model.vocab().get(t.as_ref()))
        .collect();
    if ids.is_empty() {
        return Err(EmbeddingError::NoCoverage);
    }
    ids.sort_unstable();
    let dim = model.dim();
    let mut vector = vec![0.0f64; dim];
    for id in &ids {
        let row = &model.input_matrix()[*id as usize * dim..(*id as usize + 1) * dim];
        for (acc, v) in vector.iter_mut().zip(row) {
            *acc += f64::from(*v);
        }
    }
    if mode == CentroidMode::Mean {
        let n = ids.len() as f64;
        vector.iter_mut().for_each(|v| *v /= n);
    }
    let query_key = tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ");
    Ok(QueryCentroid {
        query_key,
        vector,
        covered_tokens: ids.len(),
    })
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::DegenerateVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Centroids of every graph query, searched by exhaustive scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CentroidIndex {
    mode: CentroidMode,
    dim: usize,
    entries: Vec<QueryCentroid>,
}

impl CentroidIndex {
    /// Builds centroids for `query_keys`; queries with no in-vocabulary token
    /// are left out and returned separately.
    pub fn build<'a, I>(model: &EmbeddingModel, query_keys: I, mode: CentroidMode) -> (Self, Vec<String>)
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut entries = Vec::new();
        let mut uncovered = Vec::new();
        for key in query_keys {
            let tokens: Vec<&str> = key.split(' ').collect();
            match query_centroid(model, &tokens, mode) {
                Ok(c) => entries.push(c),
                Err(_) => uncovered.push(key.to_string()),
            }
        }
        (
            Self {
                mode,
                dim: model.dim(),
                entries,
            },
            uncovered,
        )
    }

    pub fn from_entries(
        mode: CentroidMode,
        dim: usize,
        entries: Vec<QueryCentroid>,
    ) -> Result<Self, EmbeddingError> {
        for e in &entries {
            if e.vector.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    found: e.vector.len(),
                });
            }
            if e.vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite);
            }
        }
        Ok(Self { mode, dim, entries })
    }

    pub fn mode(&self) -> CentroidMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[QueryCentroid] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Top `m` entries by cosine similarity to `probe`, descending, ties by
    /// key. The probe's own key and zero-norm entries are skipped.
    pub fn nearest(&self, probe: &QueryCentroid, m: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
        if self.entries.is_empty() {
            return Err(EmbeddingError::EmptyIndex);
        }
        let mut scored: Vec<(&str, f64)> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            if e.query_key == probe.query_key {
                continue;
            }
            match cosine(&probe.vector, &e.vector) {
                Ok(sim) => scored.push((&e.query_key, sim)),
                Err(EmbeddingError::DegenerateVector) => continue,
                Err(err) => return Err(err),
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(m);
        Ok(scored.into_iter().map(|(k, s)| (k.to_string(), s)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Vocab;

    fn model(rows: &[(&str, [f32; 2])]) -> EmbeddingModel {
        let vocab = Vocab::from_entries(rows.iter().map(|(t, _)| (t.to_string(), 1)).collect());
        let input = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        EmbeddingModel::from_parts(vocab, 2, input, vec![0.0; rows.len() * 2]).unwrap()
    }

    fn ab() -> EmbeddingModel {
        model(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])])
    }

    #[test]
    fn single_token_centroid_is_the_word_vector() {
        let c = query_centroid(&ab(), &["a"], CentroidMode::Mean).unwrap();
        assert_eq!(c.vector, vec![1.0, 0.0]);
        assert_eq!(c.covered_tokens, 1);
    }

    #[test]
    fn two_vector_mean() {
        let c = query_centroid(&ab(), &["a", "b"], CentroidMode::Mean).unwrap();
        assert_eq!(c.vector, vec![0.5, 0.5]);
        let s = query_centroid(&ab(), &["a", "b"], CentroidMode::Sum).unwrap();
        assert_eq!(s.vector, vec![1.0, 1.0]);
    }

    #[test]
    fn oov_tokens_are_skipped() {
        let c = query_centroid(&ab(), &["a", "zzz-oov"], CentroidMode::Mean).unwrap();
        assert_eq!(c.vector, vec![1.0, 0.0]);
        assert_eq!(c.covered_tokens, 1);
        assert_eq!(c.query_key, "a zzz-oov");
        assert_eq!(
            query_centroid(&ab(), &["x", "y"], CentroidMode::Mean),
            Err(EmbeddingError::NoCoverage)
        );
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(EmbeddingError::DegenerateVector));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nearest_ranks_and_excludes_probe() {
        let m = model(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0]), ("c", [1.0, 1.0])]);
        let (index, uncovered) = CentroidIndex::build(&m, ["a", "b", "c", "zz"], CentroidMode::Mean);
        assert_eq!(uncovered, ["zz"]);
        let probe = query_centroid(&m, &["a"], CentroidMode::Mean).unwrap();
        let hits = index.nearest(&probe, 10).unwrap();
        let keys: Vec<_> = hits.iter().map(|h| h.0.as_str()).collect();
        assert_eq!(keys, ["c", "b"]);

        // same vector under a different key ranks first with similarity 1
        let other = QueryCentroid { query_key: "new".into(), ..probe };
        let hits = index.nearest(&other, 1).unwrap();
        assert_eq!(hits[0].0, "a");
        assert!((hits[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nearest_ties_are_lexicographic() {
        let m = model(&[("x", [1.0, 0.0]), ("y", [1.0, 0.0]), ("p", [0.5, 0.5])]);
        let (index, _) = CentroidIndex::build(&m, ["y", "x"], CentroidMode::Mean);
        let probe = query_centroid(&m, &["p"], CentroidMode::Mean).unwrap();
        let keys: Vec<_> = index.nearest(&probe, 5).unwrap().into_iter().map(|h| h.0).collect();
        assert_eq!(keys, ["x", "y"]);
    }

    #[test]
    fn empty_index_is_an_error() {
        let m = ab();
        let probe = query_centroid(&m, &["a"], CentroidMode::Mean).unwrap();
        assert_eq!(
            CentroidIndex::default().nearest(&probe, 3),
            Err(EmbeddingError::EmptyIndex)
        );
    }
}
