//! Word embeddings trained on the log corpus, query centroids and exact
//! nearest-neighbor search over in-graph queries.

mod cbow;
mod centroid;
mod vocab;

use thiserror::Error;

pub use cbow::{
    cbow_gradient, cbow_loss, train_cbow, train_cbow_with_report, CbowConfig, CbowGradient,
    TrainingReport,
};
pub use centroid::{cosine, query_centroid, CentroidIndex, CentroidMode, QueryCentroid};
pub use vocab::Vocab;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no token survives the frequency cutoff")]
    EmptyVocabulary,
    #[error("none of the query tokens are in the vocabulary")]
    NoCoverage,
    #[error("zero-norm vector")]
    DegenerateVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("centroid index is empty")]
    EmptyIndex,
    #[error("non-finite value in embedding matrix")]
    NonFinite,
}

/// Vocabulary plus input (word) and output (negative-sampling) matrices,
/// both `|vocab| × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocab,
    dim: usize,
    input: Vec<f32>,
    output: Vec<f32>,
}

impl EmbeddingModel {
    pub fn from_parts(
        vocab: Vocab,
        dim: usize,
        input: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Self, EmbeddingError> {
        let expected = vocab.len() * dim;
        for m in [&input, &output] {
            if m.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    expected,
                    found: m.len(),
                });
            }
        }
        if input.iter().chain(&output).any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self {
            vocab,
            dim,
            input,
            output,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn input_matrix(&self) -> &[f32] {
        &self.input
    }

    pub fn output_matrix(&self) -> &[f32] {
        &self.output
    }

    /// Input vector of an in-vocabulary token.
    pub fn word_vector(&self, token: &str) -> Option<&[f32]> {
        let idx = self.vocab.get(token)? as usize;
        Some(&self.input[idx * self.dim..(idx + 1) * self.dim])
    }
}
