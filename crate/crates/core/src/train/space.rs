use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainParams;
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Provenance carried with a trained space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpaceMeta {
    pub window: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// A vocabulary with one input vector per word. Row `i` belongs to word id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub vocab: Vocabulary,
    pub input_vectors: Array2<f64>,
    /// Hierarchical-softmax node weights, `(|V|-1) x d`. Absent when the space
    /// was loaded from a word-vector file.
    pub inner_vectors: Option<Array2<f64>>,
    pub meta: SpaceMeta,
}

impl EmbeddingSpace {
    /// Wraps existing vectors; `vectors` must have one row per vocabulary word.
    pub fn from_vectors(vocab: Vocabulary, vectors: Array2<f64>) -> Result<Self> {
        if vectors.nrows() != vocab.len() {
            return Err(Error::DimensionMismatch(vectors.nrows(), vocab.len()));
        }
        Ok(EmbeddingSpace {
            vocab,
            input_vectors: vectors,
            inner_vectors: None,
            meta: SpaceMeta::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.input_vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector(&self, id: usize) -> ArrayView1<'_, f64> {
        self.input_vectors.row(id)
    }

    pub fn vector_of(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.vocab.id(word).map(|id| self.vector(id))
    }

    pub fn all_finite(&self) -> bool {
        self.input_vectors.iter().all(|v| v.is_finite())
            && self
                .inner_vectors
                .as_ref()
                .map_or(true, |m| m.iter().all(|v| v.is_finite()))
    }
}

/// Input vectors uniform on `[-0.5/d, 0.5/d]`, inner vectors zero.
pub fn init_embeddings(vocab: &Vocabulary, params: &TrainParams) -> Result<EmbeddingSpace> {
    if vocab.len() < 2 {
        return Err(Error::TooFewWords {
            needed: 2,
            got: vocab.len(),
        });
    }
    params.validate()?;
    let dim = params.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let input = Array2::from_shape_fn((vocab.len(), dim), |_| (rng.gen::<f64>() - 0.5) / dim as f64);
    Ok(EmbeddingSpace {
        vocab: vocab.clone(),
        input_vectors: input,
        inner_vectors: Some(Array2::zeros((vocab.len() - 1, dim))),
        meta: SpaceMeta {
            window: params.window,
            epochs: params.epochs,
            seed: params.seed,
        },
    })
}
