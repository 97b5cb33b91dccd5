//! Frequency-filtered vocabulary, subsampling schedule and Huffman coding.

mod huffman;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

pub use huffman::HuffmanTree;

pub const DEFAULT_MIN_COUNT: u64 = 25;
pub const DEFAULT_SUBSAMPLE: f64 = 1e-5;

/// Words of one corpus ordered by descending count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    total_tokens: u64,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit counts. Entries are reordered
    /// into canonical order; duplicates are rejected.
    pub fn from_counts<I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (w, _)) in entries.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate vocabulary word {w:?}")));
            }
        }
        let total_tokens = entries.iter().map(|e| e.1).sum();
        let (words, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            words,
            counts,
            total_tokens,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Number of corpus tokens covered by the vocabulary.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Per-word probability of keeping an occurrence under subsampling rate `t`.
    pub fn keep_probabilities(&self, t: f64) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| keep_probability(c, self.total_tokens, t))
            .collect()
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    pub fn encode(&self, seq: &[String]) -> Vec<u32> {
        seq.iter().filter_map(|t| self.id(t)).map(|i| i as u32).collect()
    }
}

/// Counts tokens and keeps words seen at least `min_count` times.
pub fn build_vocab(corpus: &[TokenSequence], min_count: u64) -> Result<Vocabulary> {
    let counts = corpus
        .par_iter()
        .fold(HashMap::<&str, u64>::new, |mut acc, seq| {
            for t in seq {
                *acc.entry(t.as_str()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        });
    let vocab = Vocabulary::from_counts(
        counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(w, c)| (w.to_string(), c)),
    )?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    Ok(vocab)
}

/// `min(1, sqrt(t * total / word_freq))`.
pub fn keep_probability(word_freq: u64, total: u64, t: f64) -> f64 {
    if word_freq == 0 {
        return 1.0;
    }
    (t * total as f64 / word_freq as f64).sqrt().min(1.0)
}
