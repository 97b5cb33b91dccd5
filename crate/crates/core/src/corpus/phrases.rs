use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::TokenSequence;
use crate::error::{Error, Result};

pub const JOINER: &str = "_";

/// Collocation score `(count_ab - min_count) * vocab_words / (count_a * count_b)`,
/// where `vocab_words` is the number of tokens in the counting pass.
pub fn score_bigram(count_ab: u64, count_a: u64, count_b: u64, vocab_words: u64, min_count: u64) -> f64 {
    (count_ab as f64 - min_count as f64) * vocab_words as f64 / (count_a as f64 * count_b as f64)
}

/// Unigram and adjacent-bigram counts of one pass over a corpus.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct PhraseCounts {
    pub unigrams: HashMap<String, u64>,
    pub bigrams: HashMap<String, HashMap<String, u64>>,
    pub total_tokens: u64,
}

impl PhraseCounts {
    pub fn from_corpus(corpus: &[TokenSequence]) -> Self {
        corpus
            .par_iter()
            .fold(PhraseCounts::default, |mut acc, seq| {
                acc.add_sequence(seq);
                acc
            })
            .reduce(PhraseCounts::default, PhraseCounts::merge)
    }

    fn add_sequence(&mut self, seq: &[String]) {
        self.total_tokens += seq.len() as u64;
        for (i, tok) in seq.iter().enumerate() {
            bump(&mut self.unigrams, tok, 1);
            if let Some(next) = seq.get(i + 1) {
                let inner = match self.bigrams.get_mut(tok.as_str()) {
                    Some(m) => m,
                    None => self.bigrams.entry(tok.clone()).or_default(),
                };
                bump(inner, next, 1);
            }
        }
    }

    fn merge(mut self, other: PhraseCounts) -> PhraseCounts {
        if self.total_tokens < other.total_tokens {
            return other.merge(self);
        }
        self.total_tokens += other.total_tokens;
        for (w, c) in other.unigrams {
            *self.unigrams.entry(w).or_insert(0) += c;
        }
        for (a, nexts) in other.bigrams {
            let inner = self.bigrams.entry(a).or_default();
            for (b, c) in nexts {
                *inner.entry(b).or_insert(0) += c;
            }
        }
        self
    }

    pub fn bigram(&self, a: &str, b: &str) -> u64 {
        self.bigrams.get(a).and_then(|m| m.get(b)).copied().unwrap_or(0)
    }

    pub fn unigram(&self, a: &str) -> u64 {
        self.unigrams.get(a).copied().unwrap_or(0)
    }
}

fn bump(map: &mut HashMap<String, u64>, key: &str, by: u64) {
    match map.get_mut(key) {
        Some(c) => *c += by,
        None => {
            map.insert(key.to_string(), by);
        }
    }
}

/// Scored bigrams that are merged into single tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseTable {
    entries: BTreeMap<String, BTreeMap<String, f64>>,
    pub threshold: f64,
    pub min_count: u64,
}

impl PhraseTable {
    pub fn new(threshold: f64, min_count: u64) -> Self {
        PhraseTable {
            entries: BTreeMap::new(),
            threshold,
            min_count,
        }
    }

    pub fn insert(&mut self, left: &str, right: &str, score: f64) {
        self.entries
            .entry(left.to_string())
            .or_default()
            .insert(right.to_string(), score);
    }

    pub fn score(&self, left: &str, right: &str) -> Option<f64> {
        self.entries.get(left)?.get(right).copied()
    }

    pub fn contains(&self, left: &str, right: &str) -> bool {
        self.score(left, right).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in lexicographic `(left, right)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries
            .iter()
            .flat_map(|(l, m)| m.iter().map(move |(r, s)| (l.as_str(), r.as_str(), *s)))
    }
}

/// Counts the corpus once and keeps every bigram scoring at least `threshold`.
pub fn detect_phrases(corpus: &[TokenSequence], threshold: f64, min_count: u64) -> Result<PhraseTable> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "phrase threshold must be positive, got {threshold}"
        )));
    }
    let counts = PhraseCounts::from_corpus(corpus);
    let mut table = PhraseTable::new(threshold, min_count);
    for (a, nexts) in &counts.bigrams {
        let count_a = counts.unigrams[a];
        for (b, &count_ab) in nexts {
            if count_ab <= min_count {
                continue;
            }
            let score = score_bigram(count_ab, count_a, counts.unigrams[b], counts.total_tokens, min_count);
            if score >= threshold {
                table.insert(a, b, score);
            }
        }
    }
    Ok(table)
}

/// Greedy left-to-right merge of adjacent pairs found in `table`.
pub fn apply_phrases(seq: &[String], table: &PhraseTable) -> TokenSequence {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && table.contains(&seq[i], &seq[i + 1]) {
            out.push(format!("{}{JOINER}{}", seq[i], seq[i + 1]));
            i += 2;
        } else {
            out.push(seq[i].clone());
            i += 1;
        }
    }
    out
}
