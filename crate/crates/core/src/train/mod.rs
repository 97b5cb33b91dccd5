//! Continuous skip-gram with hierarchical softmax.

mod hs;
mod neighbors;
mod space;

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};
use crate::vocab::{HuffmanTree, Vocabulary, DEFAULT_MIN_COUNT, DEFAULT_SUBSAMPLE};

pub use hs::{hs_log_likelihood, hs_update};
pub use neighbors::nearest_neighbors;
pub use space::{init_embeddings, EmbeddingSpace, SpaceMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub subsample: f64,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
    /// 1 runs the deterministic single-threaded trainer.
    pub threads: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dim: 300,
            window: 8,
            epochs: 10,
            min_count: DEFAULT_MIN_COUNT,
            subsample: DEFAULT_SUBSAMPLE,
            initial_lr: 0.025,
            final_lr: 1e-4,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.final_lr > 0.0 && self.final_lr <= self.initial_lr && self.initial_lr.is_finite()) {
            return bad("learning rates must satisfy 0 < final_lr <= initial_lr");
        }
        if !(self.subsample > 0.0) {
            return bad("subsample rate must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }

    /// Learning rate after `progress` of `total` expected center tokens.
    pub fn learning_rate(&self, progress: f64, total: f64) -> f64 {
        if total <= 0.0 {
            return self.initial_lr;
        }
        let lr = self.initial_lr - (self.initial_lr - self.final_lr) * (progress / total);
        lr.max(self.final_lr)
    }
}

/// Counters reported by one training run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrainStats {
    pub centers: u64,
    pub pairs: u64,
    /// Expected number of surviving center tokens over all epochs.
    pub expected_centers: f64,
    /// Learning rate of the last update (initial rate if none happened).
    pub last_lr: f64,
}

pub fn train(
    corpus: &[TokenSequence],
    vocab: &Vocabulary,
    tree: &HuffmanTree,
    params: &TrainParams,
) -> Result<EmbeddingSpace> {
    train_with_stats(corpus, vocab, tree, params).map(|(space, _)| space)
}

/// Trains one space. Each document is one training sequence; out-of-vocabulary
/// tokens are dropped and frequent tokens subsampled before windowing.
pub fn train_with_stats(
    corpus: &[TokenSequence],
    vocab: &Vocabulary,
    tree: &HuffmanTree,
    params: &TrainParams,
) -> Result<(EmbeddingSpace, TrainStats)> {
    params.validate()?;
    if tree.len() != vocab.len() {
        return Err(Error::DimensionMismatch(tree.len(), vocab.len()));
    }
    let mut space = init_embeddings(vocab, params)?;
    let docs: Vec<Vec<u32>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let keep = vocab.keep_probabilities(params.subsample);
    let per_epoch: f64 = docs
        .iter()
        .map(|d| d.iter().map(|&w| keep[w as usize]).sum::<f64>())
        .sum();
    let total = per_epoch * params.epochs as f64;

    let mut stats = if params.threads == 1 {
        train_sequential(&docs, &keep, tree, params, total, &mut space)
    } else {
        train_hogwild(&docs, &keep, tree, params, total, &mut space)
    };
    stats.expected_centers = total;
    Ok((space, stats))
}

fn doc_rng(seed: u64, epoch: usize, doc: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 40) ^ doc as u64);
    rng
}

/// Subsampled tokens of one document, each paired with the training
/// progress reached just before it.
fn survivors(doc: &[u32], keep: &[f64], progress: &mut f64, rng: &mut ChaCha8Rng) -> Vec<(u32, f64)> {
    let mut out = Vec::with_capacity(doc.len() / 4 + 1);
    for &w in doc {
        let p = keep[w as usize];
        let before = *progress;
        *progress += p;
        if p >= 1.0 || rng.gen::<f64>() < p {
            out.push((w, before));
        }
    }
    out
}

fn train_sequential(
    docs: &[Vec<u32>],
    keep: &[f64],
    tree: &HuffmanTree,
    params: &TrainParams,
    total: f64,
    space: &mut EmbeddingSpace,
) -> TrainStats {
    let dim = space.dim();
    let mut stats = TrainStats {
        last_lr: params.initial_lr,
        ..TrainStats::default()
    };
    let mut grad = vec![0.0; dim];
    let mut progress = 0.0;
    let input = space.input_vectors.as_slice_mut().expect("standard layout");
    let inner = space
        .inner_vectors
        .as_mut()
        .and_then(|m| m.as_slice_mut())
        .expect("fresh space has inner vectors");

    for epoch in 0..params.epochs {
        for (d, doc) in docs.iter().enumerate() {
            let mut rng = doc_rng(params.seed, epoch, d);
            let kept = survivors(doc, keep, &mut progress, &mut rng);
            for i in 0..kept.len() {
                let (center, at) = kept[i];
                let lr = params.learning_rate(at, total);
                let b = rng.gen_range(1..=params.window);
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(kept.len() - 1);
                let c = center as usize * dim;
                for j in (lo..=hi).filter(|&j| j != i) {
                    let target = kept[j].0 as usize;
                    hs::step_slices(
                        &mut input[c..c + dim],
                        inner,
                        dim,
                        tree.code(target),
                        tree.path(target),
                        lr,
                        &mut grad,
                    );
                    stats.pairs += 1;
                }
                stats.centers += 1;
                stats.last_lr = lr;
            }
        }
    }
    stats
}

/// Fixed-point scale for the shared progress counter.
const PROGRESS_SCALE: f64 = (1u64 << 24) as f64;

/// Document-parallel training with unsynchronized updates to shared weights.
/// Concurrent writers may overwrite each other's updates to a row, so results
/// vary between runs.
fn train_hogwild(
    docs: &[Vec<u32>],
    keep: &[f64],
    tree: &HuffmanTree,
    params: &TrainParams,
    total: f64,
    space: &mut EmbeddingSpace,
) -> TrainStats {
    let dim = space.dim();
    let to_atomic = |m: &Array2<f64>| m.iter().map(|v| AtomicU64::new(v.to_bits())).collect::<Vec<_>>();
    let input = to_atomic(&space.input_vectors);
    let inner = to_atomic(space.inner_vectors.as_ref().expect("fresh space has inner vectors"));
    let progress_fixed = AtomicU64::new(0);
    let threads = params.threads.min(docs.len().max(1));

    let per_thread: Vec<TrainStats> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (input, inner, progress_fixed) = (&input, &inner, &progress_fixed);
                scope.spawn(move || {
                    let mut stats = TrainStats {
                        last_lr: params.initial_lr,
                        ..TrainStats::default()
                    };
                    let mut center = vec![0.0; dim];
                    let mut node = vec![0.0; dim];
                    let mut grad = vec![0.0; dim];
                    for epoch in 0..params.epochs {
                        for d in (t..docs.len()).step_by(threads) {
                            let mut rng = doc_rng(params.seed, epoch, d);
                            let doc_mass: f64 = docs[d].iter().map(|&w| keep[w as usize]).sum();
                            let base = progress_fixed
                                .fetch_add((doc_mass * PROGRESS_SCALE) as u64, Ordering::Relaxed)
                                as f64
                                / PROGRESS_SCALE;
                            let mut local = base;
                            let kept = survivors(&docs[d], keep, &mut local, &mut rng);
                            for i in 0..kept.len() {
                                let (cw, at) = kept[i];
                                let lr = params.learning_rate(at, total);
                                let b = rng.gen_range(1..=params.window);
                                let lo = i.saturating_sub(b);
                                let hi = (i + b).min(kept.len() - 1);
                                let c = cw as usize * dim;
                                for j in (lo..=hi).filter(|&j| j != i) {
                                    let target = kept[j].0 as usize;
                                    load(&input[c..c + dim], &mut center);
                                    grad.fill(0.0);
                                    for (&bit, &n) in tree.code(target).iter().zip(tree.path(target)) {
                                        let s = n as usize * dim;
                                        load(&inner[s..s + dim], &mut node);
                                        hs::node_step(&center, &mut grad, &mut node, bit, lr);
                                        store(&inner[s..s + dim], &node);
                                    }
                                    for (v, g) in center.iter_mut().zip(&grad) {
                                        *v += *g;
                                    }
                                    store(&input[c..c + dim], &center);
                                    stats.pairs += 1;
                                }
                                stats.centers += 1;
                                stats.last_lr = lr;
                            }
                        }
                    }
                    stats
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trainer thread panicked")).collect()
    });

    let from_atomic = |cells: &[AtomicU64], m: &mut Array2<f64>| {
        for (dst, src) in m.iter_mut().zip(cells) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
    };
    from_atomic(&input, &mut space.input_vectors);
    from_atomic(&inner, space.inner_vectors.as_mut().unwrap());

    let last_lr = per_thread
        .iter()
        .map(|s| s.last_lr)
        .fold(params.initial_lr, f64::min);
    TrainStats {
        centers: per_thread.iter().map(|s| s.centers).sum(),
        pairs: per_thread.iter().map(|s| s.pairs).sum(),
        expected_centers: 0.0,
        last_lr,
    }
}

fn load(cells: &[AtomicU64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(cells) {
        *o = f64::from_bits(c.load(Ordering::Relaxed));
    }
}

fn store(cells: &[AtomicU64], values: &[f64]) {
    for (c, v) in cells.iter().zip(values) {
        c.store(v.to_bits(), Ordering::Relaxed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::build_vocab;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn small_corpus() -> Vec<TokenSequence> {
        (0..60)
            .map(|i| {
                if i % 2 == 0 {
                    words("apple pear fruit plum apple pear fruit plum juice apple")
                } else {
                    words("cpu ram chip disk cpu ram chip disk board cpu")
                }
            })
            .collect()
    }

    fn params() -> TrainParams {
        TrainParams {
            dim: 16,
            window: 3,
            epochs: 3,
            min_count: 1,
            subsample: 1e-3,
            ..TrainParams::default()
        }
    }

    #[test]
    fn init_ranges_and_zero_inner() {
        let corpus = small_corpus();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let p = params();
        let space = init_embeddings(&vocab, &p).unwrap();
        let bound = 0.5 / p.dim as f64;
        assert!(space.input_vectors.iter().all(|v| v.abs() <= bound));
        assert!(space.inner_vectors.as_ref().unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(space, init_embeddings(&vocab, &p).unwrap());
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let corpus = small_corpus();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let tree = HuffmanTree::build(&vocab).unwrap();
        let p = TrainParams { epochs: 0, ..params() };
        let trained = train(&corpus, &vocab, &tree, &p).unwrap();
        assert_eq!(trained, init_embeddings(&vocab, &p).unwrap());
    }

    #[test]
    fn sequential_training_is_reproducible() {
        let corpus = small_corpus();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let tree = HuffmanTree::build(&vocab).unwrap();
        let a = train(&corpus, &vocab, &tree, &params()).unwrap();
        let b = train(&corpus, &vocab, &tree, &params()).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
    }

    #[test]
    fn decay_ends_within_one_step_of_final_rate() {
        let corpus = small_corpus();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let tree = HuffmanTree::build(&vocab).unwrap();
        // keep every token so the last update sits one token before the end
        let p = TrainParams { subsample: 1.0, ..params() };
        let (_, stats) = train_with_stats(&corpus, &vocab, &tree, &p).unwrap();
        let step = (p.initial_lr - p.final_lr) / stats.expected_centers;
        assert_eq!(stats.centers as f64, stats.expected_centers);
        assert!(stats.last_lr >= p.final_lr);
        assert!(stats.last_lr - p.final_lr <= step * (1.0 + 1e-9), "{stats:?}");
    }

    #[test]
    fn multithreaded_training_stays_finite() {
        let corpus = small_corpus();
        let vocab = build_vocab(&corpus, 1).unwrap();
        let tree = HuffmanTree::build(&vocab).unwrap();
        let p = TrainParams { threads: 4, ..params() };
        let (space, stats) = train_with_stats(&corpus, &vocab, &tree, &p).unwrap();
        assert!(space.all_finite());
        assert!(stats.pairs > 0);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = TrainParams {
            final_lr: 0.1,
            initial_lr: 0.01,
            ..TrainParams::default()
        };
        assert!(p.validate().is_err());
        assert!(TrainParams { window: 0, ..TrainParams::default() }.validate().is_err());
    }
}
