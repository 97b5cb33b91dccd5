//! Linear mapping between two embedding spaces and PCA projections.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::analysis::SimilarityRecord;
use crate::error::{Error, Result};
use crate::stats::cosine;
use crate::train::EmbeddingSpace;

/// A word present in both spaces with its per-space count and 0-based rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonWord {
    pub word: String,
    pub freq_src: u64,
    pub freq_tgt: u64,
    pub rank_src: usize,
    pub rank_tgt: usize,
}

/// Words shared by two spaces, ordered by the sum of their frequency ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonVocabulary {
    pub words: Vec<CommonWord>,
}

impl CommonVocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CommonWord> {
        self.words.iter()
    }
}

pub fn common_vocab(src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Result<CommonVocabulary> {
    let mut words: Vec<CommonWord> = src
        .vocab
        .words()
        .iter()
        .enumerate()
        .filter_map(|(rank_src, w)| {
            let rank_tgt = tgt.vocab.id(w)?;
            Some(CommonWord {
                word: w.clone(),
                freq_src: src.vocab.count(rank_src),
                freq_tgt: tgt.vocab.count(rank_tgt),
                rank_src,
                rank_tgt,
            })
        })
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyCommonVocabulary);
    }
    words.sort_by(|a, b| {
        (a.rank_src + a.rank_tgt)
            .cmp(&(b.rank_src + b.rank_tgt))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(CommonVocabulary { words })
}

/// Which words the mapping is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MappingMode {
    /// The `n` most frequent common words.
    Top(usize),
    WholeVocab,
}

impl fmt::Display for MappingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingMode::Top(n) => write!(f, "top-{n}"),
            MappingMode::WholeVocab => f.write_str("whole-vocab"),
        }
    }
}

impl FromStr for MappingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "whole-vocab" || s == "whole" {
            return Ok(MappingMode::WholeVocab);
        }
        s.strip_prefix("top-")
            .and_then(|n| n.parse().ok())
            .filter(|&n| n > 0)
            .map(MappingMode::Top)
            .ok_or_else(|| Error::InvalidParameter(format!("mapping mode {s:?} is not `whole-vocab` or `top-N`")))
    }
}

impl TryFrom<String> for MappingMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MappingMode> for String {
    fn from(m: MappingMode) -> String {
        m.to_string()
    }
}

/// Training words chosen for a mapping mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingWords {
    pub words: Vec<String>,
    /// True when `Top(n)` asked for more words than the common vocabulary has.
    pub truncated: bool,
}

pub fn training_words(common: &CommonVocabulary, mode: MappingMode) -> TrainingWords {
    let (n, truncated) = match mode {
        MappingMode::WholeVocab => (common.len(), false),
        MappingMode::Top(n) => (n.min(common.len()), n > common.len()),
    };
    TrainingWords {
        words: common.words[..n].iter().map(|w| w.word.clone()).collect(),
        truncated,
    }
}

/// `d x d` linear map taking source vectors into the target space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    pub matrix: Array2<f64>,
    pub trained_on: Option<MappingMode>,
    pub source: String,
    pub target: String,
}

impl AlignmentMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.matrix.dot(&x)
    }
}

fn gather(space: &EmbeddingSpace, words: &[String]) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((words.len(), space.dim()));
    for (mut row, w) in m.axis_iter_mut(Axis(0)).zip(words) {
        let v = space.vector_of(w).ok_or_else(|| Error::UnknownWord(w.clone()))?;
        row.assign(&v);
    }
    Ok(m)
}

fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(m.nrows(), m.ncols(), m.iter().copied())
}

/// Least-squares map `W = argmin sum_i |W x_i - z_i|^2` over `train_words`,
/// solved through ridge-regularized normal equations with
/// `lambda = 1e-6 * trace(X^T X) / d`.
pub fn learn_mapping(src: &EmbeddingSpace, tgt: &EmbeddingSpace, train_words: &[String]) -> Result<AlignmentMatrix> {
    let d = src.dim();
    if tgt.dim() != d {
        return Err(Error::DimensionMismatch(d, tgt.dim()));
    }
    if train_words.is_empty() {
        return Err(Error::Degenerate("no training words".into()));
    }
    if train_words.len() < d {
        log::warn!(
            "learning a {d}x{d} mapping from only {} words; the fit is underdetermined without the ridge term",
            train_words.len()
        );
    }
    let x = gather(src, train_words)?;
    let z = gather(tgt, train_words)?;
    let xtx = x.t().dot(&x);
    let xtz = x.t().dot(&z);
    let trace = xtx.diag().sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::Degenerate("source vectors are all zero or non-finite".into()));
    }
    let lambda = 1e-6 * trace / d as f64;
    let mut gram = to_nalgebra(&xtx);
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("normal equations are not positive definite".into()))?;
    // solves (X^T X + lambda I) W^T = X^T Z
    let wt = chol.solve(&to_nalgebra(&xtz));
    let matrix = Array2::from_shape_fn((d, d), |(i, j)| wt[(j, i)]);
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("mapping has non-finite entries".into()));
    }
    Ok(AlignmentMatrix {
        matrix,
        trained_on: None,
        source: String::new(),
        target: String::new(),
    })
}

/// Squared residual `sum_i |W x_i - z_i|^2` over `words`.
pub fn mapping_residual(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    matrix: &Array2<f64>,
    words: &[String],
) -> Result<f64> {
    let x = gather(src, words)?;
    let z = gather(tgt, words)?;
    let diff = x.dot(&matrix.t()) - z;
    Ok(diff.iter().map(|v| v * v).sum())
}

/// Cosine between each mapped source vector and its target vector.
pub fn map_and_score(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    mapping: &AlignmentMatrix,
    common: &CommonVocabulary,
) -> Result<Vec<SimilarityRecord>> {
    let words: Vec<String> = common.iter().map(|w| w.word.clone()).collect();
    let mapped = gather(src, &words)?.dot(&mapping.matrix.t());
    let z = gather(tgt, &words)?;
    Ok(common
        .iter()
        .enumerate()
        .map(|(i, cw)| {
            let cos = cosine(
                mapped.row(i).as_slice().expect("contiguous"),
                z.row(i).as_slice().expect("contiguous"),
            );
            SimilarityRecord::new(&cw.word, cos, cw.freq_src, cw.freq_tgt)
        })
        .collect())
}

/// Result of a PCA projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// One row per input vector.
    pub coords: Array2<f64>,
    /// Variance captured by each component, descending.
    pub variances: Vec<f64>,
    /// Unit principal axes, one per row.
    pub components: Array2<f64>,
    pub mean: Array1<f64>,
}

/// Projects mean-centered rows onto the top `out_dim` principal components.
/// Each component's largest-magnitude loading is made positive.
pub fn pca_project(vectors: &Array2<f64>, out_dim: usize) -> Result<Projection> {
    let (n, d) = vectors.dim();
    if n < 2 {
        return Err(Error::TooFewWords { needed: 2, got: n });
    }
    if out_dim == 0 || out_dim > d {
        return Err(Error::InvalidParameter(format!("cannot project {d} dims onto {out_dim}")));
    }
    let mean = vectors.mean_axis(Axis(0)).expect("non-empty");
    let centered = vectors - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(to_nalgebra(&cov));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    if !(top > 1e-300) {
        return Err(Error::ZeroVariance);
    }
    let mut components = Array2::zeros((out_dim, d));
    let mut variances = Vec::with_capacity(out_dim);
    for (k, &idx) in order.iter().take(out_dim).enumerate() {
        let col = eig.eigenvectors.column(idx);
        let pivot = col.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(k, j)] = sign * col[j];
        }
        variances.push(eig.eigenvalues[idx].max(0.0));
    }
    let coords = centered.dot(&components.t());
    Ok(Projection {
        coords,
        variances,
        components,
        mean,
    })
}
