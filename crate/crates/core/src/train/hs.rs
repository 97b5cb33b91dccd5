//! Hierarchical-softmax gradient step.

use super::EmbeddingSpace;
use crate::vocab::HuffmanTree;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn fast_dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One node of the path: updates `node` in place and accumulates the
/// center-vector gradient into `grad`.
#[inline]
pub(crate) fn node_step(center: &[f64], grad: &mut [f64], node: &mut [f64], bit: u8, lr: f64) {
    let p = sigmoid(fast_dot(center, node));
    let g = lr * (1.0 - bit as f64 - p);
    for ((gk, wk), &vk) in grad.iter_mut().zip(node.iter_mut()).zip(center) {
        *gk += g * *wk;
        *wk += g * vk;
    }
}

/// Walks `target`'s Huffman path from the center word's input vector,
/// raising `sum_j log sigmoid((1 - 2 b_j) v . w_j)`.
pub(crate) fn step_slices(
    center: &mut [f64],
    inner: &mut [f64],
    dim: usize,
    code: &[u8],
    path: &[u32],
    lr: f64,
    grad: &mut [f64],
) {
    grad.fill(0.0);
    for (&bit, &node) in code.iter().zip(path) {
        let start = node as usize * dim;
        node_step(center, grad, &mut inner[start..start + dim], bit, lr);
    }
    for (v, g) in center.iter_mut().zip(grad.iter()) {
        *v += *g;
    }
}

/// In-place gradient step for the pair (center word, target word).
///
/// # Panics
///
/// Panics if the space has no inner vectors (e.g. it was loaded from a
/// word-vector file rather than trained).
pub fn hs_update(center: usize, target: usize, lr: f64, space: &mut EmbeddingSpace, tree: &HuffmanTree) {
    let dim = space.dim();
    let mut grad = vec![0.0; dim];
    let inner = space
        .inner_vectors
        .as_mut()
        .expect("hierarchical softmax needs inner vectors");
    let inner = inner.as_slice_mut().expect("standard layout");
    let mut row = space.input_vectors.row_mut(center);
    let center_vec = row.as_slice_mut().expect("standard layout");
    step_slices(center_vec, inner, dim, tree.code(target), tree.path(target), lr, &mut grad);
}

/// Log-likelihood of `target` given `center` under the current weights.
pub fn hs_log_likelihood(space: &EmbeddingSpace, tree: &HuffmanTree, center: usize, target: usize) -> f64 {
    let inner = space.inner_vectors.as_ref().expect("hierarchical softmax needs inner vectors");
    let v = space.input_vectors.row(center);
    tree.code(target)
        .iter()
        .zip(tree.path(target))
        .map(|(&bit, &node)| {
            let w = inner.row(node as usize);
            let sign = 1.0 - 2.0 * bit as f64;
            sigmoid(sign * v.dot(&w)).ln()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{init_embeddings, TrainParams};
    use crate::vocab::Vocabulary;

    fn toy_space(n: usize, dim: usize) -> (EmbeddingSpace, HuffmanTree) {
        let vocab = Vocabulary::from_counts((0..n).map(|i| (format!("w{i:02}"), 100 - i as u64))).unwrap();
        let params = TrainParams {
            dim,
            ..TrainParams::default()
        };
        let tree = HuffmanTree::build(&vocab).unwrap();
        (init_embeddings(&vocab, &params).unwrap(), tree)
    }

    #[test]
    fn zero_inner_vectors_give_half_probability() {
        let (mut space, tree) = toy_space(10, 5);
        let v = space.vector(3).to_owned();
        let lr = 0.1;
        hs_update(3, 7, lr, &mut space, &tree);
        let inner = space.inner_vectors.as_ref().unwrap();
        for (&bit, &node) in tree.code(7).iter().zip(tree.path(7)) {
            let expected = &v * (lr * (1.0 - bit as f64 - 0.5));
            for (a, b) in inner.row(node as usize).iter().zip(expected.iter()) {
                assert!((a - b).abs() < 1e-18);
            }
        }
        // all inner vectors were zero, so the center gradient is zero too
        assert_eq!(space.vector(3), v.view());
    }

    #[test]
    fn fast_dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((fast_dot(&a, &b) - naive).abs() < 1e-12);
    }
}
