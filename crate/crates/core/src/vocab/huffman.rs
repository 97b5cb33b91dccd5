use super::Vocabulary;
use crate::error::{Error, Result};

/// Binary Huffman coding of a vocabulary for hierarchical softmax.
///
/// `codes[w][j]` is the branch taken at inner node `paths[w][j]`, root first.
/// Inner nodes are numbered `0..len-1` in creation order, so the root is the
/// last one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    pub fn build(vocab: &Vocabulary) -> Result<Self> {
        Self::from_counts(vocab.counts())
    }

    /// Two-queue construction. On equal weights the node with the lower id
    /// (leaves before inner nodes, then creation order) is merged first.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::TooFewWords { needed: 2, got: n });
        }
        let mut leaves: Vec<usize> = (0..n).collect();
        leaves.sort_by_key(|&i| (counts[i], i));

        let mut weight: Vec<u64> = counts.to_vec();
        weight.resize(2 * n - 1, 0);
        let mut parent = vec![usize::MAX; 2 * n - 1];
        let mut branch = vec![0u8; 2 * n - 1];

        let (mut next_leaf, mut next_inner) = (0usize, n);
        let mut pick = |created: usize, weight: &[u64]| -> usize {
            let leaf = leaves.get(next_leaf).copied();
            let inner = (next_inner < created).then_some(next_inner);
            let take_leaf = match (leaf, inner) {
                (Some(l), Some(i)) => (weight[l], l) <= (weight[i], i),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!("queues exhausted"),
            };
            if take_leaf {
                next_leaf += 1;
                leaf.unwrap()
            } else {
                next_inner += 1;
                inner.unwrap()
            }
        };

        for created in n..2 * n - 1 {
            let first = pick(created, &weight);
            let second = pick(created, &weight);
            weight[created] = weight[first] + weight[second];
            parent[first] = created;
            parent[second] = created;
            branch[second] = 1;
        }

        let root = 2 * n - 2;
        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(branch[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(HuffmanTree { codes, paths })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn inner_nodes(&self) -> usize {
        self.codes.len().saturating_sub(1)
    }

    pub fn code(&self, word: usize) -> &[u8] {
        &self.codes[word]
    }

    pub fn path(&self, word: usize) -> &[u32] {
        &self.paths[word]
    }

    pub fn max_depth(&self) -> usize {
        self.codes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sum over words of `count * code length`.
    pub fn weighted_length(&self, counts: &[u64]) -> u64 {
        self.codes
            .iter()
            .zip(counts)
            .map(|(c, &n)| c.len() as u64 * n)
            .sum()
    }
}
