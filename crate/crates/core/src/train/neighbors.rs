use super::EmbeddingSpace;
use crate::error::{Error, Result};

/// Top-`k` words by cosine similarity to `word`, excluding `word` itself.
/// Ties are broken by word id; `k` is truncated to `|V| - 1`.
pub fn nearest_neighbors(space: &EmbeddingSpace, word: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let query_id = space.vocab.id(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let query = space.vector(query_id);
    let qn = query.dot(&query).sqrt();
    let mut scored: Vec<(usize, f64)> = space
        .input_vectors
        .rows()
        .into_iter()
        .enumerate()
        .filter(|&(id, _)| id != query_id)
        .map(|(id, row)| {
            let denom = qn * row.dot(&row).sqrt();
            let cos = if denom > 0.0 { (row.dot(&query) / denom).clamp(-1.0, 1.0) } else { 0.0 };
            (id, cos)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, cos)| (space.vocab.word(id).to_string(), cos))
        .collect())
}
