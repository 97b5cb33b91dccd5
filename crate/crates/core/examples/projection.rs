//! Two-dimensional PCA view of source, mapped and target vectors.
//!
//! cargo run --release --example projection

use ndarray::Array2;
use outlet_lens::align::{common_vocab, learn_mapping, pca_project, training_words, MappingMode};
use outlet_lens::corpus::{preprocess, TokenSequence};
use outlet_lens::synth::{generate, SynthConfig};
use outlet_lens::train::{train, EmbeddingSpace, TrainParams};
use outlet_lens::vocab::{build_vocab, HuffmanTree};

fn space(docs: &[TokenSequence]) -> outlet_lens::Result<EmbeddingSpace> {
    let vocab = build_vocab(docs, 5)?;
    let tree = HuffmanTree::build(&vocab)?;
    let params = TrainParams {
        dim: 30,
        epochs: 5,
        min_count: 5,
        ..TrainParams::default()
    };
    train(docs, &vocab, &tree, &params)
}

fn main() -> outlet_lens::Result<()> {
    let corpus = generate(&SynthConfig::small())?;
    let left: Vec<TokenSequence> = corpus.outlet_documents("left").map(preprocess).collect();
    let right: Vec<TokenSequence> = corpus.outlet_documents("right").map(preprocess).collect();
    let (src, tgt) = (space(&left)?, space(&right)?);
    let common = common_vocab(&src, &tgt)?;
    let mapping = learn_mapping(&src, &tgt, &training_words(&common, MappingMode::WholeVocab).words)?;

    let words: Vec<&str> = corpus.planted.iter().chain(corpus.controls.iter().take(4)).map(String::as_str).collect();
    let n = words.len();
    let mut stacked = Array2::zeros((3 * n, src.dim()));
    for (i, w) in words.iter().enumerate() {
        let x = src.vector_of(w).expect("common word");
        stacked.row_mut(i).assign(&x);
        stacked.row_mut(n + i).assign(&mapping.apply(x));
        stacked.row_mut(2 * n + i).assign(&tgt.vector_of(w).expect("common word"));
    }
    let proj = pca_project(&stacked, 2)?;
    let total: f64 = proj.variances.iter().sum();
    println!("word\tx\ty\tseries   (2 components, variance {total:.4})");
    for (i, series) in ["source", "mapped", "target"].iter().enumerate() {
        for (k, w) in words.iter().enumerate() {
            let c = proj.coords.row(i * n + k);
            println!("{w}\t{:.4}\t{:.4}\t{series}", c[0], c[1]);
        }
    }
    Ok(())
}
