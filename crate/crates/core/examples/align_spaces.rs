//! Maps one outlet's space onto the other's and ranks words by adjusted
//! distance.
//!
//! cargo run --release --example align_spaces

use outlet_lens::align::{common_vocab, learn_mapping, map_and_score, training_words, MappingMode};
use outlet_lens::analysis::{bucketize, distant_words, Side};
use outlet_lens::corpus::{preprocess, TokenSequence};
use outlet_lens::synth::{generate, SynthConfig};
use outlet_lens::train::{train, EmbeddingSpace, TrainParams};
use outlet_lens::vocab::{build_vocab, HuffmanTree};

fn space(docs: &[TokenSequence]) -> outlet_lens::Result<EmbeddingSpace> {
    let vocab = build_vocab(docs, 5)?;
    let tree = HuffmanTree::build(&vocab)?;
    let params = TrainParams {
        dim: 50,
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
    let words = training_words(&common, MappingMode::WholeVocab);
    let mapping = learn_mapping(&src, &tgt, &words.words)?;
    let mut records = map_and_score(&src, &tgt, &mapping, &common)?;
    bucketize(&mut records, 100, Side::Src)?;
    let distant = distant_words(&records, 0.4, 0.1, 20)?;

    println!("{} common words; most distant by adjusted distance:", records.len());
    for (w, adj) in distant.by_adjusted.iter().take(8) {
        let mark = if corpus.planted.contains(w) { "  <- planted" } else { "" };
        println!("  {w:<12} {adj:.3}{mark}");
    }
    println!("{} of the top {} are absent from the cosine top list", distant.overlap.new_in_adjusted, distant.overlap.top_n);
    Ok(())
}
