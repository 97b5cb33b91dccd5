//! Vocabulary, Huffman codes and skip-gram training for one outlet.
//!
//! cargo run --release --example train_space

use outlet_lens::corpus::{preprocess, TokenSequence};
use outlet_lens::synth::{generate, SynthConfig};
use outlet_lens::train::{nearest_neighbors, train_with_stats, TrainParams};
use outlet_lens::vocab::{build_vocab, HuffmanTree};

fn main() -> outlet_lens::Result<()> {
    let corpus = generate(&SynthConfig::small())?;
    let docs: Vec<TokenSequence> = corpus.outlet_documents("left").map(preprocess).collect();
    let vocab = build_vocab(&docs, 5)?;
    let tree = HuffmanTree::build(&vocab)?;
    println!("{} words, {} tokens, tree depth {}", vocab.len(), vocab.total_tokens(), tree.max_depth());
    for id in [0, 1, vocab.len() - 1] {
        let code: String = tree.code(id).iter().map(|b| char::from(b'0' + b)).collect();
        println!("  {:<10} count {:>6}  code {code}", vocab.word(id), vocab.count(id));
    }

    let params = TrainParams {
        dim: 50,
        epochs: 5,
        min_count: 5,
        ..TrainParams::default()
    };
    let (space, stats) = train_with_stats(&docs, &vocab, &tree, &params)?;
    println!("{} centers, {} pairs, final learning rate {:.2e}", stats.centers, stats.pairs, stats.last_lr);

    let probe = &corpus.controls[0];
    println!("neighbors of {probe}:");
    for (w, c) in nearest_neighbors(&space, probe, 5)? {
        println!("  {w:<12} {c:.3}");
    }
    Ok(())
}
