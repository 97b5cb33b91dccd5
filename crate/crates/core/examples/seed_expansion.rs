//! Expands seed words through nearest neighbors in each outlet's space and
//! summarizes the candidates' cross-outlet distances.
//!
//! cargo run --release --example seed_expansion

use std::collections::HashSet;

use outlet_lens::align::{common_vocab, learn_mapping, map_and_score, training_words, MappingMode};
use outlet_lens::analysis::{bucketize, expand_seeds, group_stats, SeedLexicon, Side};
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
    let builtin = SeedLexicon::builtin();
    println!("bundled lexicon: {} words across {} issues", builtin.seeds.len(), builtin.issues().len());

    let corpus = generate(&SynthConfig::small())?;
    let left: Vec<TokenSequence> = corpus.outlet_documents("left").map(preprocess).collect();
    let right: Vec<TokenSequence> = corpus.outlet_documents("right").map(preprocess).collect();
    let (src, tgt) = (space(&left)?, space(&right)?);

    // synthetic words stand in for real seeds here
    let text: String = corpus.controls.iter().step_by(40).map(|w| format!("topic\t{w}\n")).collect();
    let seeds = SeedLexicon::parse(&text)?;
    let expansion = expand_seeds(&src, &seeds, 10);
    for (seed, neighbors) in &expansion.neighbors {
        let list: Vec<&str> = neighbors.iter().take(5).map(|(w, _)| w.as_str()).collect();
        println!("{seed}: {}", list.join(" "));
    }

    let common = common_vocab(&src, &tgt)?;
    let mapping = learn_mapping(&src, &tgt, &training_words(&common, MappingMode::WholeVocab).words)?;
    let mut records = map_and_score(&src, &tgt, &mapping, &common)?;
    bucketize(&mut records, 100, Side::Src)?;
    let candidates: HashSet<String> = expansion.candidates().into_iter().collect();
    let everything: HashSet<String> = records.iter().map(|r| r.word.clone()).collect();
    for (name, group) in [("candidates", &candidates), ("all", &everything)] {
        let g = group_stats(&records, name, group)?;
        println!("{name}: {} words, median cosine {:.3}, median adjusted {:.3}", g.n_found, g.median_cosine, g.median_adjusted);
    }
    Ok(())
}
