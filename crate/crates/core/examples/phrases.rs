//! Two-pass phrase detection on a synthetic corpus.
//!
//! cargo run --release --example phrases

use outlet_lens::corpus::{apply_phrases, detect_phrases, preprocess, TokenSequence};
use outlet_lens::synth::{generate, SynthConfig};

fn main() -> outlet_lens::Result<()> {
    let corpus = generate(&SynthConfig::small())?;
    let docs: Vec<TokenSequence> = corpus.documents.iter().map(preprocess).collect();

    let pass1 = detect_phrases(&docs, 90.0, 25)?;
    println!("pass 1 (threshold 90): {} phrases", pass1.len());
    for (a, b, score) in pass1.iter().take(5) {
        println!("  {a} {b}  {score:.1}");
    }
    let merged: Vec<TokenSequence> = docs.iter().map(|d| apply_phrases(d, &pass1)).collect();
    let pass2 = detect_phrases(&merged, 120.0, 25)?;
    println!("pass 2 (threshold 120): {} phrases", pass2.len());
    for (a, b, score) in pass2.iter() {
        println!("  {a} {b}  {score:.1}");
    }

    let trigram = corpus.collocations.last().expect("collocations").clone();
    let once = apply_phrases(&trigram, &pass1);
    let twice = apply_phrases(&once, &pass2);
    println!("{} -> {} -> {}", trigram.join(" "), once.join(" "), twice.join(" "));
    Ok(())
}
