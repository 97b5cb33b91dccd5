//! Word-similarity and analogy scoring on a hand-built space.
//!
//! cargo run --example evaluate [wordsim.tsv]

use ndarray::array;
use outlet_lens::eval::{analogy_eval, spearman_eval, AnalogyDataset, SimilarityDataset};
use outlet_lens::train::EmbeddingSpace;
use outlet_lens::vocab::Vocabulary;

fn main() -> outlet_lens::Result<()> {
    let words = ["king", "queen", "man", "woman", "paris", "france", "rome", "italy"];
    let vocab = Vocabulary::from_counts(words.iter().enumerate().map(|(i, w)| (w.to_string(), 100 - i as u64)))?;
    let vectors = array![
        [1.0, 0.3, 0.0, 0.0],
        [1.0, -0.3, 0.0, 0.0],
        [0.1, 1.0, 0.0, 0.0],
        [0.1, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.1, 1.0, -1.0],
        [0.0, 0.0, 0.0, -1.0],
    ];
    let space = EmbeddingSpace::from_vectors(vocab, vectors)?;

    let sim = match std::env::args().nth(1) {
        Some(path) => SimilarityDataset::load_wordsim(path.as_ref())?,
        None => SimilarityDataset::parse_wordsim(
            "inline",
            "Word 1\tWord 2\tHuman (mean)\nking\tqueen\t8.5\nrome\titaly\t8.0\nparis\tfrance\t7.9\nking\tparis\t1.2\nqueen\titaly\t0.9\nunicorn\tking\t5.0\n",
        )?,
    };
    let s = spearman_eval(&space, &sim)?;
    println!("{}: rho {:.3} on {} pairs ({} skipped)", sim.name, s.rho, s.retained, s.skipped);

    let analogies = AnalogyDataset::parse(
        "inline",
        ": capital-common-countries\nparis france rome italy\n: family\nman king woman queen\n: gram1\nking queen man unicorn\n",
    )?;
    let a = analogy_eval(&space, &analogies);
    println!("analogies: {:.2} accuracy, {:.2} coverage", a.accuracy(), a.coverage());
    for (section, t) in &a.by_section {
        println!("  {section}: {}/{}", t.correct, t.answered);
    }
    Ok(())
}
