//! Generates two synthetic outlets with ten context-shifted words, runs the
//! whole pipeline with the default config and shows where the shifted words
//! land.
//!
//! cargo run --release --example planted_bias [run_dir]

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use outlet_lens::analysis::ranked_by_adjusted;
use outlet_lens::corpus::InputFormat;
use outlet_lens::pipeline::{self, AnalyzeInputs, PipelineConfig, SIMILARITY_FILE};
use outlet_lens::stats::median;
use outlet_lens::store;
use outlet_lens::synth::{generate, SynthConfig};

fn main() -> outlet_lens::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let run_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("planted_bias"));
    let corpus = generate(&SynthConfig::default())?;
    let input = run_dir.join("articles.jsonl");
    corpus.write_jsonl(&input)?;

    let start = Instant::now();
    let cfg = PipelineConfig::default();
    pipeline::run_all(&input, InputFormat::Jsonl, &run_dir, &cfg, &[], &AnalyzeInputs::default())?;
    println!("pipeline finished in {:.1?}", start.elapsed());

    let records = store::load_similarity(&run_dir.join(SIMILARITY_FILE))?;
    let ranked = ranked_by_adjusted(&records);
    let cutoff = (records.len() as f64 * 0.05).ceil() as usize;
    let planted: HashSet<&str> = corpus.planted.iter().map(String::as_str).collect();
    println!("{} common words, top 5% = {cutoff}", records.len());
    for (rank, r) in ranked.iter().enumerate().filter(|(_, r)| planted.contains(r.word.as_str())) {
        println!("{:>6} {:<12} cosine {:>6.3} adjusted {:>6.3} freq {}", rank + 1, r.word, r.cosine, r.adjusted, r.freq_src);
    }
    let controls: HashSet<&str> = corpus.controls.iter().map(String::as_str).collect();
    let cos_of = |set: &HashSet<&str>| -> Vec<f64> {
        records.iter().filter(|r| set.contains(r.word.as_str())).map(|r| r.cosine).collect()
    };
    println!(
        "median cosine: controls {:.3}, planted {:.3}",
        median(&cos_of(&controls)).unwrap_or(f64::NAN),
        median(&cos_of(&planted)).unwrap_or(f64::NAN)
    );
    Ok(())
}
