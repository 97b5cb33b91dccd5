//! Seeded generator for two-outlet corpora with known context shifts.
//!
//! Both outlets draw articles from the same topics over the same pseudo-word
//! vocabulary. A handful of planted words sit in one topic for the first
//! outlet and in a different topic for the second, so their usage diverges
//! while every other word keeps its context. Fixed collocations give the
//! phrase detector something to find.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub outlets: [String; 2],
    pub docs_per_outlet: usize,
    pub min_doc_len: usize,
    pub max_doc_len: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub function_words: usize,
    /// Share of body tokens drawn from the function words.
    pub function_rate: f64,
    pub planted: usize,
    /// Per-token chance of emitting the topic's collocation instead.
    pub collocation_rate: f64,
}

impl Default for SynthConfig {
    /// About one million tokens per outlet.
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            outlets: ["left".into(), "right".into()],
            docs_per_outlet: 5000,
            min_doc_len: 150,
            max_doc_len: 250,
            topics: 30,
            words_per_topic: 100,
            function_words: 50,
            function_rate: 0.4,
            planted: 10,
            collocation_rate: 0.01,
        }
    }
}

impl SynthConfig {
    /// A quick corpus of roughly 60K tokens per outlet.
    pub fn small() -> Self {
        SynthConfig {
            docs_per_outlet: 400,
            min_doc_len: 120,
            max_doc_len: 180,
            topics: 8,
            words_per_topic: 40,
            function_words: 20,
            planted: 4,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    /// Words whose topic differs between the outlets.
    pub planted: Vec<String>,
    /// Topic words used identically by both outlets.
    pub controls: Vec<String>,
    pub function_words: Vec<String>,
    /// Word sequences always emitted together; the last one has three words.
    pub collocations: Vec<Vec<String>>,
}

impl SynthCorpus {
    pub fn outlet_documents<'a>(&'a self, outlet: &'a str) -> impl Iterator<Item = &'a Document> + 'a {
        self.documents.iter().filter(move |d| d.outlet == outlet)
    }

    /// One JSON object per line, in the ingestion format.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for d in &self.documents {
            let rec = serde_json::json!({"id": d.id, "title": d.title, "body": d.body, "outlet": d.outlet});
            writeln!(out, "{rec}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr", "br", "kl",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

struct WordMaker {
    rng: ChaCha8Rng,
    seen: HashSet<String>,
}

impl WordMaker {
    fn make(&mut self, syllables: usize) -> String {
        loop {
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS[self.rng.gen_range(0..ONSETS.len())]);
                w.push_str(VOWELS[self.rng.gen_range(0..VOWELS.len())]);
            }
            if self.seen.insert(w.clone()) {
                return w;
            }
        }
    }
}

struct Topic {
    words: Vec<String>,
    sampler: WeightedIndex<f64>,
}

impl Topic {
    fn new(words: Vec<String>) -> Self {
        let weights: Vec<f64> = (0..words.len()).map(|r| 1.0 / (r as f64 + 10.0)).collect();
        let sampler = WeightedIndex::new(weights).expect("positive weights");
        Topic { words, sampler }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.topics < 2 || cfg.words_per_topic < 2 || cfg.function_words == 0 {
        return Err(Error::InvalidParameter("need at least 2 topics of 2 words and a function word".into()));
    }
    if cfg.planted > cfg.topics * cfg.words_per_topic / 2 {
        return Err(Error::InvalidParameter("too many planted words".into()));
    }
    if cfg.min_doc_len == 0 || cfg.max_doc_len < cfg.min_doc_len {
        return Err(Error::InvalidParameter("document length range is empty".into()));
    }
    let mut maker = WordMaker {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        seen: HashSet::new(),
    };
    let function_words: Vec<String> = (0..cfg.function_words)
        .map(|_| {
            let n = 1 + usize::from(maker.rng.gen_bool(0.3));
            maker.make(n)
        })
        .collect();
    let topic_words: Vec<Vec<String>> = (0..cfg.topics)
        .map(|_| {
            (0..cfg.words_per_topic)
                .map(|_| {
                    let n = maker.rng.gen_range(2..=3);
                    maker.make(n)
                })
                .collect()
        })
        .collect();
    let planted: Vec<String> = (0..cfg.planted).map(|_| maker.make(3)).collect();
    let mut collocations: Vec<Vec<String>> = (0..cfg.topics).map(|_| vec![maker.make(3), maker.make(3)]).collect();
    collocations.last_mut().expect("topics >= 2").push(maker.make(3));

    // planted word i: topic 2i for the first outlet, 2i+1 for the second, at
    // the rank of the topic's third most frequent word
    let outlet_topics: [Vec<Topic>; 2] = [0usize, 1].map(|side| {
        topic_words
            .iter()
            .enumerate()
            .map(|(t, words)| {
                let mut words = words.clone();
                for (i, p) in planted.iter().enumerate() {
                    if (2 * i + side) % cfg.topics == t {
                        words.insert(2.min(words.len()), p.clone());
                    }
                }
                Topic::new(words)
            })
            .collect()
    });
    let fn_sampler =
        WeightedIndex::new((0..function_words.len()).map(|r| 1.0 / (r as f64 + 1.0))).expect("positive weights");

    let mut documents = Vec::with_capacity(2 * cfg.docs_per_outlet);
    for (side, outlet) in cfg.outlets.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(side as u64 + 1);
        let topics = &outlet_topics[side];
        for n in 0..cfg.docs_per_outlet {
            let t = rng.gen_range(0..cfg.topics);
            let topic = &topics[t];
            let len = rng.gen_range(cfg.min_doc_len..=cfg.max_doc_len);
            let title_words: Vec<String> = (0..6).map(|_| capitalize(&topic.words[topic.sampler.sample(&mut rng)])).collect();
            let mut body = String::new();
            let mut in_sentence = 0;
            let mut emitted = 0;
            while emitted < len {
                let piece: Vec<&str> = if rng.gen_bool(cfg.collocation_rate) {
                    collocations[t].iter().map(String::as_str).collect()
                } else if rng.gen_bool(cfg.function_rate) {
                    vec![function_words[fn_sampler.sample(&mut rng)].as_str()]
                } else {
                    vec![topic.words[topic.sampler.sample(&mut rng)].as_str()]
                };
                for w in piece {
                    if in_sentence == 0 {
                        body.push_str(&capitalize(w));
                    } else {
                        body.push(' ');
                        body.push_str(w);
                    }
                    in_sentence += 1;
                    emitted += 1;
                }
                if in_sentence >= 12 && rng.gen_bool(0.2) {
                    body.push_str(". ");
                    in_sentence = 0;
                }
            }
            body.push('.');
            documents.push(Document {
                id: format!("{outlet}-{n:05}"),
                title: title_words.join(" "),
                body,
                outlet: outlet.clone(),
            });
        }
    }
    let controls = topic_words.into_iter().flatten().collect();
    Ok(SynthCorpus {
        documents,
        planted,
        controls,
        function_words,
        collocations,
    })
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}
