//! Intrinsic evaluation: word similarity (Spearman) and analogies (3CosAdd).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::stats::{cosine, spearman};
use crate::train::EmbeddingSpace;

/// Human-scored word pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
    pub scale: (f64, f64),
}

impl SimilarityDataset {
    /// Tab-separated `word word score` lines; a non-numeric first line is a header.
    pub fn parse_wordsim(name: &str, text: &str) -> Result<Self> {
        Self::parse(name, text, (0.0, 10.0), |l| l.split('\t').collect(), false)
    }

    /// Space-separated `word word score` triples. Part-of-speech suffixes
    /// such as `-n` are removed.
    pub fn parse_men(name: &str, text: &str) -> Result<Self> {
        Self::parse(name, text, (0.0, 50.0), |l| l.split_whitespace().collect(), true)
    }

    pub fn load_wordsim(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_wordsim(&dataset_name(path), &text).map_err(|e| with_path(e, path))
    }

    pub fn load_men(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_men(&dataset_name(path), &text).map_err(|e| with_path(e, path))
    }

    fn parse(
        name: &str,
        text: &str,
        scale: (f64, f64),
        split: impl Fn(&str) -> Vec<&str>,
        strip_pos: bool,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = split(line).into_iter().map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::parse(name, i + 1, "expected word, word, score"));
            }
            let Ok(score) = fields[2].parse::<f64>() else {
                if pairs.is_empty() && seen.is_empty() {
                    continue; // header
                }
                return Err(Error::parse(name, i + 1, format!("bad score {:?}", fields[2])));
            };
            if !(scale.0..=scale.1).contains(&score) {
                return Err(Error::parse(name, i + 1, format!("score {score} outside {scale:?}")));
            }
            let norm = |w: &str| {
                let w = w.to_lowercase();
                match w.rsplit_once('-') {
                    Some((base, "n" | "v" | "j")) if strip_pos => base.to_string(),
                    _ => w,
                }
            };
            let (a, b) = (norm(fields[0]), norm(fields[1]));
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if !seen.insert(key) {
                log::warn!("{name}:{}: duplicate pair {a} {b} dropped", i + 1);
                continue;
            }
            pairs.push((a, b, score));
        }
        Ok(SimilarityDataset {
            name: name.to_string(),
            pairs,
            scale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SectionKind {
    Semantic,
    Syntactic,
}

impl SectionKind {
    /// Sections whose name starts with `gram` are syntactic.
    pub fn of(section: &str) -> Self {
        if section.starts_with("gram") {
            SectionKind::Syntactic
        } else {
            SectionKind::Semantic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Semantic => "semantic",
            SectionKind::Syntactic => "syntactic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
    pub section: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyDataset {
    pub name: String,
    pub questions: Vec<AnalogyQuestion>,
}

impl AnalogyDataset {
    /// `: section` headers followed by `a b c d` lines.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut section = String::from("default");
        let mut questions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(':') {
                section = rest.trim().to_string();
                continue;
            }
            let w: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if w.len() != 4 {
                return Err(Error::parse(name, i + 1, "expected four words"));
            }
            let distinct: HashSet<&String> = w.iter().collect();
            if distinct.len() != 4 {
                log::warn!("{name}:{}: question with repeated words dropped", i + 1);
                continue;
            }
            let mut it = w.into_iter();
            questions.push(AnalogyQuestion {
                a: it.next().unwrap(),
                b: it.next().unwrap(),
                c: it.next().unwrap(),
                expected: it.next().unwrap(),
                section: section.clone(),
            });
        }
        Ok(AnalogyDataset {
            name: name.to_string(),
            questions,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&dataset_name(path), &text).map_err(|e| with_path(e, path))
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message, .. } => Error::parse(path, line, message),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub rho: f64,
    pub coverage: f64,
    pub retained: usize,
    pub skipped: usize,
}

/// Spearman correlation between human scores and model cosines over the
/// pairs whose words are both in vocabulary.
pub fn spearman_eval(space: &EmbeddingSpace, ds: &SimilarityDataset) -> Result<SimilarityScore> {
    let mut human = Vec::new();
    let mut model = Vec::new();
    for (a, b, score) in &ds.pairs {
        if let (Some(va), Some(vb)) = (space.vector_of(a), space.vector_of(b)) {
            human.push(*score);
            model.push(cosine(va.as_slice().unwrap(), vb.as_slice().unwrap()));
        }
    }
    let total = ds.pairs.len();
    if human.len() < 2 {
        return Err(Error::TooFewPairs {
            retained: human.len(),
            total,
        });
    }
    Ok(SimilarityScore {
        rho: spearman(&human, &model),
        coverage: human.len() as f64 / total as f64,
        retained: human.len(),
        skipped: total - human.len(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub correct: usize,
    pub answered: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.answered == 0 {
            0.0
        } else {
            self.correct as f64 / self.answered as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyScore {
    pub overall: Tally,
    pub total: usize,
    pub by_kind: BTreeMap<SectionKind, Tally>,
    pub by_section: BTreeMap<String, Tally>,
}

impl AnalogyScore {
    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy()
    }

    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.overall.answered as f64 / self.total as f64
        }
    }

    pub fn skipped(&self) -> usize {
        self.total - self.overall.answered
    }
}

/// Length-normalizes every row; zero rows stay zero.
pub fn normalized_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let n = row.dot(&row).sqrt();
        if n > 0.0 {
            row /= n;
        }
    }
    out
}

/// 3CosAdd over normalized vectors: the answer is the word (other than a, b, c)
/// maximizing cosine with `b - a + c`.
pub fn analogy_eval(space: &EmbeddingSpace, ds: &AnalogyDataset) -> AnalogyScore {
    let unit = normalized_rows(&space.input_vectors);
    let mut score = AnalogyScore {
        overall: Tally::default(),
        total: ds.questions.len(),
        by_kind: BTreeMap::new(),
        by_section: BTreeMap::new(),
    };
    for q in &ds.questions {
        let ids = [&q.a, &q.b, &q.c, &q.expected].map(|w| space.vocab.id(w));
        let [Some(a), Some(b), Some(c), Some(d)] = ids else {
            continue;
        };
        let query: Array1<f64> = &unit.row(b) - &unit.row(a) + unit.row(c);
        let sims = unit.dot(&query);
        let mut best: Option<(usize, f64)> = None;
        for (id, &s) in sims.iter().enumerate() {
            if id == a || id == b || id == c {
                continue;
            }
            if best.map_or(true, |(_, bs)| s > bs) {
                best = Some((id, s));
            }
        }
        let hit = best.is_some_and(|(id, _)| id == d);
        for tally in [
            &mut score.overall,
            score.by_kind.entry(SectionKind::of(&q.section)).or_default(),
            score.by_section.entry(q.section.clone()).or_default(),
        ] {
            tally.answered += 1;
            tally.correct += usize::from(hit);
        }
    }
    score
}
