//! Article ingestion, tokenization and two-pass phrase merging.

mod phrases;
mod tokenize;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

pub use phrases::{apply_phrases, detect_phrases, score_bigram, PhraseCounts, PhraseTable, JOINER};
pub use tokenize::{preprocess, tokenize, tokenize_bounded, MAX_TOKEN_LEN, MIN_TOKEN_LEN};

/// One news article.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub body: String,
    pub outlet: String,
}

impl Document {
    /// Title and body as one text, the title forming a leading sentence.
    pub fn full_text(&self) -> String {
        if self.title.trim().is_empty() {
            self.body.clone()
        } else {
            format!("{}.\n{}", self.title.trim_end(), self.body)
        }
    }
}

/// Lowercase tokens of one document; the whole article is one training sequence.
pub type TokenSequence = Vec<String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line with `id`, `title`, `body`, `outlet`.
    Jsonl,
    /// `<root>/<outlet>/<file>.txt`; the first line of a multi-line file is its title.
    PlainDir,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "plain-dir" | "plain" => Ok(InputFormat::PlainDir),
            other => Err(Error::InvalidParameter(format!("unknown input format {other:?}"))),
        }
    }
}

/// Documents in deterministic order plus the number of skipped records.
#[derive(Debug, Default)]
pub struct Ingested {
    pub documents: Vec<Document>,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    title: String,
    body: String,
    outlet: String,
}

/// Reads articles from `path`. Records with an empty body or an outlet not in
/// `outlets` are skipped and counted; unreadable files are hard errors.
pub fn ingest(path: &Path, format: InputFormat, outlets: &[String]) -> Result<Ingested> {
    let mut out = Ingested::default();
    match format {
        InputFormat::Jsonl => {
            let files = if path.is_dir() {
                sorted_entries(path)?
                    .into_iter()
                    .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
                    .collect()
            } else {
                vec![path.to_path_buf()]
            };
            for file in files {
                ingest_jsonl(&file, outlets, &mut out)?;
            }
        }
        InputFormat::PlainDir => {
            for outlet_dir in sorted_entries(path)? {
                if !outlet_dir.is_dir() {
                    continue;
                }
                let outlet = outlet_dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                for file in sorted_entries(&outlet_dir)? {
                    if !file.is_file() || file.extension().map_or(true, |e| e != "txt") {
                        continue;
                    }
                    let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
                    let Ok(text) = String::from_utf8(bytes) else {
                        log::warn!("{}: not valid UTF-8, skipped", file.display());
                        out.skipped += 1;
                        continue;
                    };
                    let id = file
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let (title, body) = split_title(&text);
                    let doc = Document {
                        id,
                        title,
                        body,
                        outlet: outlet.clone(),
                    };
                    push_valid(doc, outlets, &mut out, &file);
                }
            }
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} malformed records", out.skipped);
    }
    Ok(out)
}

fn ingest_jsonl(file: &Path, outlets: &[String], out: &mut Ingested) -> Result<()> {
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JsonRecord>(line) {
            Ok(rec) => {
                let doc = Document {
                    id: rec.id,
                    title: rec.title,
                    body: rec.body,
                    outlet: rec.outlet,
                };
                push_valid(doc, outlets, out, file);
            }
            Err(e) => {
                log::warn!("{}:{}: malformed record: {e}", file.display(), lineno + 1);
                out.skipped += 1;
            }
        }
    }
    Ok(())
}

fn push_valid(doc: Document, outlets: &[String], out: &mut Ingested, origin: &Path) {
    if doc.body.trim().is_empty() {
        log::warn!("{}: document {:?} has an empty body", origin.display(), doc.id);
        out.skipped += 1;
    } else if !outlets.iter().any(|o| *o == doc.outlet) {
        log::warn!("{}: document {:?} has unknown outlet {:?}", origin.display(), doc.id, doc.outlet);
        out.skipped += 1;
    } else {
        out.documents.push(doc);
    }
}

fn split_title(text: &str) -> (String, String) {
    let trimmed = text.trim_start();
    match trimmed.split_once('\n') {
        Some((first, rest)) if !rest.trim().is_empty() => (first.trim().to_string(), rest.to_string()),
        _ => (String::new(), trimmed.to_string()),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        entries.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    entries.sort();
    Ok(entries)
}
