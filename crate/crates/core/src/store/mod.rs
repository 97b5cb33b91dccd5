//! Text formats for every pipeline artifact plus the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so loading
//! a saved file reproduces the values exactly.

mod manifest;

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::align::AlignmentMatrix;
use crate::analysis::SimilarityRecord;
use crate::corpus::{PhraseTable, TokenSequence};
use crate::error::{Error, Result};
use crate::train::EmbeddingSpace;
use crate::vocab::Vocabulary;

pub use manifest::{sha256_file, ArtifactEntry, RunManifest, MANIFEST_FILE};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)> + '_> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(i, l)| (i + 1, l.map_err(|e| Error::io(path, e)))))
}

fn parse_float(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(path, line, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            path: path.to_path_buf(),
            line,
            value: s.to_string(),
        });
    }
    Ok(v)
}

macro_rules! w {
    ($out:expr, $path:expr, $($arg:tt)*) => {
        write!($out, $($arg)*).map_err(|e| Error::io($path, e))?
    };
}

/// Word vectors as read from a word2vec text file.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub words: Vec<String>,
    pub vectors: Array2<f64>,
}

/// Writes `<V> <d>` followed by one `word v1 ... vd` line per word id.
pub fn save_embeddings(space: &EmbeddingSpace, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    w!(out, path, "{} {}\n", space.len(), space.dim());
    for (id, row) in space.input_vectors.rows().into_iter().enumerate() {
        w!(out, path, "{}", space.vocab.word(id));
        for v in row {
            w!(out, path, " {v}");
        }
        w!(out, path, "\n");
    }
    finish(out, path)
}

pub fn load_embeddings(path: &Path) -> Result<WordVectors> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(Error::parse(path, 1, "empty file")),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(path, 1, "header must be `<V> <d>`")))
        .collect::<Result<_>>()?;
    let [n, d] = dims[..] else {
        return Err(Error::parse(path, 1, "header must be `<V> <d>`"));
    };
    let mut words = Vec::with_capacity(n);
    let mut seen = HashSet::with_capacity(n);
    let mut vectors = Array2::zeros((n, d));
    for (lineno, line) in &mut lines {
        let line = line?;
        if words.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(path, lineno, format!("header declares {n} words but body has more")));
        }
        let mut fields = line.split(' ').filter(|s| !s.is_empty());
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(path, lineno, "empty line"))?
            .to_string();
        let mut k = 0;
        for f in fields {
            if k == d {
                return Err(Error::parse(path, lineno, format!("more than {d} components")));
            }
            vectors[(words.len(), k)] = parse_float(path, lineno, f)?;
            k += 1;
        }
        if k != d {
            return Err(Error::parse(path, lineno, format!("expected {d} components, found {k}")));
        }
        if !seen.insert(word.clone()) {
            return Err(Error::DuplicateWord {
                path: path.to_path_buf(),
                line: lineno,
                word,
            });
        }
        words.push(word);
    }
    if words.len() < n {
        return Err(Error::parse(
            path,
            words.len() + 2,
            format!("header declares {n} words but body has {}", words.len()),
        ));
    }
    Ok(WordVectors { words, vectors })
}

/// Joins a word-vector file with its vocabulary file.
pub fn load_space(embeddings: &Path, vocab: &Path) -> Result<EmbeddingSpace> {
    let wv = load_embeddings(embeddings)?;
    let vocab = load_vocab(vocab)?;
    if wv.words.len() != vocab.len() {
        return Err(Error::DimensionMismatch(wv.words.len(), vocab.len()));
    }
    for (i, w) in wv.words.iter().enumerate() {
        if vocab.word(i) != w {
            return Err(Error::parse(
                embeddings,
                i + 2,
                format!("word {w:?} does not match vocabulary entry {:?}", vocab.word(i)),
            ));
        }
    }
    EmbeddingSpace::from_vectors(vocab, wv.vectors)
}

/// `word<TAB>count`, ordered by id.
pub fn save_vocab(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        w!(out, path, "{w}\t{c}\n");
    }
    finish(out, path)
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let mut entries = Vec::new();
    for (lineno, line) in open_lines(path)? {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (w, c) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected word<TAB>count"))?;
        let c: u64 = c
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad count {c:?}")))?;
        entries.push((w.to_string(), c));
    }
    let order: Vec<String> = entries.iter().map(|e| e.0.clone()).collect();
    let vocab = Vocabulary::from_counts(entries).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    if let Some(i) = order.iter().zip(vocab.words()).position(|(a, b)| a != b) {
        return Err(Error::parse(path, i + 1, "entries are not in descending-count order"));
    }
    Ok(vocab)
}

/// `left<TAB>right<TAB>score` lines after a `#` line recording the threshold.
pub fn save_phrases(table: &PhraseTable, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    w!(out, path, "# threshold={} min_count={}\n", table.threshold, table.min_count);
    for (l, r, s) in table.iter() {
        w!(out, path, "{l}\t{r}\t{s}\n");
    }
    finish(out, path)
}

pub fn load_phrases(path: &Path) -> Result<PhraseTable> {
    let mut table = PhraseTable::new(f64::MIN_POSITIVE, 0);
    for (lineno, line) in open_lines(path)? {
        let line = line?;
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("threshold", v)) => table.threshold = parse_float(path, lineno, v)?,
                    Some(("min_count", v)) => {
                        table.min_count = v.parse().map_err(|_| Error::parse(path, lineno, "bad min_count"))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [l, r, s] = fields[..] else {
            return Err(Error::parse(path, lineno, "expected left<TAB>right<TAB>score"));
        };
        table.insert(l, r, parse_float(path, lineno, s)?);
    }
    Ok(table)
}

/// `d d` header, then `d` rows of `d` values.
pub fn save_mapping(mapping: &AlignmentMatrix, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let d = mapping.dim();
    w!(out, path, "{d} {d}\n");
    for row in mapping.matrix.rows() {
        let mut first = true;
        for v in row {
            if !first {
                w!(out, path, " ");
            }
            w!(out, path, "{v}");
            first = false;
        }
        w!(out, path, "\n");
    }
    finish(out, path)
}

pub fn load_mapping(path: &Path) -> Result<AlignmentMatrix> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(Error::parse(path, 1, "empty file")),
    };
    let dims: Vec<&str> = header.split_whitespace().collect();
    let d: usize = match dims[..] {
        [a, b] if a == b => a.parse().map_err(|_| Error::parse(path, 1, "header must be `d d`"))?,
        _ => return Err(Error::parse(path, 1, "header must be `d d`")),
    };
    let mut matrix = Array2::zeros((d, d));
    let mut rows = 0;
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if rows == d {
            return Err(Error::parse(path, lineno, format!("more than {d} rows")));
        }
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != d {
            return Err(Error::parse(path, lineno, format!("expected {d} values, found {}", vals.len())));
        }
        for (k, v) in vals.iter().enumerate() {
            matrix[(rows, k)] = parse_float(path, lineno, v)?;
        }
        rows += 1;
    }
    if rows != d {
        return Err(Error::parse(path, rows + 2, format!("expected {d} rows, found {rows}")));
    }
    Ok(AlignmentMatrix {
        matrix,
        trained_on: None,
        source: String::new(),
        target: String::new(),
    })
}

pub const SIMILARITY_HEADER: &str = "word\tcosine\tadjusted\tfreq_src\tfreq_tgt\tbucket";

pub fn save_similarity(records: &[SimilarityRecord], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    w!(out, path, "{SIMILARITY_HEADER}\n");
    for r in records {
        let bucket = r.bucket.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
        w!(
            out,
            path,
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.word,
            r.cosine,
            r.adjusted,
            r.freq_src,
            r.freq_tgt,
            bucket
        );
    }
    finish(out, path)
}

pub fn load_similarity(path: &Path) -> Result<Vec<SimilarityRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in open_lines(path)? {
        let line = line?;
        if lineno == 1 {
            if line != SIMILARITY_HEADER {
                return Err(Error::parse(path, 1, "missing similarity header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::parse(path, lineno, "expected 6 fields"));
        }
        let count = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(path, lineno, format!("bad count {s:?}")));
        records.push(SimilarityRecord {
            word: f[0].to_string(),
            cosine: parse_float(path, lineno, f[1])?,
            adjusted: parse_float(path, lineno, f[2])?,
            freq_src: count(f[3])?,
            freq_tgt: count(f[4])?,
            bucket: match f[5] {
                "-" => None,
                b => Some(b.parse().map_err(|_| Error::parse(path, lineno, format!("bad bucket {b:?}")))?),
            },
        });
    }
    Ok(records)
}

/// One document per line, tokens separated by single spaces.
pub fn save_tokens(corpus: &[TokenSequence], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    for seq in corpus {
        w!(out, path, "{}\n", seq.join(" "));
    }
    finish(out, path)
}

pub fn load_tokens(path: &Path) -> Result<Vec<TokenSequence>> {
    open_lines(path)?
        .map(|(_, l)| l.map(|l| l.split_whitespace().map(str::to_string).collect()))
        .collect()
}

/// Writes a header row followed by tab-joined rows.
pub fn save_tsv<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: std::fmt::Display,
{
    let mut out = create(path)?;
    w!(out, path, "{}\n", header.join("\t"));
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                w!(out, path, "\t");
            }
            w!(out, path, "{cell}");
            first = false;
        }
        w!(out, path, "\n");
    }
    finish(out, path)
}

/// Reads a TSV written by [`save_tsv`], returning the header and rows.
pub fn load_tsv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for (_, line) in open_lines(path)? {
        let line = line?;
        let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
        if header.is_none() {
            header = Some(cells);
        } else if !line.is_empty() {
            rows.push(cells);
        }
    }
    Ok((header.unwrap_or_default(), rows))
}

/// One word per line, lowercased; blank lines and `#` comments ignored.
pub fn load_word_list(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}
