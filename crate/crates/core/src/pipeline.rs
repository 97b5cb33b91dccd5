//! Run-directory stages.
//!
//! Every stage reads its inputs from the run directory, checks them against
//! the manifest, writes its artifacts and records their checksums. Stages can
//! be rerun in any order once their inputs exist.
//!
//! Layout of a run directory:
//!
//! | file | stage |
//! |---|---|
//! | `corpus.<outlet>.tok` | preprocess |
//! | `phrases.pass1.tsv`, `phrases.pass2.tsv` | phrases |
//! | `vocab.<outlet>.tsv`, `embeddings.<outlet>.txt` | train |
//! | `eval.tsv` | eval |
//! | `mapping.txt` | align |
//! | `similarity.tsv`, `distant.*.tsv`, `close.tsv`, `buckets.tsv`, `expansion.<outlet>.tsv`, `groups.tsv`, `classification.tsv`, `analysis.tsv` | analyze |
//! | `report.*.tsv`, `plot.*.tsv` | report |

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::align::{
    common_vocab, learn_mapping, map_and_score, mapping_residual, pca_project, training_words, MappingMode,
};
use crate::analysis::{
    bucketize, classify_distant, close_words, distant_words, expand_seeds, freq_similarity_correlation,
    group_stats, ranked_by_adjusted, Correlation, SeedLexicon, Side, SimilarityRecord,
};
use crate::corpus::{apply_phrases, detect_phrases, ingest, tokenize_bounded, InputFormat, PhraseTable, TokenSequence, JOINER};
use crate::error::{Error, Result};
use crate::eval::{analogy_eval, spearman_eval, AnalogyDataset, SimilarityDataset};
use crate::stats::median;
use crate::store::{self, RunManifest};
use crate::train::{train_with_stats, EmbeddingSpace, TrainParams, TrainStats};
use crate::vocab::{build_vocab, HuffmanTree};

/// The unit fed to the trainer as one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceUnit {
    /// No sentence splitting; each article is one sequence.
    #[default]
    WholeArticle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputLayer {
    #[default]
    HierarchicalSoftmax,
}

/// All settings of a run. Loaded from TOML; missing keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Exactly two outlets; the first is the mapping source.
    pub outlets: Vec<String>,
    pub min_token_len: usize,
    pub max_token_len: usize,
    pub include_titles: bool,
    pub sentence_unit: SentenceUnit,
    pub output_layer: OutputLayer,
    pub phrase_threshold1: f64,
    pub phrase_threshold2: f64,
    pub phrase_min_count: u64,
    pub mapping_mode: MappingMode,
    pub cos_threshold: f64,
    pub adj_threshold: f64,
    pub close_threshold: f64,
    pub bucket_size: usize,
    pub bucket_by: Side,
    pub correlation: Correlation,
    /// Length of the distant-word lists compared across rankings.
    pub top_n: usize,
    /// Neighbors listed per seed word.
    pub neighbors: usize,
    pub short_len: usize,
    /// Most frequent common words shown in the projection.
    pub projection_words: usize,
    pub histogram_bins: usize,
    pub train: TrainParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            outlets: vec!["left".into(), "right".into()],
            min_token_len: crate::corpus::MIN_TOKEN_LEN,
            max_token_len: crate::corpus::MAX_TOKEN_LEN,
            include_titles: true,
            sentence_unit: SentenceUnit::WholeArticle,
            output_layer: OutputLayer::HierarchicalSoftmax,
            phrase_threshold1: 90.0,
            phrase_threshold2: 120.0,
            phrase_min_count: 25,
            mapping_mode: MappingMode::WholeVocab,
            cos_threshold: 0.4,
            adj_threshold: 0.1,
            close_threshold: 0.6,
            bucket_size: 1000,
            bucket_by: Side::Src,
            correlation: Correlation::Spearman,
            top_n: 1000,
            neighbors: 20,
            short_len: 3,
            projection_words: 50,
            histogram_bins: 40,
            train: TrainParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.outlets.len() != 2 || self.outlets[0] == self.outlets[1] {
            return bad(format!("need two distinct outlets, got {:?}", self.outlets));
        }
        if let Some(o) = self.outlets.iter().find(|o| o.is_empty() || o.contains(['/', '\\', '.'])) {
            return bad(format!("outlet name {o:?} cannot be used in file names"));
        }
        if self.min_token_len == 0 || self.max_token_len < self.min_token_len {
            return bad("token length bounds are empty".into());
        }
        if !(self.phrase_threshold1 > 0.0 && self.phrase_threshold2 > 0.0) {
            return bad("phrase thresholds must be positive".into());
        }
        if self.bucket_size < 3 {
            return bad(format!("bucket size must be at least 3, got {}", self.bucket_size));
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be at least 1".into());
        }
        self.train.validate()
    }

    pub fn source(&self) -> &str {
        &self.outlets[0]
    }

    pub fn target(&self) -> &str {
        &self.outlets[1]
    }

    fn manifest_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn corpus_file(outlet: &str) -> String {
    format!("corpus.{outlet}.tok")
}

pub fn vocab_file(outlet: &str) -> String {
    format!("vocab.{outlet}.tsv")
}

pub fn embeddings_file(outlet: &str) -> String {
    format!("embeddings.{outlet}.txt")
}

pub fn phrases_file(pass: u8) -> String {
    format!("phrases.pass{pass}.tsv")
}

pub fn expansion_file(outlet: &str) -> String {
    format!("expansion.{outlet}.tsv")
}

pub const MAPPING_FILE: &str = "mapping.txt";
pub const SIMILARITY_FILE: &str = "similarity.tsv";
pub const EVAL_FILE: &str = "eval.tsv";

/// Files written by `report`.
pub const REPORT_FILES: [&str; 7] = [
    "report.outlets.tsv",
    "report.mapping.tsv",
    "plot.projection.tsv",
    "plot.cosine_hist.tsv",
    "plot.adjusted_hist.tsv",
    "plot.bucket_medians.tsv",
    "plot.freq_cosine.tsv",
];

struct Run<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> Run<'a> {
    fn open(dir: &'a Path, cfg: &'a PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let mut manifest = RunManifest::read(dir)?;
        manifest.config = cfg.manifest_value();
        Ok(Run { dir, manifest })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn require(&self, name: &str, stage: &str) -> Result<PathBuf> {
        self.manifest.require(self.dir, name, stage)?;
        Ok(self.path(name))
    }

    fn record(&mut self, name: &str, stage: &str) -> Result<()> {
        self.manifest.record(self.dir, name, stage)
    }

    fn save(&self) -> Result<()> {
        self.manifest.save(self.dir)
    }

    fn tokens(&self, outlet: &str) -> Result<Vec<TokenSequence>> {
        store::load_tokens(&self.require(&corpus_file(outlet), "preprocess")?)
    }

    fn phrase_table(&self, pass: u8) -> Result<PhraseTable> {
        store::load_phrases(&self.require(&phrases_file(pass), "phrases")?)
    }

    /// Preprocessed corpus with both phrase passes applied.
    fn phrased(&self, outlet: &str) -> Result<Vec<TokenSequence>> {
        let p1 = self.phrase_table(1)?;
        let p2 = self.phrase_table(2)?;
        Ok(self
            .tokens(outlet)?
            .iter()
            .map(|s| apply_phrases(&apply_phrases(s, &p1), &p2))
            .collect())
    }

    fn space(&self, outlet: &str) -> Result<EmbeddingSpace> {
        let emb = self.require(&embeddings_file(outlet), "train")?;
        let vocab = self.require(&vocab_file(outlet), "train")?;
        store::load_space(&emb, &vocab)
    }

    fn write_tsv<R, I>(&mut self, name: &str, stage: &str, header: &[&str], rows: I) -> Result<()>
    where
        R: IntoIterator,
        R::Item: fmt::Display,
        I: IntoIterator<Item = R>,
    {
        store::save_tsv(&self.path(name), header, rows)?;
        self.record(name, stage)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutletCorpus {
    pub outlet: String,
    pub documents: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub outlets: Vec<OutletCorpus>,
    pub skipped: usize,
}

/// Ingests raw articles and writes one token file per outlet. Starts a new
/// manifest unless one exists.
pub fn preprocess(input: &Path, format: InputFormat, run_dir: &Path, cfg: &PipelineConfig) -> Result<PreprocessSummary> {
    cfg.validate()?;
    let ingested = ingest(input, format, &cfg.outlets)?;
    let mut manifest = match RunManifest::read(run_dir) {
        Ok(m) => m,
        Err(Error::MissingArtifact { .. }) => RunManifest::new(cfg.manifest_value()),
        Err(e) => return Err(e),
    };
    manifest.config = cfg.manifest_value();
    manifest.inputs.clear();
    manifest.record_input(input)?;
    let mut run = Run { dir: run_dir, manifest };
    let mut outlets = Vec::new();
    for outlet in &cfg.outlets {
        let seqs: Vec<TokenSequence> = ingested
            .documents
            .iter()
            .filter(|d| &d.outlet == outlet)
            .map(|d| {
                let text = if cfg.include_titles { d.full_text() } else { d.body.clone() };
                tokenize_bounded(&text, cfg.min_token_len, cfg.max_token_len)
            })
            .collect();
        if seqs.is_empty() {
            log::warn!("outlet {outlet:?} has no documents");
        }
        let name = corpus_file(outlet);
        store::save_tokens(&seqs, &run.path(&name))?;
        run.record(&name, "preprocess")?;
        outlets.push(OutletCorpus {
            outlet: outlet.clone(),
            documents: seqs.len(),
            tokens: seqs.iter().map(Vec::len).sum(),
        });
    }
    run.save()?;
    Ok(PreprocessSummary {
        outlets,
        skipped: ingested.skipped,
    })
}

/// Learns one phrase pass over both outlets together. Pass 2 runs on the
/// corpus rewritten by pass 1.
pub fn phrases(run_dir: &Path, cfg: &PipelineConfig, pass: u8) -> Result<PhraseTable> {
    let mut run = Run::open(run_dir, cfg)?;
    let mut corpus = Vec::new();
    for outlet in &cfg.outlets {
        corpus.extend(run.tokens(outlet)?);
    }
    let table = match pass {
        1 => detect_phrases(&corpus, cfg.phrase_threshold1, cfg.phrase_min_count)?,
        2 => {
            let p1 = run.phrase_table(1)?;
            let merged: Vec<TokenSequence> = corpus.iter().map(|s| apply_phrases(s, &p1)).collect();
            detect_phrases(&merged, cfg.phrase_threshold2, cfg.phrase_min_count)?
        }
        other => return Err(Error::InvalidParameter(format!("phrase pass must be 1 or 2, got {other}"))),
    };
    let name = phrases_file(pass);
    store::save_phrases(&table, &run.path(&name))?;
    run.record(&name, "phrases")?;
    run.save()?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub outlet: String,
    pub vocab_size: usize,
    pub tokens: u64,
    pub stats: TrainStats,
}

/// Trains the embedding space of each outlet, or only `only` if given.
pub fn train(run_dir: &Path, cfg: &PipelineConfig, only: Option<&str>) -> Result<Vec<TrainSummary>> {
    let mut run = Run::open(run_dir, cfg)?;
    let outlets: Vec<&String> = cfg.outlets.iter().filter(|o| only.map_or(true, |x| x == o.as_str())).collect();
    if outlets.is_empty() {
        return Err(Error::InvalidParameter(format!("unknown outlet {:?}", only.unwrap_or_default())));
    }
    let mut out = Vec::new();
    for outlet in outlets {
        let corpus = run.phrased(outlet)?;
        let vocab = build_vocab(&corpus, cfg.train.min_count)?;
        let tree = HuffmanTree::build(&vocab)?;
        log::info!("training {outlet}: {} words, {} tokens", vocab.len(), vocab.total_tokens());
        let (space, stats) = train_with_stats(&corpus, &vocab, &tree, &cfg.train)?;
        let vname = vocab_file(outlet);
        store::save_vocab(&vocab, &run.path(&vname))?;
        run.record(&vname, "train")?;
        let ename = embeddings_file(outlet);
        store::save_embeddings(&space, &run.path(&ename))?;
        run.record(&ename, "train")?;
        out.push(TrainSummary {
            outlet: outlet.clone(),
            vocab_size: vocab.len(),
            tokens: vocab.total_tokens(),
            stats,
        });
        run.save()?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    WordSim,
    Men,
    Analogy,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wordsim" | "ws353" => Ok(DatasetKind::WordSim),
            "men" => Ok(DatasetKind::Men),
            "analogy" | "google" => Ok(DatasetKind::Analogy),
            _ => Err(Error::InvalidParameter(format!("unknown dataset kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalDataset {
    pub kind: DatasetKind,
    pub path: PathBuf,
}

impl FromStr for EvalDataset {
    type Err = Error;

    /// `kind=path`, e.g. `men=data/MEN_dataset_natural_form_full`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, path) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("dataset {s:?} is not kind=path")))?;
        Ok(EvalDataset {
            kind: kind.parse()?,
            path: PathBuf::from(path),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub outlet: String,
    pub dataset: String,
    pub metric: String,
    pub value: f64,
    pub coverage: f64,
}

impl fmt::Display for EvalRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}\t{}", self.outlet, self.dataset, self.metric, self.value, self.coverage)
    }
}

enum Loaded {
    Sim(SimilarityDataset),
    Analogy(AnalogyDataset),
}

/// Scores every outlet space on each dataset.
pub fn eval(run_dir: &Path, cfg: &PipelineConfig, datasets: &[EvalDataset]) -> Result<Vec<EvalRow>> {
    let mut run = Run::open(run_dir, cfg)?;
    let loaded: Vec<Loaded> = datasets
        .iter()
        .map(|d| {
            Ok(match d.kind {
                DatasetKind::WordSim => Loaded::Sim(SimilarityDataset::load_wordsim(&d.path)?),
                DatasetKind::Men => Loaded::Sim(SimilarityDataset::load_men(&d.path)?),
                DatasetKind::Analogy => Loaded::Analogy(AnalogyDataset::load(&d.path)?),
            })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for outlet in &cfg.outlets {
        let space = run.space(outlet)?;
        for ds in &loaded {
            match ds {
                Loaded::Sim(ds) => match spearman_eval(&space, ds) {
                    Ok(s) => rows.push(EvalRow {
                        outlet: outlet.clone(),
                        dataset: ds.name.clone(),
                        metric: "spearman".into(),
                        value: s.rho,
                        coverage: s.coverage,
                    }),
                    Err(Error::TooFewPairs { retained, total }) => {
                        log::warn!("{outlet}: {}: only {retained} of {total} pairs in vocabulary", ds.name);
                    }
                    Err(e) => return Err(e),
                },
                Loaded::Analogy(ds) => {
                    let s = analogy_eval(&space, ds);
                    let cov = s.coverage();
                    let mut push = |metric: String, value: f64| {
                        rows.push(EvalRow {
                            outlet: outlet.clone(),
                            dataset: ds.name.clone(),
                            metric,
                            value,
                            coverage: cov,
                        })
                    };
                    push("accuracy".into(), s.accuracy());
                    for (kind, t) in &s.by_kind {
                        push(format!("accuracy_{}", kind.as_str()), t.accuracy());
                    }
                }
            }
        }
    }
    run.write_tsv(EVAL_FILE, "eval", &["outlet", "dataset", "metric", "value", "coverage"], rows.iter().map(|r| [r]))?;
    run.save()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignSummary {
    pub common_words: usize,
    pub train_words: usize,
    /// A top-N mode asked for more words than the common vocabulary has.
    pub truncated: bool,
    pub residual: f64,
}

/// Learns the source-to-target mapping.
pub fn align(run_dir: &Path, cfg: &PipelineConfig) -> Result<AlignSummary> {
    let mut run = Run::open(run_dir, cfg)?;
    let src = run.space(cfg.source())?;
    let tgt = run.space(cfg.target())?;
    let common = common_vocab(&src, &tgt)?;
    let chosen = training_words(&common, cfg.mapping_mode);
    if chosen.truncated {
        log::warn!(
            "{} requested but only {} common words exist; training on all of them",
            cfg.mapping_mode,
            common.len()
        );
    }
    let mut mapping = learn_mapping(&src, &tgt, &chosen.words)?;
    mapping.trained_on = Some(cfg.mapping_mode);
    mapping.source = cfg.source().to_string();
    mapping.target = cfg.target().to_string();
    let residual = mapping_residual(&src, &tgt, &mapping.matrix, &chosen.words)?;
    store::save_mapping(&mapping, &run.path(MAPPING_FILE))?;
    run.record(MAPPING_FILE, "align")?;
    run.save()?;
    Ok(AlignSummary {
        common_words: common.len(),
        train_words: chosen.words.len(),
        truncated: chosen.truncated,
        residual,
    })
}

/// Optional word lists for `analyze`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalyzeInputs {
    /// `issue<TAB>word` file replacing the bundled seeds.
    pub seeds: Option<PathBuf>,
    /// External word list reported as its own group.
    pub lexicon: Option<PathBuf>,
    /// Name gazetteer for classifying distant words.
    pub names: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub common_words: usize,
    pub median_cosine: f64,
    pub distant_by_cosine: usize,
    pub distant_by_adjusted: usize,
    pub new_in_adjusted: usize,
    pub correlation_src: f64,
    pub correlation_tgt: f64,
}

/// Scores the mapped common vocabulary and writes every word-level analysis.
pub fn analyze(run_dir: &Path, cfg: &PipelineConfig, inputs: &AnalyzeInputs) -> Result<AnalyzeSummary> {
    let mut run = Run::open(run_dir, cfg)?;
    const STAGE: &str = "analyze";
    let src = run.space(cfg.source())?;
    let tgt = run.space(cfg.target())?;
    let mapping = store::load_mapping(&run.require(MAPPING_FILE, "align")?)?;
    let common = common_vocab(&src, &tgt)?;
    let mut records = map_and_score(&src, &tgt, &mapping, &common)?;
    let buckets = bucketize(&mut records, cfg.bucket_size, cfg.bucket_by)?;
    store::save_similarity(&records, &run.path(SIMILARITY_FILE))?;
    run.record(SIMILARITY_FILE, STAGE)?;

    let distant = distant_words(&records, cfg.cos_threshold, cfg.adj_threshold, cfg.top_n)?;
    run.write_tsv(
        "distant.cosine.tsv",
        STAGE,
        &["word", "cosine"],
        distant.by_cosine.iter().map(|(w, c)| [w.to_string(), c.to_string()]),
    )?;
    run.write_tsv(
        "distant.adjusted.tsv",
        STAGE,
        &["word", "adjusted"],
        distant.by_adjusted.iter().map(|(w, a)| [w.to_string(), a.to_string()]),
    )?;
    run.write_tsv(
        "close.tsv",
        STAGE,
        &["word", "cosine"],
        close_words(&records, cfg.close_threshold).iter().map(|(w, c)| [w.to_string(), c.to_string()]),
    )?;
    let bucket_rows: Vec<[String; 5]> = buckets
        .iter()
        .map(|b| {
            let freqs: Vec<u64> = records
                .iter()
                .filter(|r| r.bucket == Some(b.id))
                .map(|r| side_freq(r, cfg.bucket_by))
                .collect();
            [
                b.id.to_string(),
                b.words.len().to_string(),
                b.median_cosine.to_string(),
                freqs.iter().max().copied().unwrap_or(0).to_string(),
                freqs.iter().min().copied().unwrap_or(0).to_string(),
            ]
        })
        .collect();
    run.write_tsv("buckets.tsv", STAGE, &["bucket", "size", "median_cosine", "max_freq", "min_freq"], bucket_rows)?;

    let seeds = match &inputs.seeds {
        Some(p) => SeedLexicon::parse(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => SeedLexicon::builtin(),
    };
    let mut candidates: HashSet<String> = HashSet::new();
    for (outlet, space) in [(cfg.source(), &src), (cfg.target(), &tgt)] {
        let exp = expand_seeds(space, &seeds, cfg.neighbors);
        if !exp.skipped.is_empty() {
            log::info!("{outlet}: {} seed words not in vocabulary", exp.skipped.len());
        }
        candidates.extend(exp.candidates());
        let rows: Vec<[String; 4]> = exp
            .neighbors
            .iter()
            .flat_map(|(seed, ns)| {
                ns.iter()
                    .enumerate()
                    .map(move |(i, (w, c))| [seed.clone(), (i + 1).to_string(), w.clone(), c.to_string()])
            })
            .collect();
        run.write_tsv(&expansion_file(outlet), STAGE, &["seed", "rank", "neighbor", "cosine"], rows)?;
    }

    let mut groups: Vec<(String, HashSet<String>)> = vec![
        ("all".into(), records.iter().map(|r| r.word.clone()).collect()),
        ("seeds".into(), seeds.words().into_iter().collect()),
        ("seed_neighbors".into(), candidates),
    ];
    if let Some(p) = &inputs.lexicon {
        groups.push(("lexicon".into(), store::load_word_list(p)?));
    }
    let mut group_rows = Vec::new();
    for (name, set) in &groups {
        match group_stats(&records, name, set) {
            Ok(g) => group_rows.push([
                g.group,
                g.n_group.to_string(),
                g.n_found.to_string(),
                g.median_cosine.to_string(),
                g.median_adjusted.to_string(),
            ]),
            Err(Error::EmptyGroup { group }) => log::warn!("group {group:?} has no common words"),
            Err(e) => return Err(e),
        }
    }
    run.write_tsv(
        "groups.tsv",
        STAGE,
        &["group", "n_group", "n_found", "median_cosine", "median_adjusted"],
        group_rows,
    )?;

    let names = match &inputs.names {
        Some(p) => store::load_word_list(p)?,
        None => HashSet::new(),
    };
    let top: Vec<String> = ranked_by_adjusted(&records).iter().take(cfg.top_n).map(|r| r.word.clone()).collect();
    let class = classify_distant(&top, &names, cfg.short_len);
    run.write_tsv(
        "classification.tsv",
        STAGE,
        &["word", "category"],
        class.labels.iter().map(|(w, c)| [w.clone(), c.to_string()]),
    )?;

    let cosines: Vec<f64> = records.iter().map(|r| r.cosine).collect();
    let summary = AnalyzeSummary {
        common_words: records.len(),
        median_cosine: median(&cosines).unwrap_or(0.0),
        distant_by_cosine: distant.by_cosine.len(),
        distant_by_adjusted: distant.by_adjusted.len(),
        new_in_adjusted: distant.overlap.new_in_adjusted,
        correlation_src: freq_similarity_correlation(&records, Side::Src, cfg.correlation).unwrap_or(f64::NAN),
        correlation_tgt: freq_similarity_correlation(&records, Side::Tgt, cfg.correlation).unwrap_or(f64::NAN),
    };
    let kv: Vec<(String, String)> = vec![
        ("common_words".into(), summary.common_words.to_string()),
        ("median_cosine".into(), summary.median_cosine.to_string()),
        ("distant_by_cosine".into(), summary.distant_by_cosine.to_string()),
        ("distant_by_adjusted".into(), summary.distant_by_adjusted.to_string()),
        ("top_n".into(), distant.overlap.top_n.to_string()),
        ("top_n_new_in_adjusted".into(), distant.overlap.new_in_adjusted.to_string()),
        ("top_n_shared".into(), distant.overlap.shared.to_string()),
        ("correlation_freq_src".into(), summary.correlation_src.to_string()),
        ("correlation_freq_tgt".into(), summary.correlation_tgt.to_string()),
        ("top_n_names".into(), class.names.to_string()),
        ("top_n_short".into(), class.short.to_string()),
        ("top_n_other".into(), class.other.to_string()),
    ];
    run.write_tsv("analysis.tsv", STAGE, &["metric", "value"], kv.into_iter().map(|(k, v)| [k, v]))?;
    run.save()?;
    Ok(summary)
}

fn side_freq(r: &SimilarityRecord, side: Side) -> u64 {
    match side {
        Side::Src => r.freq_src,
        Side::Tgt => r.freq_tgt,
    }
}

/// Equal-width bins over `[lo, hi]`; values outside fall into the edge bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = if width > 0.0 { ((v - lo) / width).floor() } else { 0.0 };
        counts[(i.max(0.0) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Writes the summary tables and plot series. Needs every earlier stage
/// except eval.
pub fn report(run_dir: &Path, cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let mut run = Run::open(run_dir, cfg)?;
    const STAGE: &str = "report";
    let records = store::load_similarity(&run.require(SIMILARITY_FILE, "analyze")?)?;
    let src = run.space(cfg.source())?;
    let tgt = run.space(cfg.target())?;
    let mapping = store::load_mapping(&run.require(MAPPING_FILE, "align")?)?;

    let mut outlet_rows: Vec<[String; 3]> = Vec::new();
    for (outlet, space) in [(cfg.source(), &src), (cfg.target(), &tgt)] {
        let tokens = run.tokens(outlet)?;
        outlet_rows.push([outlet.into(), "documents".into(), tokens.len().to_string()]);
        outlet_rows.push([outlet.into(), "tokens".into(), tokens.iter().map(Vec::len).sum::<usize>().to_string()]);
        outlet_rows.push([outlet.into(), "vocabulary".into(), space.len().to_string()]);
    }
    if run.manifest.artifacts.contains_key(EVAL_FILE) {
        let (_, rows) = store::load_tsv(&run.require(EVAL_FILE, "eval")?)?;
        for r in rows {
            if let [outlet, dataset, metric, value, _] = &r[..] {
                outlet_rows.push([outlet.clone(), format!("{dataset}:{metric}"), value.clone()]);
            }
        }
    }
    run.write_tsv(REPORT_FILES[0], STAGE, &["outlet", "metric", "value"], outlet_rows)?;

    let cosines: Vec<f64> = records.iter().map(|r| r.cosine).collect();
    let adjusted: Vec<f64> = records.iter().map(|r| r.adjusted).collect();
    let (phrase_cos, unigram_cos): (Vec<f64>, Vec<f64>) = {
        let (p, u): (Vec<&SimilarityRecord>, Vec<&SimilarityRecord>) =
            records.iter().partition(|r| r.word.contains(JOINER));
        (p.iter().map(|r| r.cosine).collect(), u.iter().map(|r| r.cosine).collect())
    };
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let below = cosines.iter().filter(|&&c| c <= cfg.cos_threshold).count();
    let above_adj = adjusted.iter().filter(|&&a| a >= cfg.adj_threshold).count();
    let mapping_rows: Vec<[String; 2]> = vec![
        ["mapping_mode".into(), cfg.mapping_mode.to_string()],
        ["common_words".into(), records.len().to_string()],
        ["median_cosine".into(), fmt_opt(median(&cosines))],
        ["median_adjusted".into(), fmt_opt(median(&adjusted))],
        ["words_cosine_below_threshold".into(), below.to_string()],
        ["words_adjusted_above_threshold".into(), above_adj.to_string()],
        ["phrase_words".into(), phrase_cos.len().to_string()],
        ["median_cosine_phrases".into(), fmt_opt(median(&phrase_cos))],
        ["median_cosine_unigrams".into(), fmt_opt(median(&unigram_cos))],
    ];
    run.write_tsv(REPORT_FILES[1], STAGE, &["metric", "value"], mapping_rows)?;

    // projection of the most frequent common words in all three series
    let common = common_vocab(&src, &tgt)?;
    let words: Vec<String> = common.iter().take(cfg.projection_words).map(|w| w.word.clone()).collect();
    let n = words.len();
    let d = src.dim();
    let mut stacked = Array2::zeros((3 * n, d));
    for (i, w) in words.iter().enumerate() {
        let x = src.vector_of(w).expect("common word");
        stacked.row_mut(i).assign(&x);
        stacked.row_mut(n + i).assign(&mapping.apply(x));
        stacked.row_mut(2 * n + i).assign(&tgt.vector_of(w).expect("common word"));
    }
    let proj = pca_project(&stacked, 2.min(d))?;
    let series = ["source", "mapped", "target"];
    let proj_rows: Vec<[String; 4]> = (0..3 * n)
        .map(|i| {
            let c = proj.coords.slice(s![i, ..]);
            [
                words[i % n].clone(),
                c[0].to_string(),
                c.get(1).copied().unwrap_or(0.0).to_string(),
                series[i / n].to_string(),
            ]
        })
        .collect();
    run.write_tsv(REPORT_FILES[2], STAGE, &["word", "x", "y", "series"], proj_rows)?;

    let hist_rows = |h: Vec<(f64, f64, usize)>| -> Vec<[String; 3]> {
        h.into_iter().map(|(lo, hi, c)| [lo.to_string(), hi.to_string(), c.to_string()]).collect()
    };
    run.write_tsv(
        REPORT_FILES[3],
        STAGE,
        &["lo", "hi", "count"],
        hist_rows(histogram(&cosines, -1.0, 1.0, cfg.histogram_bins)),
    )?;
    let (amin, amax) = adjusted
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (amin, amax) = if amin < amax { (amin, amax) } else { (amin - 0.5, amin + 0.5) };
    run.write_tsv(
        REPORT_FILES[4],
        STAGE,
        &["lo", "hi", "count"],
        hist_rows(histogram(&adjusted, amin, amax, cfg.histogram_bins)),
    )?;

    let mut bucket_rows: Vec<[String; 4]> = Vec::new();
    let n_buckets = records.iter().filter_map(|r| r.bucket).max().map_or(0, |b| b + 1);
    for b in 0..n_buckets {
        let members: Vec<&SimilarityRecord> = records.iter().filter(|r| r.bucket == Some(b)).collect();
        let cos: Vec<f64> = members.iter().map(|r| r.cosine).collect();
        let freqs: Vec<f64> = members.iter().map(|r| side_freq(r, cfg.bucket_by) as f64).collect();
        bucket_rows.push([
            b.to_string(),
            members.len().to_string(),
            fmt_opt(median(&cos)),
            fmt_opt(median(&freqs)),
        ]);
    }
    run.write_tsv(REPORT_FILES[5], STAGE, &["bucket", "size", "median_cosine", "median_freq"], bucket_rows)?;
    run.write_tsv(
        REPORT_FILES[6],
        STAGE,
        &["word", "freq_src", "freq_tgt", "cosine", "adjusted"],
        records.iter().map(|r| {
            [r.word.clone(), r.freq_src.to_string(), r.freq_tgt.to_string(), r.cosine.to_string(), r.adjusted.to_string()]
        }),
    )?;
    run.save()?;
    Ok(REPORT_FILES.iter().map(|f| run.path(f)).collect())
}

/// Every stage in order. Eval runs only when datasets are given.
pub fn run_all(
    input: &Path,
    format: InputFormat,
    run_dir: &Path,
    cfg: &PipelineConfig,
    datasets: &[EvalDataset],
    inputs: &AnalyzeInputs,
) -> Result<(AlignSummary, AnalyzeSummary)> {
    preprocess(input, format, run_dir, cfg)?;
    phrases(run_dir, cfg, 1)?;
    phrases(run_dir, cfg, 2)?;
    train(run_dir, cfg, None)?;
    if !datasets.is_empty() {
        eval(run_dir, cfg, datasets)?;
    }
    let aligned = align(run_dir, cfg)?;
    let analyzed = analyze(run_dir, cfg, inputs)?;
    report(run_dir, cfg)?;
    Ok((aligned, analyzed))
}
