use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use outlet_lens::align::MappingMode;
use outlet_lens::corpus::InputFormat;
use outlet_lens::pipeline::{self, AnalyzeInputs, EvalDataset, PipelineConfig};
use outlet_lens::synth::{generate, SynthConfig};
use outlet_lens::{Error, Result};

/// Train outlet-specific embeddings and find the words two outlets use differently.
#[derive(Parser)]
#[command(name = "outlet-lens", version)]
struct Cli {
    /// Run directory holding all artifacts
    #[arg(long, env = "OUTLET_LENS_RUN_DIR", default_value = "run", global = true)]
    run_dir: PathBuf,
    /// TOML config; flags below override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    min_count: Option<u64>,
    #[arg(long, global = true)]
    subsample: Option<f64>,
    #[arg(long, global = true)]
    phrase_threshold1: Option<f64>,
    #[arg(long, global = true)]
    phrase_threshold2: Option<f64>,
    /// `whole-vocab` or `top-N`
    #[arg(long, global = true)]
    mapping_mode: Option<MappingMode>,
    #[arg(long, global = true)]
    cos_threshold: Option<f64>,
    #[arg(long, global = true)]
    adj_threshold: Option<f64>,
    #[arg(long, global = true)]
    bucket_size: Option<usize>,
    /// 1 is deterministic
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WordLists {
    /// `issue<TAB>word` seed file replacing the bundled seeds
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Word list reported as an extra group
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Name gazetteer for classifying distant words
    #[arg(long)]
    names: Option<PathBuf>,
}

impl WordLists {
    fn into_inputs(self) -> AnalyzeInputs {
        AnalyzeInputs {
            seeds: self.seeds,
            lexicon: self.lexicon,
            names: self.names,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-outlet corpus as JSONL
    Synth {
        out: PathBuf,
        /// Small corpus for quick runs
        #[arg(long)]
        small: bool,
        #[arg(long)]
        corpus_seed: Option<u64>,
    },
    /// Tokenize raw articles into the run directory
    Preprocess {
        input: PathBuf,
        /// `jsonl` or `plain-dir`
        #[arg(long, default_value = "jsonl")]
        format: InputFormat,
    },
    /// Learn one phrase pass
    Phrases {
        #[arg(long, default_value_t = 1)]
        pass: u8,
    },
    /// Train the embedding spaces
    Train {
        /// Train only this outlet
        #[arg(long)]
        outlet: Option<String>,
    },
    /// Score the spaces on similarity and analogy sets
    Eval {
        /// `wordsim=PATH`, `men=PATH` or `analogy=PATH`; repeatable
        #[arg(long = "dataset", required = true)]
        datasets: Vec<EvalDataset>,
    },
    /// Learn the cross-outlet mapping
    Align,
    /// Compute distances, distant-word lists and seed expansions
    Analyze {
        #[command(flatten)]
        lists: WordLists,
    },
    /// Write summary tables and plot series
    Report,
    /// Every stage in order
    Run {
        input: PathBuf,
        #[arg(long, default_value = "jsonl")]
        format: InputFormat,
        #[arg(long = "dataset")]
        datasets: Vec<EvalDataset>,
        #[command(flatten)]
        lists: WordLists,
    },
    /// Print the effective config as TOML
    Config,
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let o = &cli.overrides;
    macro_rules! set {
        ($($src:ident => $($dst:ident).+),* $(,)?) => {
            $(if let Some(v) = o.$src.clone() { cfg.$($dst).+ = v; })*
        };
    }
    set!(
        dim => train.dim,
        window => train.window,
        epochs => train.epochs,
        min_count => train.min_count,
        subsample => train.subsample,
        threads => train.threads,
        seed => train.seed,
        phrase_threshold1 => phrase_threshold1,
        phrase_threshold2 => phrase_threshold2,
        mapping_mode => mapping_mode,
        cos_threshold => cos_threshold,
        adj_threshold => adj_threshold,
        bucket_size => bucket_size,
    );
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.train.threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))?;
    let dir = cli.run_dir.as_path();
    match cli.command {
        Command::Synth { out, small, corpus_seed } => {
            let mut sc = if small { SynthConfig::small() } else { SynthConfig::default() };
            if let Some(s) = corpus_seed {
                sc.seed = s;
            }
            sc.outlets = [cfg.source().to_string(), cfg.target().to_string()];
            let corpus = generate(&sc)?;
            corpus.write_jsonl(&out)?;
            println!("wrote {} documents to {}", corpus.documents.len(), out.display());
            println!("planted: {}", corpus.planted.join(" "));
        }
        Command::Preprocess { input, format } => {
            let s = pipeline::preprocess(&input, format, dir, &cfg)?;
            for o in &s.outlets {
                println!("{}: {} documents, {} tokens", o.outlet, o.documents, o.tokens);
            }
            if s.skipped > 0 {
                println!("skipped {} records", s.skipped);
            }
        }
        Command::Phrases { pass } => {
            let t = pipeline::phrases(dir, &cfg, pass)?;
            println!("pass {pass}: {} phrases", t.len());
        }
        Command::Train { outlet } => {
            for s in pipeline::train(dir, &cfg, outlet.as_deref())? {
                println!(
                    "{}: {} words, {} tokens, {} updates",
                    s.outlet, s.vocab_size, s.tokens, s.stats.pairs
                );
            }
        }
        Command::Eval { datasets } => {
            for r in pipeline::eval(dir, &cfg, &datasets)? {
                println!("{r}");
            }
        }
        Command::Align => print_align(&pipeline::align(dir, &cfg)?),
        Command::Analyze { lists } => print_analyze(&pipeline::analyze(dir, &cfg, &lists.into_inputs())?),
        Command::Report => {
            for p in pipeline::report(dir, &cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Run {
            input,
            format,
            datasets,
            lists,
        } => {
            let (a, b) = pipeline::run_all(&input, format, dir, &cfg, &datasets, &lists.into_inputs())?;
            print_align(&a);
            print_analyze(&b);
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn print_align(s: &pipeline::AlignSummary) {
    println!(
        "mapping trained on {} of {} common words, residual {:.6}",
        s.train_words, s.common_words, s.residual
    );
}

fn print_analyze(s: &pipeline::AnalyzeSummary) {
    println!(
        "{} common words, median cosine {:.4}; {} distant by cosine, {} by adjusted distance",
        s.common_words, s.median_cosine, s.distant_by_cosine, s.distant_by_adjusted
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
