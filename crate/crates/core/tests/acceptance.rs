//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use outlet_lens::align::{common_vocab, learn_mapping, map_and_score, training_words, MappingMode};
use outlet_lens::analysis::{bucketize, ranked_by_adjusted, Side, SimilarityRecord};
use outlet_lens::corpus::{apply_phrases, detect_phrases, score_bigram, InputFormat, PhraseTable, TokenSequence};
use outlet_lens::eval::{analogy_eval, spearman_eval, AnalogyDataset, AnalogyQuestion, SectionKind, SimilarityDataset};
use outlet_lens::pipeline::{self, AnalyzeInputs, OutputLayer, PipelineConfig, SentenceUnit, SIMILARITY_FILE};
use outlet_lens::stats::{cosine, median, spearman};
use outlet_lens::store::{self, RunManifest};
use outlet_lens::synth::{generate, SynthConfig};
use outlet_lens::train::{hs_log_likelihood, hs_update, train, EmbeddingSpace, TrainParams};
use outlet_lens::vocab::{build_vocab, HuffmanTree, Vocabulary};
use outlet_lens::Error;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_space(r: &mut ChaCha8Rng, counts: &[u64], dim: usize) -> (EmbeddingSpace, HuffmanTree) {
    let vocab = Vocabulary::from_counts(counts.iter().enumerate().map(|(i, &c)| (format!("w{i:03}"), c))).unwrap();
    let tree = HuffmanTree::build(&vocab).unwrap();
    let n = vocab.len();
    let input = Array2::from_shape_fn((n, dim), |_| r.gen_range(-0.5..0.5));
    let inner = Array2::from_shape_fn((n - 1, dim), |_| r.gen_range(-0.5..0.5));
    let mut space = EmbeddingSpace::from_vectors(vocab, input).unwrap();
    space.inner_vectors = Some(inner);
    (space, tree)
}

fn gradient_check() -> Check {
    let start = Instant::now();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let mut r = rng(100 + trial);
        let counts: Vec<u64> = (0..10).map(|_| r.gen_range(1..100)).collect();
        let (space, tree) = random_space(&mut r, &counts, 5);
        let center = r.gen_range(0..10);
        let target = r.gen_range(0..10);

        // a unit-rate step moves every parameter by exactly its gradient
        let mut stepped = space.clone();
        hs_update(center, target, 1.0, &mut stepped, &tree);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        let ll = |s: &EmbeddingSpace| hs_log_likelihood(s, &tree, center, target);
        for j in 0..5 {
            analytic.push(stepped.input_vectors[(center, j)] - space.input_vectors[(center, j)]);
            let mut plus = space.clone();
            plus.input_vectors[(center, j)] += eps;
            let mut minus = space.clone();
            minus.input_vectors[(center, j)] -= eps;
            numeric.push((ll(&plus) - ll(&minus)) / (2.0 * eps));
        }
        for node in 0..9 {
            for j in 0..5 {
                let before = space.inner_vectors.as_ref().unwrap()[(node, j)];
                analytic.push(stepped.inner_vectors.as_ref().unwrap()[(node, j)] - before);
                let mut plus = space.clone();
                plus.inner_vectors.as_mut().unwrap()[(node, j)] += eps;
                let mut minus = space.clone();
                minus.inner_vectors.as_mut().unwrap()[(node, j)] -= eps;
                numeric.push((ll(&plus) - ll(&minus)) / (2.0 * eps));
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        ensure!(scale > 0.0, "trial {trial}: zero gradient");
        let rel = diff / scale;
        ensure!(rel <= 1e-6, "trial {trial}: relative error {rel:e}");
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("20 instances, worst relative error {worst:.2e}, {elapsed:.2?}"))
}

/// Cheapest total merge cost over every possible merge order.
fn optimal_cost(weights: &[u64], memo: &mut HashMap<Vec<u64>, u64>) -> u64 {
    if weights.len() <= 1 {
        return 0;
    }
    let mut key = weights.to_vec();
    key.sort_unstable();
    if let Some(&c) = memo.get(&key) {
        return c;
    }
    let mut best = u64::MAX;
    for i in 0..key.len() {
        for j in i + 1..key.len() {
            let merged = key[i] + key[j];
            let mut rest: Vec<u64> = key.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &w)| w).collect();
            rest.push(merged);
            best = best.min(merged + optimal_cost(&rest, memo));
        }
    }
    memo.insert(key, best);
    best
}

fn huffman_optimality() -> Check {
    let mut r = rng(7);
    let mut memo = HashMap::new();
    for trial in 0..100 {
        let n = r.gen_range(2..=8);
        let counts: Vec<u64> = (0..n).map(|_| r.gen_range(1..=20)).collect();
        let tree = HuffmanTree::from_counts(&counts).map_err(|e| e.to_string())?;
        let got = tree.weighted_length(&counts);
        let want = optimal_cost(&counts, &mut memo);
        ensure!(got == want, "trial {trial}: counts {counts:?}, length {got}, optimum {want}");
        for a in 0..n {
            ensure!(!tree.code(a).is_empty(), "trial {trial}: empty code");
            for b in 0..n {
                if a != b {
                    ensure!(!tree.code(b).starts_with(tree.code(a)), "trial {trial}: code {a} prefixes code {b}");
                }
            }
        }
    }
    Ok("100 trials match the exhaustive optimum, all codes prefix-free".into())
}

fn phrase_corpus() -> Vec<TokenSequence> {
    let mut r = rng(3);
    let words: Vec<String> = (0..300).map(|i| format!("{}{}", (b'a' + (i / 26) as u8) as char, (b'a' + (i % 26) as u8) as char)).collect();
    let zipf = WeightedIndex::new((0..words.len()).map(|k| 1.0 / (k as f64 + 1.0))).unwrap();
    let mut docs = Vec::new();
    for _ in 0..500 {
        let mut d = Vec::new();
        while d.len() < 200 {
            let x: f64 = r.gen();
            if x < 0.006 {
                d.extend(["new", "york", "city"].map(String::from));
            } else if x < 0.012 {
                d.extend(["white", "house"].map(String::from));
            } else {
                d.push(words[zipf.sample(&mut r)].clone());
            }
        }
        docs.push(d);
    }
    docs
}

fn brute_force_table(corpus: &[TokenSequence], threshold: f64, min_count: u64) -> BTreeMap<(String, String), f64> {
    let mut uni: HashMap<&str, u64> = HashMap::new();
    let mut bi: HashMap<(&str, &str), u64> = HashMap::new();
    let mut total = 0u64;
    for d in corpus {
        for (i, w) in d.iter().enumerate() {
            *uni.entry(w).or_default() += 1;
            total += 1;
            if i + 1 < d.len() {
                *bi.entry((w, &d[i + 1])).or_default() += 1;
            }
        }
    }
    let mut out = BTreeMap::new();
    for (&(a, b), &c) in &bi {
        if c <= min_count {
            continue;
        }
        let s = score_bigram(c, uni[a], uni[b], total, min_count);
        // the scoring formula itself, written out
        let direct = (c as f64 - min_count as f64) * total as f64 / (uni[a] as f64 * uni[b] as f64);
        assert!((s - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        if s >= threshold {
            out.insert((a.to_string(), b.to_string()), s);
        }
    }
    out
}

fn as_map(t: &PhraseTable) -> BTreeMap<(String, String), f64> {
    t.iter().map(|(a, b, s)| ((a.to_string(), b.to_string()), s)).collect()
}

fn greedy_merge(seq: &[String], pairs: &BTreeMap<(String, String), f64>) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && pairs.contains_key(&(seq[i].clone(), seq[i + 1].clone())) {
            out.push(format!("{}_{}", seq[i], seq[i + 1]));
            i += 2;
        } else {
            out.push(seq[i].clone());
            i += 1;
        }
    }
    out
}

fn phrase_oracle() -> Check {
    let corpus = phrase_corpus();
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    ensure!((95_000..=110_000).contains(&tokens), "corpus has {tokens} tokens");
    let p1 = detect_phrases(&corpus, 90.0, 25).map_err(|e| e.to_string())?;
    let want1 = brute_force_table(&corpus, 90.0, 25);
    ensure!(as_map(&p1) == want1, "pass 1 differs: got {:?}, want {:?}", as_map(&p1).keys(), want1.keys());
    let merged: Vec<TokenSequence> = corpus.iter().map(|d| apply_phrases(d, &p1)).collect();
    for (d, m) in corpus.iter().zip(&merged) {
        ensure!(*m == greedy_merge(d, &want1), "apply_phrases disagrees with the greedy reference");
    }
    let p2 = detect_phrases(&merged, 120.0, 25).map_err(|e| e.to_string())?;
    let want2 = brute_force_table(&merged, 120.0, 25);
    ensure!(as_map(&p2) == want2, "pass 2 differs: got {:?}, want {:?}", as_map(&p2).keys(), want2.keys());

    let s = |x: &str| x.split(' ').map(String::from).collect::<Vec<_>>();
    let once = apply_phrases(&s("the new york city white house"), &p1);
    ensure!(once == s("the new_york city white_house"), "pass 1 trace: {once:?}");
    let twice = apply_phrases(&once, &p2);
    ensure!(twice == s("the new_york_city white_house"), "pass 2 trace: {twice:?}");
    let overlap = apply_phrases(&s("york city new york"), &p1);
    ensure!(overlap == s("york_city new_york"), "overlap trace: {overlap:?}");
    Ok(format!("{tokens} tokens, {} + {} phrases equal the brute-force tables", p1.len(), p2.len()))
}

fn small_trained_space() -> EmbeddingSpace {
    let corpus = generate(&SynthConfig::small()).unwrap();
    let seqs: Vec<TokenSequence> = corpus.documents.iter().filter(|d| d.outlet == "left").map(outlet_lens::corpus::preprocess).collect();
    let vocab = build_vocab(&seqs, 5).unwrap();
    let tree = HuffmanTree::build(&vocab).unwrap();
    let params = TrainParams {
        dim: 20,
        epochs: 3,
        min_count: 5,
        ..TrainParams::default()
    };
    train(&seqs, &vocab, &tree, &params).unwrap()
}

fn alignment() -> Check {
    let space = small_trained_space();
    let common = common_vocab(&space, &space).map_err(|e| e.to_string())?;
    let words = training_words(&common, MappingMode::WholeVocab).words;
    let m = learn_mapping(&space, &space, &words).map_err(|e| e.to_string())?;
    let recs = map_and_score(&space, &space, &m, &common).map_err(|e| e.to_string())?;
    let low = recs.iter().filter(|r| r.cosine < 0.999).count();
    let min_cos = recs.iter().map(|r| r.cosine).fold(f64::INFINITY, f64::min);
    ensure!(low == 0, "{low} of {} words below 0.999 (min {min_cos})", recs.len());

    // planted rotation
    let mut r = rng(11);
    let d = 20;
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| r.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let src = Array2::from_shape_fn((500, d), |_| r.gen_range(-1.0..1.0));
    let q_nd = Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)]);
    let tgt = src.dot(&q_nd.t());
    let vocab = Vocabulary::from_counts((0..500).map(|i| (format!("w{i:03}"), 1000 - i as u64))).unwrap();
    let s_space = EmbeddingSpace::from_vectors(vocab.clone(), src).unwrap();
    let t_space = EmbeddingSpace::from_vectors(vocab, tgt).unwrap();
    let words: Vec<String> = s_space.vocab.words().to_vec();
    let w = learn_mapping(&s_space, &t_space, &words).map_err(|e| e.to_string())?;
    let err = (&w.matrix - &q_nd).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(err <= 1e-4, "rotation recovered with max error {err:e}");
    Ok(format!("self-map min cosine {min_cos:.6} over {} words; rotation error {err:.1e}", recs.len()))
}

fn adjusted_distance() -> Check {
    let mut r = rng(5);
    let mut odd_buckets = 0;
    for trial in 0..1000 {
        let n = r.gen_range(3..300);
        let size = r.gen_range(3..60);
        let mut recs: Vec<SimilarityRecord> = (0..n)
            .map(|i| SimilarityRecord::new(&format!("w{i}"), r.gen_range(-1.0..1.0), r.gen_range(1..50), r.gen_range(1..50)))
            .collect();
        let buckets = bucketize(&mut recs, size, Side::Src).map_err(|e| e.to_string())?;
        for b in &buckets {
            let members: Vec<&SimilarityRecord> = recs.iter().filter(|x| x.bucket == Some(b.id)).collect();
            if members.len() % 2 == 1 {
                odd_buckets += 1;
                let adj: Vec<f64> = members.iter().map(|x| x.adjusted).collect();
                let m = median(&adj).unwrap();
                ensure!(m == 0.0, "trial {trial}: bucket {} median adjusted {m}", b.id);
            }
            for x in members {
                let less_similar = x.cosine < b.median_cosine;
                ensure!(
                    (x.adjusted > 0.0) == less_similar,
                    "trial {trial}: {} cosine {} median {} adjusted {}",
                    x.word,
                    x.cosine,
                    b.median_cosine,
                    x.adjusted
                );
            }
        }
    }
    Ok(format!("1000 record sets, {odd_buckets} odd buckets with median 0, sign rule holds everywhere"))
}

fn toy_space(words: &[&str], rows: Vec<Vec<f64>>) -> EmbeddingSpace {
    let vocab = Vocabulary::from_counts(words.iter().enumerate().map(|(i, w)| (w.to_string(), 1000 - i as u64))).unwrap();
    let d = rows[0].len();
    let m = Array2::from_shape_vec((rows.len(), d), rows.into_iter().flatten().collect()).unwrap();
    EmbeddingSpace::from_vectors(vocab, m).unwrap()
}

fn brute_rank(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let eq = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn eval_oracles() -> Check {
    let mut r = rng(9);
    let names: Vec<String> = (0..12).map(|i| format!("x{i:02}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..6).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let space = toy_space(&refs, rows.clone());

    // 10 pairs with distinct human scores
    let mut text = String::new();
    let mut pair_idx = Vec::new();
    for k in 0..10 {
        let (a, b) = (k, (k * 5 + 3) % 12);
        let (a, b) = if a == b { (a, (b + 1) % 12) } else { (a, b) };
        text.push_str(&format!("{}\t{}\t{}\n", names[a], names[b], (k as f64 * 0.77) % 10.0));
        pair_idx.push((a, b, (k as f64 * 0.77) % 10.0));
    }
    let ds = SimilarityDataset::parse_wordsim("toy", &text).map_err(|e| e.to_string())?;
    let got = spearman_eval(&space, &ds).map_err(|e| e.to_string())?;
    let cos: Vec<f64> = pair_idx.iter().map(|&(a, b, _)| cosine(&rows[a], &rows[b])).collect();
    let human: Vec<f64> = pair_idx.iter().map(|p| p.2).collect();
    let brute = brute_pearson(&brute_rank(&cos), &brute_rank(&human));
    ensure!((got.rho - brute).abs() <= 1e-9, "spearman {} vs brute force {}", got.rho, brute);
    // no ties here, so the rank-difference formula applies as well
    let (rc, rh) = (brute_rank(&cos), brute_rank(&human));
    let d2: f64 = rc.iter().zip(&rh).map(|(a, b)| (a - b).powi(2)).sum();
    let formula = 1.0 - 6.0 * d2 / (10.0 * 99.0);
    ensure!((got.rho - formula).abs() <= 1e-9, "spearman {} vs rank-difference formula {}", got.rho, formula);

    for (name, f) in [("cube", (|x: f64| x.powi(3)) as fn(f64) -> f64), ("exp", f64::exp), ("atan", f64::atan)] {
        let t: Vec<f64> = cos.iter().map(|&c| f(c)).collect();
        let rho = spearman(&t, &human);
        ensure!((rho - got.rho).abs() <= 1e-12, "{name} transform changed rho to {rho}");
    }

    // analogies over the same space; some answers planted exactly
    let mut rows2 = rows.clone();
    let mut questions = Vec::new();
    for k in 0..10 {
        let (a, b, c) = (k % 12, (k + 1) % 12, (k + 2) % 12);
        let dd = (k + 3) % 12;
        if k % 3 == 0 {
            rows2[dd] = (0..6).map(|j| rows2[b][j] - rows2[a][j] + rows2[c][j]).collect();
        }
        questions.push(AnalogyQuestion {
            a: names[a].clone(),
            b: names[b].clone(),
            c: names[c].clone(),
            expected: names[dd].clone(),
            section: if k < 5 { "capital".into() } else { "gram1".into() },
        });
    }
    let space2 = toy_space(&refs, rows2.clone());
    let ads = AnalogyDataset {
        name: "toy".into(),
        questions: questions.clone(),
    };
    let score = analogy_eval(&space2, &ads);
    let unit: Vec<Vec<f64>> = rows2
        .iter()
        .map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    let idx = |w: &str| names.iter().position(|n| n == w).unwrap();
    let mut correct = 0;
    let mut correct_sem = 0;
    for q in &questions {
        let (a, b, c) = (idx(&q.a), idx(&q.b), idx(&q.c));
        let target: Vec<f64> = (0..6).map(|j| unit[b][j] - unit[a][j] + unit[c][j]).collect();
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (w, v) in unit.iter().enumerate() {
            if w == a || w == b || w == c {
                continue;
            }
            let s = cosine(&target, v);
            if s > best.0 {
                best = (s, w);
            }
        }
        if names[best.1] == q.expected {
            correct += 1;
            if SectionKind::of(&q.section) == SectionKind::Semantic {
                correct_sem += 1;
            }
        }
    }
    let brute_acc = correct as f64 / 10.0;
    ensure!((score.accuracy() - brute_acc).abs() <= 1e-9, "3CosAdd accuracy {} vs brute force {}", score.accuracy(), brute_acc);
    let sem = score.by_kind.get(&SectionKind::Semantic).map_or(0, |t| t.correct);
    ensure!(sem == correct_sem, "semantic correct {sem} vs brute force {correct_sem}");
    Ok(format!("rho {:.6} and analogy accuracy {brute_acc:.2} match brute force; rho invariant under 3 transforms", got.rho))
}

fn synthetic_bias() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_s = SynthConfig::default();
    let corpus = generate(&cfg_s).map_err(|e| e.to_string())?;
    ensure!(corpus.planted.len() == 10, "expected 10 planted words");
    let input = dir.path().join("articles.jsonl");
    corpus.write_jsonl(&input).map_err(|e| e.to_string())?;
    let run = dir.path().join("run");
    let cfg = PipelineConfig::default();
    pipeline::run_all(&input, InputFormat::Jsonl, &run, &cfg, &[], &AnalyzeInputs::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let tokens: Vec<usize> = cfg
        .outlets
        .iter()
        .map(|o| store::load_tokens(&run.join(pipeline::corpus_file(o))).map(|t| t.iter().map(Vec::len).sum()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let records = store::load_similarity(&run.join(SIMILARITY_FILE)).map_err(|e| e.to_string())?;
    let ranked = ranked_by_adjusted(&records);
    let cutoff = (records.len() as f64 * 0.05).floor() as usize;
    let top: HashSet<&str> = ranked.iter().take(cutoff).map(|r| r.word.as_str()).collect();
    let planted: HashSet<&str> = corpus.planted.iter().map(String::as_str).collect();
    let in_top = planted.iter().filter(|w| top.contains(*w)).count();
    let cos_of = |set: &HashSet<&str>| -> Vec<f64> { records.iter().filter(|r| set.contains(r.word.as_str())).map(|r| r.cosine).collect() };
    let planted_cos = cos_of(&planted);
    ensure!(planted_cos.len() == 10, "only {} planted words reached the common vocabulary", planted_cos.len());
    let below = planted_cos.iter().filter(|&&c| c < 0.4).count();
    let controls: HashSet<&str> = corpus.controls.iter().map(String::as_str).collect();
    let control_med = median(&cos_of(&controls)).unwrap_or(f64::NAN);
    let planted_med = median(&planted_cos).unwrap();
    let detail = format!(
        "{}/{} tokens, {in_top}/10 in top 5% ({cutoff} of {}), {below}/10 below cosine 0.4, median cosine control {control_med:.3} vs planted {planted_med:.3}, {elapsed:.1?}",
        tokens[0],
        tokens[1],
        records.len()
    );
    ensure!(tokens.iter().all(|&t| (900_000..=1_200_000).contains(&t)), "corpus size off: {detail}");
    ensure!(in_top >= 8, "{detail}");
    ensure!(below >= 8, "{detail}");
    ensure!(control_med > planted_med, "{detail}");
    ensure!(elapsed <= Duration::from_secs(600), "{detail}");
    Ok(detail)
}

fn cli(args: &[&str], run_dir: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_outlet-lens"))
        .args(args)
        .env("OUTLET_LENS_RUN_DIR", run_dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("small.jsonl");
    let input_s = input.to_str().unwrap();
    cli(&["synth", input_s, "--small"], dir.path())?;
    let mut sums = Vec::new();
    for k in 0..2 {
        let run = dir.path().join(format!("run{k}"));
        cli(&["run", input_s, "--threads", "1", "--seed", "7"], &run)?;
        let m = RunManifest::load(&run).map_err(|e| e.to_string())?;
        sums.push(m.checksums());
    }
    ensure!(sums[0].len() >= 20, "only {} artifacts recorded", sums[0].len());
    ensure!(sums[0] == sums[1], "checksums differ between runs");
    // rerunning one stage in place leaves its artifacts unchanged
    let run0 = dir.path().join("run0");
    cli(&["train", "--threads", "1", "--seed", "7"], &run0)?;
    let again = RunManifest::load(&run0).map_err(|e| e.to_string())?.checksums();
    ensure!(again == sums[0], "rerunning train changed checksums");
    Ok(format!("{} artifacts bit-identical across two runs and a stage rerun", sums[0].len()))
}

fn table_defaults() -> Check {
    let c = PipelineConfig::default();
    let rows: Vec<(&str, bool)> = vec![
        ("dimensionality 300", c.train.dim == 300),
        ("window 8", c.train.window == 8),
        ("subsampling 1e-5", c.train.subsample == 1e-5),
        ("epochs 10", c.train.epochs == 10),
        ("min count 25", c.train.min_count == 25),
        ("max token length 28", c.max_token_len == 28),
        ("phrase threshold 1 = 90", c.phrase_threshold1 == 90.0),
        ("phrase threshold 2 = 120", c.phrase_threshold2 == 120.0),
        ("hierarchical softmax", c.output_layer == OutputLayer::HierarchicalSoftmax),
        ("titles included", c.include_titles),
        ("whole-article sentences", c.sentence_unit == SentenceUnit::WholeArticle),
    ];
    let bad: Vec<&str> = rows.iter().filter(|r| !r.1).map(|r| r.0).collect();
    ensure!(bad.is_empty(), "mismatched: {bad:?}");
    let reparsed = PipelineConfig::from_toml(&c.to_toml()).map_err(|e| e.to_string())?;
    ensure!(reparsed == c, "defaults do not survive a TOML round trip");
    Ok(format!("{} rows match", rows.len()))
}

fn round_trips() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |n: &str| dir.path().join(n);
    let mut r = rng(13);
    let counts: Vec<u64> = (0..30).map(|i| 500 - i * 7).collect();
    let (space, _) = random_space(&mut r, &counts, 7);
    let mut space = space;
    space.input_vectors[(0, 0)] = 1e-300;
    space.input_vectors[(1, 1)] = -0.1 - 0.2;
    store::save_embeddings(&space, &p("e.txt")).map_err(|e| e.to_string())?;
    store::save_vocab(&space.vocab, &p("v.tsv")).map_err(|e| e.to_string())?;
    let back = store::load_space(&p("e.txt"), &p("v.tsv")).map_err(|e| e.to_string())?;
    ensure!(back.input_vectors == space.input_vectors, "embeddings changed");
    ensure!(back.vocab == space.vocab, "vocabulary changed");

    let m = learn_mapping(&space, &space, space.vocab.words()).map_err(|e| e.to_string())?;
    store::save_mapping(&m, &p("m.txt")).map_err(|e| e.to_string())?;
    let m2 = store::load_mapping(&p("m.txt")).map_err(|e| e.to_string())?;
    ensure!(m2.matrix == m.matrix, "mapping changed");

    let mut recs: Vec<SimilarityRecord> =
        (0..25).map(|i| SimilarityRecord::new(&format!("w{i}"), r.gen_range(-1.0..1.0), r.gen_range(1..99), r.gen_range(1..99))).collect();
    bucketize(&mut recs, 10, Side::Src).map_err(|e| e.to_string())?;
    store::save_similarity(&recs, &p("s.tsv")).map_err(|e| e.to_string())?;
    ensure!(store::load_similarity(&p("s.tsv")).map_err(|e| e.to_string())? == recs, "similarity report changed");

    let mut table = PhraseTable::new(90.0, 25);
    table.insert("new", "york", 190.123456789);
    store::save_phrases(&table, &p("ph.tsv")).map_err(|e| e.to_string())?;
    ensure!(store::load_phrases(&p("ph.tsv")).map_err(|e| e.to_string())? == table, "phrase table changed");

    // corruptions
    let good = fs::read_to_string(p("e.txt")).unwrap();
    let mut lines: Vec<&str> = good.lines().collect();
    lines.pop();
    fs::write(p("trunc.txt"), lines.join("\n")).unwrap();
    let nan = good.replacen(&format!("{}", space.input_vectors[(2, 0)]), "NaN", 1);
    fs::write(p("nan.txt"), nan).unwrap();
    let dup = {
        let mut l: Vec<String> = good.lines().map(String::from).collect();
        let first_word = l[1].split(' ').next().unwrap().to_string();
        let rest = l[2].split_once(' ').unwrap().1.to_string();
        l[2] = format!("{first_word} {rest}");
        l.join("\n")
    };
    fs::write(p("dup.txt"), dup).unwrap();
    fs::write(p("badm.txt"), "3 4\n1 2 3\n").unwrap();
    let badsim = {
        let text = fs::read_to_string(p("s.tsv")).unwrap();
        let mut l: Vec<String> = text.lines().map(String::from).collect();
        let mut cells: Vec<String> = l[1].split('\t').map(String::from).collect();
        cells[1] = "high".into();
        l[1] = cells.join("\t");
        l.join("\n")
    };
    fs::write(p("bads.tsv"), badsim).unwrap();

    let cases: Vec<(&str, Result<(), Error>, fn(&Error) -> bool)> = vec![
        ("truncated embeddings", store::load_embeddings(&p("trunc.txt")).map(|_| ()), |e| matches!(e, Error::Parse { .. })),
        ("NaN embedding", store::load_embeddings(&p("nan.txt")).map(|_| ()), |e| matches!(e, Error::NonFinite { .. })),
        ("duplicate word", store::load_embeddings(&p("dup.txt")).map(|_| ()), |e| matches!(e, Error::DuplicateWord { .. })),
        ("bad mapping header", store::load_mapping(&p("badm.txt")).map(|_| ()), |e| matches!(e, Error::Parse { .. })),
        ("bad similarity row", store::load_similarity(&p("bads.tsv")).map(|_| ()), |e| matches!(e, Error::Parse { .. })),
        ("missing file", store::load_mapping(&p("absent.txt")).map(|_| ()), |e| matches!(e, Error::Io { .. })),
    ];
    for (name, res, ok) in cases {
        match res {
            Ok(()) => return Err(format!("{name} was accepted")),
            Err(e) if ok(&e) => {}
            Err(e) => return Err(format!("{name} gave the wrong error: {e:?}")),
        }
    }
    Ok("embeddings, vocabulary, mapping, similarity and phrase files round-trip; 6 corruptions rejected".into())
}

fn main() {
    let checks: Vec<(&str, fn() -> Check)> = vec![
        ("gradient check", gradient_check),
        ("huffman optimality", huffman_optimality),
        ("phrase oracle", phrase_oracle),
        ("identity and rotation alignment", alignment),
        ("adjusted-distance construction", adjusted_distance),
        ("evaluation oracles", eval_oracles),
        ("synthetic bias detection", synthetic_bias),
        ("determinism", determinism),
        ("default config", table_defaults),
        ("format round-trips", round_trips),
    ];
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance checks failed");
        std::process::exit(1);
    }
}
