//! Frequency-adjusted distances, distant-word lists and bias-word analyses.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{median, pearson, spearman};
use crate::train::{nearest_neighbors, EmbeddingSpace};

/// Cross-space similarity of one common word.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRecord {
    pub word: String,
    pub cosine: f64,
    pub freq_src: u64,
    pub freq_tgt: u64,
    pub bucket: Option<usize>,
    /// Bucket median cosine minus this word's cosine; positive means less
    /// similar than the typical word of the same frequency.
    pub adjusted: f64,
}

impl SimilarityRecord {
    pub fn new(word: &str, cosine: f64, freq_src: u64, freq_tgt: u64) -> Self {
        SimilarityRecord {
            word: word.to_string(),
            cosine,
            freq_src,
            freq_tgt,
            bucket: None,
            adjusted: 0.0,
        }
    }
}

/// Corpus whose frequencies order records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
}

impl Side {
    fn freq(self, r: &SimilarityRecord) -> u64 {
        match self {
            Side::Src => r.freq_src,
            Side::Tgt => r.freq_tgt,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src" | "source" => Ok(Side::Src),
            "tgt" | "target" => Ok(Side::Tgt),
            _ => Err(Error::InvalidParameter(format!("expected src or tgt, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBucket {
    pub id: usize,
    pub words: Vec<String>,
    pub median_cosine: f64,
}

/// Sorts records by descending frequency (ties lexicographic), cuts them into
/// consecutive buckets of `bucket_size` and fills in each record's adjusted
/// distance. The last bucket may be short.
pub fn bucketize(records: &mut [SimilarityRecord], bucket_size: usize, by: Side) -> Result<Vec<FrequencyBucket>> {
    if bucket_size < 3 {
        return Err(Error::InvalidParameter(format!("bucket size must be at least 3, got {bucket_size}")));
    }
    records.sort_by(|a, b| by.freq(b).cmp(&by.freq(a)).then_with(|| a.word.cmp(&b.word)));
    let mut buckets = Vec::new();
    for (id, chunk) in records.chunks_mut(bucket_size).enumerate() {
        let cosines: Vec<f64> = chunk.iter().map(|r| r.cosine).collect();
        let m = median(&cosines).expect("chunks are non-empty");
        for r in chunk.iter_mut() {
            r.bucket = Some(id);
            r.adjusted = m - r.cosine;
        }
        buckets.push(FrequencyBucket {
            id,
            words: chunk.iter().map(|r| r.word.clone()).collect(),
            median_cosine: m,
        });
    }
    Ok(buckets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistantWords {
    /// Words with cosine at most the threshold, most distant first.
    pub by_cosine: Vec<(String, f64)>,
    /// Words with adjusted distance at least the threshold, most distant first.
    pub by_adjusted: Vec<(String, f64)>,
    pub overlap: Overlap,
}

/// Comparison of the `top_n` most distant words under both rankings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub top_n: usize,
    /// Words in the adjusted top list that are absent from the cosine top list.
    pub new_in_adjusted: usize,
    pub shared: usize,
}

pub fn ranked_by_cosine(records: &[SimilarityRecord]) -> Vec<&SimilarityRecord> {
    let mut v: Vec<&SimilarityRecord> = records.iter().collect();
    v.sort_by(|a, b| a.cosine.total_cmp(&b.cosine).then_with(|| a.word.cmp(&b.word)));
    v
}

pub fn ranked_by_adjusted(records: &[SimilarityRecord]) -> Vec<&SimilarityRecord> {
    let mut v: Vec<&SimilarityRecord> = records.iter().collect();
    v.sort_by(|a, b| b.adjusted.total_cmp(&a.adjusted).then_with(|| a.word.cmp(&b.word)));
    v
}

pub fn distant_words(
    records: &[SimilarityRecord],
    cos_thresh: f64,
    adj_thresh: f64,
    top_n: usize,
) -> Result<DistantWords> {
    if records.iter().any(|r| r.bucket.is_none()) {
        return Err(Error::InvalidParameter("records have not been bucketized".into()));
    }
    let by_cos = ranked_by_cosine(records);
    let by_adj = ranked_by_adjusted(records);
    let top_cos: HashSet<&str> = by_cos.iter().take(top_n).map(|r| r.word.as_str()).collect();
    let top_adj: Vec<&str> = by_adj.iter().take(top_n).map(|r| r.word.as_str()).collect();
    let shared = top_adj.iter().filter(|w| top_cos.contains(*w)).count();
    Ok(DistantWords {
        by_cosine: by_cos
            .iter()
            .filter(|r| r.cosine <= cos_thresh)
            .map(|r| (r.word.clone(), r.cosine))
            .collect(),
        by_adjusted: by_adj
            .iter()
            .filter(|r| r.adjusted >= adj_thresh)
            .map(|r| (r.word.clone(), r.adjusted))
            .collect(),
        overlap: Overlap {
            top_n: top_adj.len(),
            new_in_adjusted: top_adj.len() - shared,
            shared,
        },
    })
}

/// Words with cosine at least `threshold`, most similar first.
pub fn close_words(records: &[SimilarityRecord], threshold: f64) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = records
        .iter()
        .filter(|r| r.cosine >= threshold)
        .map(|r| (r.word.clone(), r.cosine))
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    #[default]
    Spearman,
    Pearson,
}

impl FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Correlation::Spearman),
            "pearson" => Ok(Correlation::Pearson),
            _ => Err(Error::InvalidParameter(format!("unknown correlation {s:?}"))),
        }
    }
}

/// Correlation between mapped cosine and one corpus's word frequency.
pub fn freq_similarity_correlation(records: &[SimilarityRecord], which: Side, kind: Correlation) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::TooFewWords {
            needed: 3,
            got: records.len(),
        });
    }
    let cos: Vec<f64> = records.iter().map(|r| r.cosine).collect();
    let freq: Vec<f64> = records.iter().map(|r| which.freq(r) as f64).collect();
    Ok(match kind {
        Correlation::Spearman => spearman(&cos, &freq),
        Correlation::Pearson => pearson(&cos, &freq),
    })
}

const DEFAULT_SEEDS: &str = include_str!("../data/seeds.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub issue: String,
    pub word: String,
}

/// Seed words grouped by divisive issue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedLexicon {
    pub seeds: Vec<Seed>,
}

impl SeedLexicon {
    /// Seed words for the divisive issues of US news coverage, singular and
    /// plural forms listed separately.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SEEDS).expect("bundled seed file parses")
    }

    /// `issue<TAB>word` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seeds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (issue, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("seeds", i + 1, "expected issue<TAB>word"))?;
            seeds.push(Seed {
                issue: issue.trim().to_string(),
                word: word.trim().to_lowercase(),
            });
        }
        Ok(SeedLexicon { seeds })
    }

    pub fn words(&self) -> Vec<String> {
        self.seeds.iter().map(|s| s.word.clone()).collect()
    }

    pub fn issues(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for s in &self.seeds {
            m.entry(s.issue.as_str()).or_default().push(s.word.as_str());
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedExpansion {
    pub neighbors: Vec<(String, Vec<(String, f64)>)>,
    pub skipped: Vec<String>,
}

impl SeedExpansion {
    /// Union of all neighbor lists, for manual review.
    pub fn candidates(&self) -> BTreeSet<String> {
        self.neighbors
            .iter()
            .flat_map(|(_, n)| n.iter().map(|(w, _)| w.clone()))
            .collect()
    }
}

pub fn expand_seeds(space: &EmbeddingSpace, seeds: &SeedLexicon, k: usize) -> SeedExpansion {
    let mut out = SeedExpansion {
        neighbors: Vec::new(),
        skipped: Vec::new(),
    };
    for seed in &seeds.seeds {
        match nearest_neighbors(space, &seed.word, k) {
            Ok(n) => out.neighbors.push((seed.word.clone(), n)),
            Err(_) => out.skipped.push(seed.word.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub group: String,
    pub n_group: usize,
    pub n_found: usize,
    pub median_cosine: f64,
    pub median_adjusted: f64,
}

pub fn group_stats(records: &[SimilarityRecord], name: &str, group: &HashSet<String>) -> Result<GroupStats> {
    let members: Vec<&SimilarityRecord> = records.iter().filter(|r| group.contains(&r.word)).collect();
    if members.is_empty() {
        return Err(Error::EmptyGroup { group: name.to_string() });
    }
    let cos: Vec<f64> = members.iter().map(|r| r.cosine).collect();
    let adj: Vec<f64> = members.iter().map(|r| r.adjusted).collect();
    Ok(GroupStats {
        group: name.to_string(),
        n_group: group.len(),
        n_found: members.len(),
        median_cosine: median(&cos).unwrap(),
        median_adjusted: median(&adj).unwrap(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WordCategory {
    Name,
    Short,
    Other,
}

impl fmt::Display for WordCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordCategory::Name => "name",
            WordCategory::Short => "short",
            WordCategory::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub names: usize,
    pub short: usize,
    pub other: usize,
    pub labels: Vec<(String, WordCategory)>,
}

impl Classification {
    pub fn other_fraction(&self) -> f64 {
        let total = self.names + self.short + self.other;
        if total == 0 {
            0.0
        } else {
            self.other as f64 / total as f64
        }
    }
}

/// Gazetteer names first, then tokens of at most `short_len` characters.
pub fn classify_distant(top_words: &[String], names: &HashSet<String>, short_len: usize) -> Classification {
    let mut c = Classification {
        names: 0,
        short: 0,
        other: 0,
        labels: Vec::with_capacity(top_words.len()),
    };
    for w in top_words {
        let cat = if names.contains(w) {
            c.names += 1;
            WordCategory::Name
        } else if w.chars().count() <= short_len {
            c.short += 1;
            WordCategory::Short
        } else {
            c.other += 1;
            WordCategory::Other
        };
        c.labels.push((w.clone(), cat));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(word: &str, cos: f64, freq: u64) -> SimilarityRecord {
        SimilarityRecord::new(word, cos, freq, freq)
    }

    #[test]
    fn bucket_median_and_signs() {
        let mut r = vec![rec("a", 0.2, 30), rec("b", 0.5, 20), rec("c", 0.8, 10)];
        let b = bucketize(&mut r, 3, Side::Src).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].median_cosine, 0.5);
        let adj: Vec<f64> = r.iter().map(|x| x.adjusted).collect();
        assert!((adj[0] - 0.3).abs() < 1e-15 && adj[1] == 0.0 && (adj[2] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn equal_cosines_zero_adjusted() {
        let mut r: Vec<_> = (0..7).map(|i| rec(&format!("w{i}"), 0.42, 100 - i)).collect();
        bucketize(&mut r, 3, Side::Src).unwrap();
        assert!(r.iter().all(|x| x.adjusted == 0.0));
    }

    #[test]
    fn small_bucket_size_rejected() {
        assert!(bucketize(&mut [], 2, Side::Src).is_err());
    }

    #[test]
    fn buckets_follow_chosen_frequency() {
        let mut r = vec![
            SimilarityRecord::new("a", 0.1, 1, 9),
            SimilarityRecord::new("b", 0.2, 2, 8),
            SimilarityRecord::new("c", 0.3, 3, 7),
            SimilarityRecord::new("d", 0.4, 4, 6),
        ];
        bucketize(&mut r, 3, Side::Tgt).unwrap();
        let order: Vec<_> = r.iter().map(|x| x.word.as_str()).collect();
        assert_eq!(order, ["a", "b", "c", "d"]);
        assert_eq!(r[3].bucket, Some(1));
        assert_eq!(r[3].adjusted, 0.0);
    }

    #[test]
    fn distant_threshold() {
        let mut r = vec![rec("x", 0.3, 10), rec("y", 0.5, 9), rec("z", 0.9, 8)];
        bucketize(&mut r, 3, Side::Src).unwrap();
        let d = distant_words(&r, 0.4, 0.1, 1000).unwrap();
        assert_eq!(d.by_cosine, vec![("x".to_string(), 0.3)]);
        assert_eq!(d.by_adjusted.len(), 1);
        assert_eq!(d.overlap.new_in_adjusted, 0);
    }

    #[test]
    fn distant_needs_buckets() {
        assert!(distant_words(&[rec("x", 0.3, 1)], 0.4, 0.1, 10).is_err());
    }

    #[test]
    fn overlap_counts_new_words() {
        // "b" is the least similar overall, "c" is the outlier of the low-frequency bucket
        let mut r = vec![
            rec("a", 0.9, 100),
            rec("b", 0.1, 99),
            rec("e", 0.2, 98),
            rec("c", 0.6, 3),
            rec("d", 0.95, 2),
            rec("f", 0.96, 1),
        ];
        bucketize(&mut r, 3, Side::Src).unwrap();
        let d = distant_words(&r, 0.4, 0.1, 1).unwrap();
        assert_eq!(d.overlap, Overlap { top_n: 1, new_in_adjusted: 1, shared: 0 });
    }

    #[test]
    fn correlation_of_increasing_cosine() {
        let r: Vec<_> = (1..=10).map(|i| rec(&format!("w{i}"), i as f64 / 10.0, i * 7)).collect();
        let rho = freq_similarity_correlation(&r, Side::Src, Correlation::Spearman).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
        assert!(freq_similarity_correlation(&r[..2], Side::Src, Correlation::Pearson).is_err());
    }

    #[test]
    fn group_stats_examples() {
        let mut r = vec![rec("a", 0.5, 10), rec("b", 0.7, 9), rec("c", 0.1, 8)];
        bucketize(&mut r, 3, Side::Src).unwrap();
        r[0].adjusted = -0.2;
        r[1].adjusted = 0.4;
        let g: HashSet<String> = ["a", "b", "zz"].iter().map(|s| s.to_string()).collect();
        let s = group_stats(&r, "g", &g).unwrap();
        assert_eq!(s.n_found, 2);
        assert_eq!(s.n_group, 3);
        assert!((s.median_adjusted - 0.1).abs() < 1e-15);
        assert!(group_stats(&r, "none", &HashSet::new()).is_err());
    }

    #[test]
    fn classification_counts() {
        let names: HashSet<String> = ["obama", "trump"].iter().map(|s| s.to_string()).collect();
        let top: Vec<String> = ["obama", "trump", "gq", "illegals"].iter().map(|s| s.to_string()).collect();
        let c = classify_distant(&top, &names, 3);
        assert_eq!((c.names, c.short, c.other), (2, 1, 1));
        assert_eq!(c.other_fraction(), 0.25);
        let c = classify_distant(&top, &HashSet::new(), 3);
        assert_eq!((c.names, c.short, c.other), (0, 1, 3));
    }

    #[test]
    fn builtin_seeds() {
        let lex = SeedLexicon::builtin();
        let issues = lex.issues();
        assert_eq!(issues.len(), 7);
        assert!(lex.words().contains(&"islam".to_string()));
        assert!(lex.words().contains(&"taxes".to_string()));
        assert!(lex.words().contains(&"tax".to_string()));
        assert!(lex.words().contains(&"free_speech".to_string()));
        let unique: HashSet<_> = lex.words().into_iter().collect();
        assert_eq!(unique.len(), lex.seeds.len());
    }

    proptest! {
        #[test]
        fn odd_bucket_medians_are_zero_and_signs_hold(
            cos in proptest::collection::vec(-1.0f64..1.0, 3..200),
            size in (1usize..20).prop_map(|k| 2 * k + 1),
        ) {
            let mut r: Vec<_> = cos.iter().enumerate()
                .map(|(i, &c)| rec(&format!("w{i:04}"), c, 1000 - i as u64))
                .collect();
            let buckets = bucketize(&mut r, size, Side::Src).unwrap();
            for b in &buckets {
                let adj: Vec<f64> = r.iter().filter(|x| x.bucket == Some(b.id)).map(|x| x.adjusted).collect();
                if adj.len() % 2 == 1 {
                    prop_assert_eq!(median(&adj).unwrap(), 0.0);
                }
            }
            for x in &r {
                let m = buckets[x.bucket.unwrap()].median_cosine;
                prop_assert_eq!(x.adjusted > 0.0, x.cosine < m);
            }
        }

        #[test]
        fn raising_cos_threshold_never_shrinks(cos in proptest::collection::vec(-1.0f64..1.0, 3..100), t in -1.0f64..1.0, dt in 0.0f64..1.0) {
            let mut r: Vec<_> = cos.iter().enumerate().map(|(i, &c)| rec(&format!("w{i}"), c, i as u64)).collect();
            bucketize(&mut r, 5, Side::Src).unwrap();
            let lo = distant_words(&r, t, 0.1, 10).unwrap();
            let hi = distant_words(&r, t + dt, 0.1, 10).unwrap();
            prop_assert!(hi.by_cosine.len() >= lo.by_cosine.len());
        }
    }
}
