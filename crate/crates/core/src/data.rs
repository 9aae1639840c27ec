//! Corpus ingestion and encoding.
//!
//! Covers the 27-symbol English-text alphabet (A-Z case-folded plus word
//! space), frequency-ranked opcode vocabularies with an "other" bucket,
//! train/test splitting by cumulative length, and synthetic sequence
//! generation from a known model.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Symbols 0-25 are A-Z; 26 is the word space.
pub const TEXT_VOCAB_SIZE: usize = 27;
pub const SPACE_SYMBOL: usize = 26;

/// Encode text over the 27-symbol alphabet.
///
/// Letters are case-folded to 0-25, spaces and line breaks become the space
/// symbol, and every other character is dropped. Runs of space symbols
/// (including those created by dropping characters) collapse to one.
pub fn encode_text(raw: &str) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(raw.len());
    for ch in raw.chars() {
        let sym = match ch {
            'a'..='z' => ch as usize - 'a' as usize,
            'A'..='Z' => ch as usize - 'A' as usize,
            ' ' | '\n' | '\r' => SPACE_SYMBOL,
            _ => continue,
        };
        if sym == SPACE_SYMBOL && out.last() == Some(&SPACE_SYMBOL) {
            continue;
        }
        out.push(sym);
    }
    if out.is_empty() {
        return Err(Error::EmptyEncoding);
    }
    Ok(out)
}

/// Inverse of [`encode_text`] up to case folding, dropped characters, and
/// line-break normalization. Letters come back uppercase.
pub fn decode_text(symbols: &[usize]) -> Result<String> {
    let mut out = String::with_capacity(symbols.len());
    for &sym in symbols {
        match sym {
            0..=25 => out.push((b'A' + sym as u8) as char),
            SPACE_SYMBOL => out.push(' '),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "symbol {sym} outside the 27-symbol text alphabet"
                )))
            }
        }
    }
    Ok(out)
}

/// One labeled pool of opcode samples (one sample per executable).
#[derive(Clone, Debug)]
pub struct FamilyCorpus {
    pub family: String,
    pub samples: Vec<OpcodeSample>,
}

#[derive(Clone, Debug)]
pub struct OpcodeSample {
    pub id: String,
    pub mnemonics: Vec<String>,
}

impl FamilyCorpus {
    pub fn total_length(&self) -> usize {
        self.samples.iter().map(|s| s.mnemonics.len()).sum()
    }
}

/// Frequency-ranked opcode vocabulary: the top `K` mnemonics get indices
/// `0..K` and everything else maps to `other_index = K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OpcodeVocabRepr", try_from = "OpcodeVocabRepr")]
pub struct OpcodeVocab {
    top: Vec<String>,
    /// All observed mnemonics with counts, ordered by count descending then
    /// name; kept for coverage reporting.
    frequencies: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct OpcodeVocabRepr {
    top_opcodes: Vec<String>,
    other_index: usize,
    vocab_size: usize,
    frequencies: Vec<(String, u64)>,
}

impl From<OpcodeVocab> for OpcodeVocabRepr {
    fn from(v: OpcodeVocab) -> Self {
        OpcodeVocabRepr {
            other_index: v.other_index(),
            vocab_size: v.vocab_size(),
            top_opcodes: v.top,
            frequencies: v.frequencies,
        }
    }
}

impl TryFrom<OpcodeVocabRepr> for OpcodeVocab {
    type Error = String;

    fn try_from(repr: OpcodeVocabRepr) -> std::result::Result<Self, String> {
        let vocab = OpcodeVocab::from_parts(repr.top_opcodes, repr.frequencies)
            .map_err(|e| e.to_string())?;
        if vocab.other_index() != repr.other_index || vocab.vocab_size() != repr.vocab_size {
            return Err("vocabulary header does not match the opcode list".into());
        }
        Ok(vocab)
    }
}

impl OpcodeVocab {
    fn from_parts(top: Vec<String>, frequencies: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(top.len());
        for (i, name) in top.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate mnemonic {name:?} in vocabulary"
                )));
            }
        }
        Ok(OpcodeVocab {
            top,
            frequencies,
            index,
        })
    }

    pub fn top_opcodes(&self) -> &[String] {
        &self.top
    }

    pub fn frequencies(&self) -> &[(String, u64)] {
        &self.frequencies
    }

    /// Index assigned to out-of-vocabulary mnemonics.
    pub fn other_index(&self) -> usize {
        self.top.len()
    }

    /// `M = K + 1`: the ranked opcodes plus the "other" bucket.
    pub fn vocab_size(&self) -> usize {
        self.top.len() + 1
    }

    pub fn encode_one(&self, mnemonic: &str) -> usize {
        self.index
            .get(mnemonic)
            .copied()
            .unwrap_or_else(|| self.other_index())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocab serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidInput(format!("vocab JSON: {e}")))
    }
}

/// Build a vocabulary from the `k` most frequent mnemonics across every
/// sample of every given family. Ties break lexicographically; when fewer
/// than `k` distinct mnemonics exist, all of them are used.
pub fn build_vocab(corpora: &[FamilyCorpus], k: usize) -> Result<OpcodeVocab> {
    if k == 0 {
        return Err(Error::InvalidInput("vocabulary size k must be >= 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for corpus in corpora {
        for sample in &corpus.samples {
            for mnemonic in &sample.mnemonics {
                *counts.entry(mnemonic.as_str()).or_insert(0) += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::InvalidInput("combined corpora contain no opcodes".into()));
    }
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(name, count)| (name.to_string(), count))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top: Vec<String> = ranked.iter().take(k).map(|(name, _)| name.clone()).collect();
    OpcodeVocab::from_parts(top, ranked)
}

/// Encode one mnemonic sequence; unknown mnemonics map to the "other" index.
pub fn encode_opcodes(sample: &[String], vocab: &OpcodeVocab) -> Result<Vec<usize>> {
    if sample.is_empty() {
        return Err(Error::EmptyEncoding);
    }
    Ok(sample.iter().map(|m| vocab.encode_one(m)).collect())
}

/// Fraction of encoded symbols that landed inside the ranked vocabulary
/// (i.e. are not the "other" bucket).
pub fn in_vocab_fraction(encoded: &[Vec<usize>], other_index: usize) -> f64 {
    let mut total = 0usize;
    let mut in_vocab = 0usize;
    for seq in encoded {
        total += seq.len();
        in_vocab += seq.iter().filter(|&&s| s != other_index).count();
    }
    if total == 0 {
        return 0.0;
    }
    in_vocab as f64 / total as f64
}

/// Which samples of a family train and which test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub family: String,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
    #[serde(rename = "T")]
    pub target_t: usize,
}

/// Draw samples without replacement in seeded random order until the
/// combined training length reaches `target_t`; the sample that crosses the
/// threshold is included whole and everything remaining becomes test data.
pub fn split(corpus: &FamilyCorpus, target_t: usize, seed: u64) -> Result<SplitPlan> {
    if target_t == 0 {
        return Err(Error::InvalidInput("split target length must be >= 1".into()));
    }
    let available = corpus.total_length();
    if available < target_t {
        return Err(Error::InsufficientData {
            available,
            requested: target_t,
        });
    }
    let mut order: Vec<usize> = (0..corpus.samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut train_ids = Vec::new();
    let mut test_ids = Vec::new();
    let mut cumulative = 0usize;
    for &idx in &order {
        let sample = &corpus.samples[idx];
        if cumulative < target_t {
            cumulative += sample.mnemonics.len();
            train_ids.push(sample.id.clone());
        } else {
            test_ids.push(sample.id.clone());
        }
    }
    Ok(SplitPlan {
        family: corpus.family.clone(),
        train_ids,
        test_ids,
        seed,
        target_t,
    })
}

/// Sample an observation sequence from a known model: a hidden path from
/// `pi`/`A`, emissions from `B`. Deterministic per seed.
pub fn generate(model: &Model, length: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_rng(model, length, &mut rng)
}

/// Sample `count` sequences of `length` symbols from one seeded stream.
pub fn generate_set(model: &Model, count: usize, length: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| generate_with_rng(model, length, &mut rng))
        .collect()
}

fn generate_with_rng(model: &Model, length: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut state = sample_index(model.pi(), rng);
    out.push(sample_index(model.b().row(state), rng));
    for _ in 1..length {
        state = sample_index(model.a().row(state), rng);
        out.push(sample_index(model.b().row(state), rng));
    }
    out
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return i;
        }
    }
    weights.len() - 1
}

/// Load one family directory of opcode files (one mnemonic per line, blank
/// lines skipped). Files are visited in name order so loading is
/// deterministic; the family label is the directory name.
pub fn load_family_corpus(dir: &Path) -> Result<FamilyCorpus> {
    let family = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad family directory {dir:?}")))?
        .to_string();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_file())
        .collect();
    entries.sort_by_key(|e| e.file_name());

    let mut samples = Vec::new();
    for entry in entries {
        let path = entry.path();
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = std::fs::read_to_string(&path)?;
        let mnemonics: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if mnemonics.is_empty() {
            continue;
        }
        samples.push(OpcodeSample { id, mnemonics });
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput(format!(
            "family directory {dir:?} contains no non-empty opcode files"
        )));
    }
    Ok(FamilyCorpus { family, samples })
}

/// Load every family subdirectory under `root`, sorted by name.
pub fn load_corpora(root: &Path) -> Result<Vec<FamilyCorpus>> {
    let mut dirs: Vec<_> = std::fs::read_dir(root)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .collect();
    dirs.sort_by_key(|e| e.file_name());
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{root:?} contains no family subdirectories"
        )));
    }
    dirs.iter().map(|e| load_family_corpus(&e.path())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(family: &str, samples: &[(&str, &[&str])]) -> FamilyCorpus {
        FamilyCorpus {
            family: family.to_string(),
            samples: samples
                .iter()
                .map(|(id, ops)| OpcodeSample {
                    id: id.to_string(),
                    mnemonics: ops.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn encode_text_basic_mapping() {
        assert_eq!(encode_text("Ab c").unwrap(), vec![0, 1, 26, 2]);
        assert_eq!(
            encode_text("cat\ndog").unwrap(),
            vec![2, 0, 19, 26, 3, 14, 6]
        );
    }

    #[test]
    fn encode_text_rejects_empty_output() {
        assert!(matches!(encode_text(""), Err(Error::EmptyEncoding)));
        assert!(matches!(encode_text("1234"), Err(Error::EmptyEncoding)));
    }

    #[test]
    fn encode_text_collapses_spaces_from_dropped_characters() {
        // "a . b": dropping '.' leaves two adjacent spaces.
        assert_eq!(encode_text("a . b").unwrap(), vec![0, 26, 1]);
        assert_eq!(encode_text("a\r\nb").unwrap(), vec![0, 26, 1]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let text = "The quick brown fox\njumps over the lazy dog";
        let symbols = encode_text(text).unwrap();
        assert!(symbols.iter().all(|&s| s < TEXT_VOCAB_SIZE));
        let decoded = decode_text(&symbols).unwrap();
        assert_eq!(decoded, "THE QUICK BROWN FOX JUMPS OVER THE LAZY DOG");
    }

    #[test]
    fn vocab_ranks_by_frequency() {
        // Counts across both samples: mov 10, push 7, xor 2.
        let c = corpus(
            "fam",
            &[
                ("s1", &["mov", "mov", "mov", "push", "push", "xor"]),
                (
                    "s2",
                    &[
                        "mov", "mov", "mov", "mov", "mov", "mov", "mov", "push", "push", "push",
                        "push", "push", "xor",
                    ],
                ),
            ],
        );
        let vocab = build_vocab(&[c], 2).unwrap();
        assert_eq!(vocab.top_opcodes(), &["mov".to_string(), "push".to_string()]);
        assert_eq!(vocab.other_index(), 2);
        assert_eq!(vocab.vocab_size(), 3);
        assert_eq!(
            vocab.frequencies(),
            &[
                ("mov".to_string(), 10),
                ("push".to_string(), 7),
                ("xor".to_string(), 2)
            ]
        );
    }

    #[test]
    fn vocab_breaks_ties_lexicographically() {
        let c = corpus("fam", &[("s", &["sub", "add", "sub", "add", "nop"])]);
        let vocab = build_vocab(&[c], 1).unwrap();
        assert_eq!(vocab.top_opcodes(), &["add".to_string()]);
    }

    #[test]
    fn vocab_with_k_larger_than_distinct_uses_all() {
        let c = corpus("fam", &[("s", &["add", "sub"])]);
        let vocab = build_vocab(&[c], 10).unwrap();
        assert_eq!(vocab.top_opcodes().len(), 2);
        assert_eq!(vocab.vocab_size(), 3);
    }

    #[test]
    fn vocab_is_stable_under_corpus_reordering() {
        let a = corpus("a", &[("s1", &["mov", "xor", "mov"])]);
        let b = corpus("b", &[("s2", &["push", "push", "xor"])]);
        let v1 = build_vocab(&[a.clone(), b.clone()], 2).unwrap();
        let v2 = build_vocab(&[b, a], 2).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn encode_opcodes_maps_unknown_to_other() {
        let c = corpus("fam", &[("s", &["mov", "mov", "push"])]);
        let vocab = build_vocab(&[c], 2).unwrap();
        let sample: Vec<String> = ["mov", "xor", "push"].iter().map(|s| s.to_string()).collect();
        assert_eq!(encode_opcodes(&sample, &vocab).unwrap(), vec![0, 2, 1]);
        assert!(matches!(
            encode_opcodes(&[], &vocab),
            Err(Error::EmptyEncoding)
        ));

        let unknown: Vec<String> = ["foo", "bar"].iter().map(|s| s.to_string()).collect();
        let encoded = encode_opcodes(&unknown, &vocab).unwrap();
        assert!(encoded.iter().all(|&s| s == vocab.other_index()));
        assert!(encoded.iter().all(|&s| s < vocab.vocab_size()));
    }

    #[test]
    fn coverage_fraction_counts_in_vocab_symbols() {
        let encoded = vec![vec![0, 1, 2, 2], vec![0, 2]];
        let f = in_vocab_fraction(&encoded, 2);
        assert!((f - 3.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn vocab_json_round_trip() {
        let c = corpus("fam", &[("s", &["mov", "mov", "push", "xor"])]);
        let vocab = build_vocab(&[c], 2).unwrap();
        let json = vocab.to_json();
        let back = OpcodeVocab::from_json(&json).unwrap();
        assert_eq!(vocab, back);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let c = corpus(
            "fam",
            &[
                ("a", &["x"; 40]),
                ("b", &["x"; 30]),
                ("c", &["x"; 20]),
                ("d", &["x"; 10]),
            ],
        );
        let p1 = split(&c, 50, 7).unwrap();
        let p2 = split(&c, 50, 7).unwrap();
        assert_eq!(p1, p2);
        for id in &p1.train_ids {
            assert!(!p1.test_ids.contains(id));
        }
        let mut all: Vec<_> = p1.train_ids.iter().chain(p1.test_ids.iter()).collect();
        all.sort();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn split_includes_crossing_sample_whole() {
        let c = corpus("fam", &[("a", &["x"; 40]), ("b", &["x"; 30])]);
        // Whatever the order, one sample never reaches 60, so both train.
        let plan = split(&c, 60, 1).unwrap();
        assert_eq!(plan.train_ids.len(), 2);
        assert!(plan.test_ids.is_empty());
    }

    #[test]
    fn split_target_one_takes_single_sample() {
        let c = corpus("fam", &[("a", &["x"; 5]), ("b", &["x"; 5]), ("c", &["x"; 5])]);
        let plan = split(&c, 1, 3).unwrap();
        assert_eq!(plan.train_ids.len(), 1);
        assert_eq!(plan.test_ids.len(), 2);
    }

    #[test]
    fn split_reports_insufficient_data() {
        let c = corpus("fam", &[("a", &["x"; 5])]);
        match split(&c, 6, 0) {
            Err(Error::InsufficientData {
                available,
                requested,
            }) => {
                assert_eq!(available, 5);
                assert_eq!(requested, 6);
            }
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn exact_length_sample_leaves_empty_test_set() {
        let c = corpus("fam", &[("only", &["x"; 10])]);
        let plan = split(&c, 10, 0).unwrap();
        assert_eq!(plan.train_ids, vec!["only".to_string()]);
        assert!(plan.test_ids.is_empty());
    }

    #[test]
    fn generate_deterministic_emissions() {
        let model = Model::from_rows(vec![1.0], vec![vec![1.0]], vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(generate(&model, 5, 3), vec![0; 5]);
        let m2 = Model::from_rows(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
        )
        .unwrap();
        assert_eq!(generate(&m2, 64, 11), generate(&m2, 64, 11));
        assert_ne!(generate(&m2, 64, 11), generate(&m2, 64, 12));
    }

    #[test]
    fn training_on_generated_data_recovers_planted_emissions() {
        use crate::momentum::MomentumPolicy;
        use crate::train::{train_from, InitScheme, TrainConfig};

        // Well-separated two-state generator.
        let planted = Model::from_rows(
            vec![0.5, 0.5],
            vec![vec![0.85, 0.15], vec![0.2, 0.8]],
            vec![vec![0.75, 0.2, 0.03, 0.02], vec![0.05, 0.05, 0.5, 0.4]],
        )
        .unwrap();
        let seq = generate(&planted, 50_000, 7);
        let obs = crate::model::ObservationSet::single(seq, 4).unwrap();
        let mut rng = crate::train::restart_rng(3, 0);
        let initial =
            crate::train::init_model(&InitScheme::UniformRandom, 2, 4, &mut rng).unwrap();
        let cfg = TrainConfig::new(2, 200, 1, 0);
        let trained = train_from(initial, &obs, &cfg, &MomentumPolicy::none())
            .unwrap()
            .final_model;

        // Compare emission rows up to state permutation; a loose statistical
        // sanity bound, not a sharp one.
        let row_distance = |learned: &[f64], truth: &[f64]| -> f64 {
            learned
                .iter()
                .zip(truth)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let direct = row_distance(trained.b().row(0), planted.b().row(0))
            .max(row_distance(trained.b().row(1), planted.b().row(1)));
        let swapped = row_distance(trained.b().row(0), planted.b().row(1))
            .max(row_distance(trained.b().row(1), planted.b().row(0)));
        let best = direct.min(swapped);
        assert!(best < 0.05, "worst emission entry error {best}");
    }

    #[test]
    fn generated_frequencies_match_stationary_emission_distribution() {
        let model = Model::from_rows(
            vec![0.5, 0.5],
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        )
        .unwrap();
        // Stationary distribution of A by power iteration (test oracle).
        let mut dist = vec![0.5, 0.5];
        for _ in 0..200 {
            let next = vec![
                dist[0] * 0.8 + dist[1] * 0.3,
                dist[0] * 0.2 + dist[1] * 0.7,
            ];
            dist = next;
        }
        let expected_sym0 = dist[0] * 0.9 + dist[1] * 0.2;

        let t_len = 100_000;
        let seq = generate(&model, t_len, 42);
        let freq0 = seq.iter().filter(|&&s| s == 0).count() as f64 / t_len as f64;
        // Successive symbols are correlated through the state chain; the
        // second eigenvalue of A (0.8 + 0.7 - 1 = 0.5) inflates the variance
        // of the empirical frequency by at most (1 + l) / (1 - l).
        let lambda: f64 = 0.5;
        let standard_error = (expected_sym0 * (1.0 - expected_sym0) / t_len as f64).sqrt()
            * ((1.0 + lambda) / (1.0 - lambda)).sqrt();
        assert!(
            (freq0 - expected_sym0).abs() < 3.0 * standard_error,
            "freq {freq0} vs expected {expected_sym0} (se {standard_error})"
        );
    }
}
