//! Experiment configuration: JSON files with flat keys, CLI flags override
//! file values, and the resolved ("effective") config is written next to the
//! outputs so any run can be reproduced from it.

use std::path::{Path, PathBuf};

use momentum_hmm::momentum::MomentumPolicy;
use momentum_hmm::train::InitScheme;
use momentum_hmm::{Model, ObservationSet};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where training/comparison sequences come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// UTF-8 text encoded over the 27-symbol alphabet; the first `t` symbols
    /// form a single training sequence.
    Text { path: PathBuf, t: usize },
    /// Pre-encoded sequences: a file (one sequence) or a directory of files,
    /// each holding one newline-delimited integer sequence.
    Encoded { path: PathBuf, vocab_size: usize },
    /// A directory of opcode files (one mnemonic per line) for one family,
    /// encoded with a previously built vocabulary.
    Opcodes { path: PathBuf, vocab: PathBuf },
    /// Sequences sampled from a known model; the generator stream is derived
    /// from the experiment seed.
    Synthetic {
        model: PathBuf,
        sequences: usize,
        length: usize,
    },
}

/// Configuration shared by `train` and `compare`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub data: DataSource,
    pub n: usize,
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub smoothing: f64,
    pub init: InitScheme,
    pub momentum: MomentumPolicy,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Exhaustive validation; every failure is reported, not just the first.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.n == 0 {
            errors.push("n must be >= 1".into());
        }
        if self.iters == 0 {
            errors.push("iters must be >= 1".into());
        }
        if self.restarts == 0 {
            errors.push("restarts must be >= 1".into());
        }
        if !self.smoothing.is_finite() || self.smoothing < 0.0 {
            errors.push(format!("smoothing {} must be finite and >= 0", self.smoothing));
        }
        if let Err(e) = self.momentum.validate() {
            errors.push(e.to_string());
        }
        if let InitScheme::NearUniform { jitter } = &self.init {
            if *jitter <= 0.0 {
                errors.push(format!("init jitter {jitter} must be > 0"));
            }
        }
        for pair in self.checkpoints.windows(2) {
            if pair[1] <= pair[0] {
                errors.push("checkpoints must be strictly ascending".into());
                break;
            }
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.iters {
                errors.push(format!("checkpoint {last} exceeds iteration budget {}", self.iters));
            }
        }
        match &self.data {
            DataSource::Text { path, t } => {
                if *t == 0 {
                    errors.push("text data source requires t >= 1".into());
                }
                if !path.exists() {
                    errors.push(format!("text file {path:?} does not exist"));
                }
            }
            DataSource::Encoded { path, vocab_size } => {
                if *vocab_size == 0 {
                    errors.push("encoded data source requires vocab_size >= 1".into());
                }
                if !path.exists() {
                    errors.push(format!("encoded path {path:?} does not exist"));
                }
            }
            DataSource::Opcodes { path, vocab } => {
                if !path.is_dir() {
                    errors.push(format!("opcode directory {path:?} does not exist"));
                }
                if !vocab.exists() {
                    errors.push(format!("vocabulary file {vocab:?} does not exist"));
                }
            }
            DataSource::Synthetic {
                model,
                sequences,
                length,
            } => {
                if *sequences == 0 || *length == 0 {
                    errors.push("synthetic data source requires sequences >= 1 and length >= 1".into());
                }
                if !model.exists() {
                    errors.push(format!("model file {model:?} does not exist"));
                }
            }
        }
        errors
    }

    pub fn to_train_config(&self) -> momentum_hmm::TrainConfig {
        momentum_hmm::TrainConfig {
            n: self.n,
            max_iters: self.iters,
            restarts: self.restarts,
            seed: self.seed,
            smoothing: self.smoothing,
            init: self.init.clone(),
            stop_tol: self.stop_tol,
            checkpoints: self.checkpoints.clone(),
        }
    }

    /// Materialize the configured data source as an observation set.
    pub fn load_observations(&self) -> Result<ObservationSet, CliError> {
        match &self.data {
            DataSource::Text { path, t } => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| CliError::runtime(format!("reading {path:?}: {e}")))?;
                let symbols = momentum_hmm::data::encode_text(&raw)
                    .map_err(|e| CliError::runtime(format!("encoding {path:?}: {e}")))?;
                if symbols.len() < *t {
                    return Err(CliError::runtime(format!(
                        "text file {path:?} encodes to {} symbols, {t} requested",
                        symbols.len()
                    )));
                }
                let seq = symbols[..*t].to_vec();
                ObservationSet::single(seq, momentum_hmm::data::TEXT_VOCAB_SIZE)
                    .map_err(|e| CliError::runtime(e.to_string()))
            }
            DataSource::Encoded { path, vocab_size } => {
                let files = sequence_files(path)?;
                let mut sequences = Vec::with_capacity(files.len());
                for file in files {
                    sequences.push(read_symbol_file(&file)?);
                }
                ObservationSet::new(sequences, *vocab_size)
                    .map_err(|e| CliError::runtime(e.to_string()))
            }
            DataSource::Opcodes { path, vocab } => {
                let vocab = load_vocab(vocab)?;
                let corpus = momentum_hmm::data::load_family_corpus(path)
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                let mut sequences = Vec::with_capacity(corpus.samples.len());
                for sample in &corpus.samples {
                    let encoded = momentum_hmm::data::encode_opcodes(&sample.mnemonics, &vocab)
                        .map_err(|e| {
                            CliError::runtime(format!("sample {}: {e}", sample.id))
                        })?;
                    sequences.push(encoded);
                }
                ObservationSet::new(sequences, vocab.vocab_size())
                    .map_err(|e| CliError::runtime(e.to_string()))
            }
            DataSource::Synthetic {
                model,
                sequences,
                length,
            } => {
                let model = load_model(model)?;
                let seqs =
                    momentum_hmm::data::generate_set(&model, *sequences, *length, self.seed);
                ObservationSet::new(seqs, model.m()).map_err(|e| CliError::runtime(e.to_string()))
            }
        }
    }
}

/// Configuration for `classify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub run_id: String,
    /// One entry per family. A path may be a model JSON file (scored as the
    /// single "final" checkpoint) or a `train` output directory containing
    /// `model.json` and `checkpoints/`.
    pub models: Vec<FamilyModelRef>,
    /// Directory of per-family subdirectories of test samples.
    pub test: PathBuf,
    /// When set, test files hold opcode mnemonics encoded with this
    /// vocabulary; otherwise they hold newline-delimited integers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyModelRef {
    pub family: String,
    pub path: PathBuf,
}

impl ClassifyConfig {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.models.len() < 2 {
            errors.push("need >= 2 families".into());
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.family.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.models.len() {
            errors.push("duplicate family names in --model".into());
        }
        for m in &self.models {
            if !m.path.exists() {
                errors.push(format!("model path {:?} does not exist", m.path));
            }
        }
        if !self.test.is_dir() {
            errors.push(format!("test directory {:?} does not exist", self.test));
        }
        if let Some(vocab) = &self.vocab {
            if !vocab.exists() {
                errors.push(format!("vocabulary file {vocab:?} does not exist"));
            }
        }
        for pair in self.checkpoints.windows(2) {
            if pair[1] <= pair[0] {
                errors.push("checkpoints must be strictly ascending".into());
                break;
            }
        }
        errors
    }
}

/// Configuration for `encode`, one variant per input kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncodeConfig {
    Text {
        input: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<usize>,
        out: PathBuf,
    },
    Opcodes {
        input: PathBuf,
        k: usize,
        /// When set, also split each family into train/test pools by
        /// cumulative length.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        split_t: Option<usize>,
        seed: u64,
        out: PathBuf,
    },
    Synthetic {
        model: PathBuf,
        sequences: usize,
        length: usize,
        seed: u64,
        out: PathBuf,
    },
}

impl EncodeConfig {
    pub fn out(&self) -> &Path {
        match self {
            EncodeConfig::Text { out, .. }
            | EncodeConfig::Opcodes { out, .. }
            | EncodeConfig::Synthetic { out, .. } => out,
        }
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        match self {
            EncodeConfig::Text { input, t, .. } => {
                if !input.is_file() {
                    errors.push(format!("input file {input:?} does not exist"));
                }
                if let Some(0) = t {
                    errors.push("-T must be >= 1".into());
                }
            }
            EncodeConfig::Opcodes {
                input, k, split_t, ..
            } => {
                if !input.is_dir() {
                    errors.push(format!("input directory {input:?} does not exist"));
                }
                if *k == 0 {
                    errors.push("-k must be >= 1".into());
                }
                if let Some(0) = split_t {
                    errors.push("split target -T must be >= 1".into());
                }
            }
            EncodeConfig::Synthetic {
                model,
                sequences,
                length,
                ..
            } => {
                if !model.is_file() {
                    errors.push(format!("model file {model:?} does not exist"));
                }
                if *sequences == 0 {
                    errors.push("--sequences must be >= 1".into());
                }
                if *length == 0 {
                    errors.push("--length must be >= 1".into());
                }
            }
        }
        errors
    }
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("reading {path:?}: {e}")))?;
    Model::from_json(&json).map_err(|e| CliError::runtime(format!("{path:?}: {e}")))
}

pub fn load_vocab(path: &Path) -> Result<momentum_hmm::data::OpcodeVocab, CliError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("reading {path:?}: {e}")))?;
    momentum_hmm::data::OpcodeVocab::from_json(&json)
        .map_err(|e| CliError::runtime(format!("{path:?}: {e}")))
}

/// One newline-delimited integer sequence.
pub fn read_symbol_file(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("reading {path:?}: {e}")))?;
    let mut symbols = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sym: usize = line.parse().map_err(|_| {
            CliError::runtime(format!("{path:?} line {}: not an integer", lineno + 1))
        })?;
        symbols.push(sym);
    }
    if symbols.is_empty() {
        return Err(CliError::runtime(format!("{path:?} contains no symbols")));
    }
    Ok(symbols)
}

pub fn write_symbol_file(path: &Path, symbols: &[usize]) -> Result<(), CliError> {
    let mut text = String::with_capacity(symbols.len() * 3);
    for s in symbols {
        text.push_str(&s.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))
}

/// Files under `path` (or `path` itself), sorted by name.
pub fn sequence_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::runtime(format!("reading {path:?}: {e}")))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::runtime(format!("{path:?} contains no files")));
    }
    Ok(files)
}

/// Parse a JSON config file.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(vec![format!("reading config {path:?}: {e}")]))?;
    serde_json::from_str(&json)
        .map_err(|e| CliError::validation(vec![format!("config {path:?}: {e}")]))
}

/// Write the resolved config next to the outputs.
pub fn write_effective_config<T: Serialize>(out_dir: &Path, config: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("creating {out_dir:?}: {e}")))?;
    let mut json = serde_json::to_string_pretty(config)
        .map_err(|e| CliError::runtime(format!("serializing config: {e}")))?;
    json.push('\n');
    let path = out_dir.join("effective_config.json");
    std::fs::write(&path, json).map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))
}
