//! `classify`: score labeled test samples against per-family models at one
//! or more training checkpoints, export score vectors, and report
//! one-vs-rest AUC per family.

use std::path::Path;

use momentum_hmm::data::encode_opcodes;
use momentum_hmm::eval::{
    auc_one_vs_rest, score_matrix, write_excluded_json, write_score_vectors_csv, LabeledSample,
};
use momentum_hmm::{Error, Model};
use serde::Serialize;

use crate::config::{load_model, load_vocab, write_effective_config, ClassifyConfig};
use crate::CliError;

#[derive(Serialize)]
struct RocEntry {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    positives: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negatives: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn run(cfg: ClassifyConfig) -> Result<(), CliError> {
    let errors = cfg.validation_errors();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    write_effective_config(&cfg.out, &cfg)?;

    let vocab = match &cfg.vocab {
        Some(path) => Some(load_vocab(path)?),
        None => None,
    };
    let samples = load_test_samples(&cfg.test, vocab.as_ref())?;
    eprintln!("loaded {} test samples", samples.len());

    // One scoring pass per checkpoint; no checkpoints means one pass over
    // the final models.
    type Pass = (Option<usize>, Vec<(String, Model)>);
    let passes: Vec<Pass> = if cfg.checkpoints.is_empty() {
        vec![(None, load_final_models(&cfg)?)]
    } else {
        let mut passes = Vec::new();
        for &checkpoint in &cfg.checkpoints {
            passes.push((Some(checkpoint), load_checkpoint_models(&cfg, checkpoint)?));
        }
        passes
    };

    let mut roc_entries = Vec::new();
    for (checkpoint, models) in passes {
        let matrix = score_matrix(&models, &samples, checkpoint)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        if !matrix.excluded.is_empty() {
            eprintln!(
                "checkpoint {}: {} unscoreable sample(s) excluded",
                label(checkpoint),
                matrix.excluded.len()
            );
        }

        let mut buf = Vec::new();
        write_score_vectors_csv(&mut buf, &matrix)
            .map_err(|e| CliError::runtime(format!("writing scores: {e}")))?;
        let path = cfg.out.join(format!("scores_{}.csv", label(checkpoint)));
        std::fs::write(&path, buf)
            .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;

        let mut buf = Vec::new();
        write_excluded_json(&mut buf, &matrix).map_err(|e| CliError::runtime(e.to_string()))?;
        buf.push(b'\n');
        let path = cfg
            .out
            .join(format!("scores_{}_excluded.json", label(checkpoint)));
        std::fs::write(&path, buf)
            .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;

        // Degenerate classes are reported per family without aborting the
        // others.
        for family in &matrix.families {
            match auc_one_vs_rest(&matrix, family) {
                Ok(roc) => roc_entries.push(RocEntry {
                    family: roc.family,
                    checkpoint: roc.checkpoint,
                    auc: Some(roc.auc),
                    positives: Some(roc.positives),
                    negatives: Some(roc.negatives),
                    error: None,
                }),
                Err(e @ Error::DegenerateClass { .. }) => {
                    eprintln!("checkpoint {}: {e}", label(checkpoint));
                    roc_entries.push(RocEntry {
                        family: family.clone(),
                        checkpoint,
                        auc: None,
                        positives: None,
                        negatives: None,
                        error: Some(e.to_string()),
                    });
                }
                Err(e) => return Err(CliError::runtime(e.to_string())),
            }
        }
    }

    let json = serde_json::to_string_pretty(&roc_entries)
        .map_err(|e| CliError::runtime(format!("serializing AUC results: {e}")))?;
    let path = cfg.out.join("auc.json");
    std::fs::write(&path, json + "\n")
        .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;
    for entry in &roc_entries {
        if let Some(auc) = entry.auc {
            eprintln!(
                "family {} checkpoint {}: AUC {auc:.4}",
                entry.family,
                label(entry.checkpoint)
            );
        }
    }
    Ok(())
}

fn label(checkpoint: Option<usize>) -> String {
    match checkpoint {
        None => "final".to_string(),
        Some(k) => format!("iter_{k:04}"),
    }
}

fn load_final_models(cfg: &ClassifyConfig) -> Result<Vec<(String, Model)>, CliError> {
    cfg.models
        .iter()
        .map(|entry| {
            let path = if entry.path.is_dir() {
                entry.path.join("model.json")
            } else {
                entry.path.clone()
            };
            Ok((entry.family.clone(), load_model(&path)?))
        })
        .collect()
}

fn load_checkpoint_models(
    cfg: &ClassifyConfig,
    checkpoint: usize,
) -> Result<Vec<(String, Model)>, CliError> {
    cfg.models
        .iter()
        .map(|entry| {
            if !entry.path.is_dir() {
                return Err(CliError::runtime(format!(
                    "family {}: checkpoint scoring needs a train output directory, got file {:?}",
                    entry.family, entry.path
                )));
            }
            let path = entry
                .path
                .join("checkpoints")
                .join(format!("model_iter_{checkpoint:04}.json"));
            if !path.is_file() {
                return Err(CliError::runtime(format!(
                    "family {}: no snapshot for iteration {checkpoint} at {path:?}",
                    entry.family
                )));
            }
            Ok((entry.family.clone(), load_model(&path)?))
        })
        .collect()
}

/// Load `<test>/<family>/<sample>` files: newline-delimited integers, or
/// opcode mnemonics when a vocabulary is supplied.
fn load_test_samples(
    test_dir: &Path,
    vocab: Option<&momentum_hmm::data::OpcodeVocab>,
) -> Result<Vec<LabeledSample>, CliError> {
    let mut family_dirs: Vec<_> = std::fs::read_dir(test_dir)
        .map_err(|e| CliError::runtime(format!("reading {test_dir:?}: {e}")))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    family_dirs.sort();
    if family_dirs.is_empty() {
        return Err(CliError::runtime(format!(
            "{test_dir:?} contains no family subdirectories"
        )));
    }

    let mut samples = Vec::new();
    for dir in family_dirs {
        let family = dir
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        match vocab {
            Some(vocab) => {
                let corpus = momentum_hmm::data::load_family_corpus(&dir)
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                for sample in &corpus.samples {
                    let symbols = encode_opcodes(&sample.mnemonics, vocab)
                        .map_err(|e| CliError::runtime(format!("sample {}: {e}", sample.id)))?;
                    samples.push(LabeledSample {
                        id: format!("{family}/{}", sample.id),
                        family: family.clone(),
                        symbols,
                    });
                }
            }
            None => {
                for file in crate::config::sequence_files(&dir)? {
                    let stem = file
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or_default()
                        .to_string();
                    samples.push(LabeledSample {
                        id: format!("{family}/{stem}"),
                        family: family.clone(),
                        symbols: crate::config::read_symbol_file(&file)?,
                    });
                }
            }
        }
    }
    Ok(samples)
}
