//! `encode`: turn raw text, opcode directories, or a generator model into
//! integer sequence files on disk.

use std::fmt::Write as _;
use std::path::Path;

use momentum_hmm::data::{
    build_vocab, encode_opcodes, encode_text, generate_set, in_vocab_fraction, load_corpora,
    split, FamilyCorpus,
};

use crate::config::{load_model, write_effective_config, write_symbol_file, EncodeConfig};
use crate::CliError;

pub fn run(cfg: EncodeConfig) -> Result<(), CliError> {
    let errors = cfg.validation_errors();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    write_effective_config(cfg.out(), &cfg)?;

    match &cfg {
        EncodeConfig::Text { input, t, out } => {
            let raw = std::fs::read_to_string(input)
                .map_err(|e| CliError::runtime(format!("reading {input:?}: {e}")))?;
            let mut symbols =
                encode_text(&raw).map_err(|e| CliError::runtime(format!("{input:?}: {e}")))?;
            if let Some(t) = t {
                if symbols.len() < *t {
                    return Err(CliError::runtime(format!(
                        "{input:?} encodes to {} symbols, {t} requested",
                        symbols.len()
                    )));
                }
                symbols.truncate(*t);
            }
            write_symbol_file(&out.join("sequence.txt"), &symbols)?;
            eprintln!("encoded {} symbols from {input:?}", symbols.len());
        }
        EncodeConfig::Opcodes {
            input,
            k,
            split_t,
            seed,
            out,
        } => {
            let corpora =
                load_corpora(input).map_err(|e| CliError::runtime(e.to_string()))?;
            let vocab = build_vocab(&corpora, *k).map_err(|e| CliError::runtime(e.to_string()))?;
            write_text(&out.join("vocab.json"), &(vocab.to_json() + "\n"))?;
            eprintln!(
                "vocabulary: {} ranked opcodes + other = {} symbols",
                vocab.top_opcodes().len(),
                vocab.vocab_size()
            );

            let mut coverage = String::from("family,samples,symbols,in_vocab_fraction\n");
            let mut all_encoded: Vec<Vec<usize>> = Vec::new();
            for corpus in &corpora {
                let family_dir = out.join("encoded").join(&corpus.family);
                std::fs::create_dir_all(&family_dir)
                    .map_err(|e| CliError::runtime(format!("creating {family_dir:?}: {e}")))?;
                let mut family_encoded = Vec::with_capacity(corpus.samples.len());
                for sample in &corpus.samples {
                    let encoded = encode_opcodes(&sample.mnemonics, &vocab)
                        .map_err(|e| CliError::runtime(format!("sample {}: {e}", sample.id)))?;
                    write_symbol_file(&family_dir.join(format!("{}.txt", sample.id)), &encoded)?;
                    family_encoded.push(encoded);
                }
                let symbols: usize = family_encoded.iter().map(Vec::len).sum();
                let fraction = in_vocab_fraction(&family_encoded, vocab.other_index());
                let _ = writeln!(
                    coverage,
                    "{},{},{symbols},{fraction}",
                    corpus.family,
                    corpus.samples.len()
                );
                all_encoded.extend(family_encoded);
            }
            let total_symbols: usize = all_encoded.iter().map(Vec::len).sum();
            let total_fraction = in_vocab_fraction(&all_encoded, vocab.other_index());
            let total_samples: usize = corpora.iter().map(|c| c.samples.len()).sum();
            let _ = writeln!(coverage, "all,{total_samples},{total_symbols},{total_fraction}");
            write_text(&out.join("coverage.csv"), &coverage)?;

            if let Some(target) = split_t {
                split_families(&corpora, &vocab, *target, *seed, out)?;
            }
        }
        EncodeConfig::Synthetic {
            model,
            sequences,
            length,
            seed,
            out,
        } => {
            let model = load_model(model)?;
            let seqs = generate_set(&model, *sequences, *length, *seed);
            let dir = out.join("encoded");
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::runtime(format!("creating {dir:?}: {e}")))?;
            for (i, seq) in seqs.iter().enumerate() {
                write_symbol_file(&dir.join(format!("seq_{i:04}.txt")), seq)?;
            }
            eprintln!("generated {sequences} sequences of {length} symbols");
        }
    }
    Ok(())
}

fn split_families(
    corpora: &[FamilyCorpus],
    vocab: &momentum_hmm::data::OpcodeVocab,
    target: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    for corpus in corpora {
        let plan =
            split(corpus, target, seed).map_err(|e| {
                CliError::runtime(format!("family {}: {e}", corpus.family))
            })?;
        if plan.test_ids.is_empty() {
            eprintln!(
                "warning: family {} has no test samples left after the split",
                corpus.family
            );
        }
        let plan_json = serde_json::to_string_pretty(&plan)
            .map_err(|e| CliError::runtime(format!("serializing split plan: {e}")))?;
        let split_dir = out.join("split");
        std::fs::create_dir_all(&split_dir)
            .map_err(|e| CliError::runtime(format!("creating {split_dir:?}: {e}")))?;
        write_text(
            &split_dir.join(format!("{}.json", corpus.family)),
            &(plan_json + "\n"),
        )?;

        for (subset, ids) in [("train", &plan.train_ids), ("test", &plan.test_ids)] {
            let dir = out.join(subset).join(&corpus.family);
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::runtime(format!("creating {dir:?}: {e}")))?;
            for id in ids {
                let sample = corpus
                    .samples
                    .iter()
                    .find(|s| &s.id == id)
                    .expect("split plan ids come from the corpus");
                let encoded = encode_opcodes(&sample.mnemonics, vocab)
                    .map_err(|e| CliError::runtime(format!("sample {id}: {e}")))?;
                write_symbol_file(&dir.join(format!("{id}.txt")), &encoded)?;
            }
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))
}
