//! `train`: multi-restart training; persists the best model, all traces, and
//! checkpoint snapshots.

use momentum_hmm::train::train_restarts;

use crate::config::{write_effective_config, ExperimentConfig};
use crate::CliError;

pub fn run(cfg: ExperimentConfig) -> Result<(), CliError> {
    let errors = cfg.validation_errors();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    write_effective_config(&cfg.out, &cfg)?;
    let obs = cfg.load_observations()?;
    eprintln!(
        "training: N={}, M={}, {} sequence(s), {} symbols, {} restart(s), {} iteration(s)",
        cfg.n,
        obs.vocab_size(),
        obs.sequences().len(),
        obs.total_length(),
        cfg.restarts,
        cfg.iters
    );

    let sweep = train_restarts(&obs, &cfg.to_train_config(), &cfg.momentum)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    for failure in &sweep.failures {
        eprintln!("restart {} failed: {}", failure.restart, failure.message);
    }

    let best = sweep.best();
    eprintln!(
        "best restart {} with final log-likelihood {}",
        best.restart_index,
        best.final_score()
    );

    let model_path = cfg.out.join("model.json");
    std::fs::write(&model_path, best.final_model.to_json() + "\n")
        .map_err(|e| CliError::runtime(format!("writing {model_path:?}: {e}")))?;

    let trace_path = cfg.out.join("trace.csv");
    let mut buf = Vec::new();
    momentum_hmm::train::write_trace_csv(
        &mut buf,
        &cfg.run_id,
        cfg.momentum.variant.label(),
        &sweep.records,
    )
    .map_err(|e| CliError::runtime(format!("writing trace: {e}")))?;
    std::fs::write(&trace_path, buf)
        .map_err(|e| CliError::runtime(format!("writing {trace_path:?}: {e}")))?;

    if !best.snapshots.is_empty() {
        let dir = cfg.out.join("checkpoints");
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::runtime(format!("creating {dir:?}: {e}")))?;
        for (iteration, model) in &best.snapshots {
            let path = dir.join(format!("model_iter_{iteration:04}.json"));
            std::fs::write(&path, model.to_json() + "\n")
                .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;
        }
    }

    if !sweep.failures.is_empty() {
        let path = cfg.out.join("failures.json");
        let json = serde_json::to_string_pretty(&sweep.failures)
            .map_err(|e| CliError::runtime(format!("serializing failures: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;
    }
    Ok(())
}
