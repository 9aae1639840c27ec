//! `compare`: paired with/without-momentum training on shared
//! initializations; writes per-restart curves and a summary.

use momentum_hmm::eval::{paired_experiment, write_curves_csv, write_summary_csv};
use momentum_hmm::Variant;

use crate::config::{write_effective_config, ExperimentConfig};
use crate::CliError;

pub fn run(cfg: ExperimentConfig) -> Result<(), CliError> {
    let mut errors = cfg.validation_errors();
    if cfg.momentum.variant == Variant::None {
        errors.push("compare requires a momentum policy (classic or nesterov)".into());
    }
    if cfg.stop_tol.is_some() {
        errors.push("compare requires a fixed iteration budget (remove stop_tol)".into());
    }
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    write_effective_config(&cfg.out, &cfg)?;
    let obs = cfg.load_observations()?;
    eprintln!(
        "paired comparison: N={}, M={}, {} symbols, {} restart(s), {} iteration(s), {} {}",
        cfg.n,
        obs.vocab_size(),
        obs.total_length(),
        cfg.restarts,
        cfg.iters,
        cfg.momentum.variant.label(),
        cfg.momentum.factor,
    );

    let curves = paired_experiment(&obs, &cfg.to_train_config(), &cfg.momentum, &cfg.checkpoints)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    for failure in &curves.failures {
        eprintln!("restart {} failed: {}", failure.restart, failure.message);
    }
    eprintln!(
        "{} of {} restarts completed in both arms",
        curves.restarts_used(),
        curves.restarts_requested
    );

    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &curves)
        .map_err(|e| CliError::runtime(format!("writing curves: {e}")))?;
    let path = cfg.out.join("curves.csv");
    std::fs::write(&path, buf).map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;

    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &curves)
        .map_err(|e| CliError::runtime(format!("writing summary: {e}")))?;
    let path = cfg.out.join("summary.csv");
    std::fs::write(&path, buf).map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;

    if !curves.failures.is_empty() {
        let path = cfg.out.join("failures.json");
        let json = serde_json::to_string_pretty(&curves.failures)
            .map_err(|e| CliError::runtime(format!("serializing failures: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::runtime(format!("writing {path:?}: {e}")))?;
    }
    Ok(())
}
