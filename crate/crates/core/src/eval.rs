//! Paired with/without-momentum comparisons, per-family scoring matrices,
//! one-vs-rest ROC/AUC, and score-vector export.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ObservationSet};
use crate::momentum::{MomentumPolicy, Variant};
use crate::train::{init_model, restart_rng, train_from, RestartFailure, TrainConfig};

/// Paired training curves: for each restart one baseline run and one
/// momentum run started from the identical initial model.
#[derive(Clone, Debug)]
pub struct PairedCurves {
    /// Iterations at which the summary statistics are evaluated.
    pub iterations: Vec<usize>,
    /// Restart indices that completed in both arms.
    pub restart_indices: Vec<usize>,
    /// Full traces (length `max_iters + 1`) per surviving restart.
    pub baseline_traces: Vec<Vec<f64>>,
    pub momentum_traces: Vec<Vec<f64>>,
    /// Mean scores per grid iteration across surviving restarts.
    pub mean_baseline: Vec<f64>,
    pub mean_momentum: Vec<f64>,
    /// Mean and median of (momentum - baseline) per grid iteration; the mean
    /// is the headline metric.
    pub mean_delta: Vec<f64>,
    pub median_delta: Vec<f64>,
    pub restarts_requested: usize,
    pub failures: Vec<RestartFailure>,
    /// Label of the momentum arm's variant.
    pub variant: Variant,
}

impl PairedCurves {
    pub fn restarts_used(&self) -> usize {
        self.restart_indices.len()
    }
}

/// Run the paired comparison: every restart initializes one model from its
/// seed stream and clones it into a no-momentum arm and a `policy` arm.
///
/// `checkpoints` selects the iterations for the summary statistics; empty
/// means every iteration `0..=max_iters`. Restarts where either arm fails
/// are recorded and excluded from the means.
pub fn paired_experiment(
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
    checkpoints: &[usize],
) -> Result<PairedCurves> {
    cfg.validate()?;
    policy.validate()?;
    if cfg.stop_tol.is_some() {
        return Err(Error::InvalidInput(
            "paired comparison requires a fixed iteration budget (stop_tol must be unset)".into(),
        ));
    }
    for pair in checkpoints.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidInput(
                "checkpoints must be strictly ascending".into(),
            ));
        }
    }
    if let Some(&last) = checkpoints.last() {
        if last > cfg.max_iters {
            return Err(Error::InvalidInput(format!(
                "checkpoint {last} exceeds iteration budget {}",
                cfg.max_iters
            )));
        }
    }

    type ArmTraces = std::result::Result<(Vec<f64>, Vec<f64>), String>;
    let baseline_policy = MomentumPolicy::none();
    let outcomes: Vec<(usize, ArmTraces)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let result = (|| {
                let mut rng = restart_rng(cfg.seed, k);
                let initial = init_model(&cfg.init, cfg.n, obs.vocab_size(), &mut rng)
                    .map_err(|e| e.to_string())?;
                let base = train_from(initial.clone(), obs, cfg, &baseline_policy)
                    .map_err(|e| format!("baseline arm: {e}"))?;
                let mom = train_from(initial, obs, cfg, policy)
                    .map_err(|e| format!("momentum arm: {e}"))?;
                Ok((base.trace, mom.trace))
            })();
            (k, result)
        })
        .collect();

    let mut restart_indices = Vec::new();
    let mut baseline_traces = Vec::new();
    let mut momentum_traces = Vec::new();
    let mut failures = Vec::new();
    for (k, outcome) in outcomes {
        match outcome {
            Ok((base, mom)) => {
                restart_indices.push(k);
                baseline_traces.push(base);
                momentum_traces.push(mom);
            }
            Err(message) => failures.push(RestartFailure {
                restart: k,
                message,
            }),
        }
    }
    if restart_indices.is_empty() {
        return Err(Error::AllRestartsFailed {
            restarts: cfg.restarts,
            first: Box::new(Error::InvalidInput(
                failures
                    .first()
                    .map(|f| f.message.clone())
                    .unwrap_or_else(|| "unknown".into()),
            )),
        });
    }

    let iterations: Vec<usize> = if checkpoints.is_empty() {
        (0..=cfg.max_iters).collect()
    } else {
        checkpoints.to_vec()
    };

    let used = restart_indices.len() as f64;
    let mut mean_baseline = Vec::with_capacity(iterations.len());
    let mut mean_momentum = Vec::with_capacity(iterations.len());
    let mut mean_delta = Vec::with_capacity(iterations.len());
    let mut median_delta = Vec::with_capacity(iterations.len());
    for &it in &iterations {
        let mut base_sum = 0.0;
        let mut mom_sum = 0.0;
        let mut deltas: Vec<f64> = Vec::with_capacity(baseline_traces.len());
        for (base, mom) in baseline_traces.iter().zip(momentum_traces.iter()) {
            base_sum += base[it];
            mom_sum += mom[it];
            deltas.push(mom[it] - base[it]);
        }
        mean_baseline.push(base_sum / used);
        mean_momentum.push(mom_sum / used);
        mean_delta.push(deltas.iter().sum::<f64>() / used);
        deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite deltas"));
        let mid = deltas.len() / 2;
        let median = if deltas.len() % 2 == 1 {
            deltas[mid]
        } else {
            0.5 * (deltas[mid - 1] + deltas[mid])
        };
        median_delta.push(median);
    }

    Ok(PairedCurves {
        iterations,
        restart_indices,
        baseline_traces,
        momentum_traces,
        mean_baseline,
        mean_momentum,
        mean_delta,
        median_delta,
        restarts_requested: cfg.restarts,
        failures,
        variant: policy.variant,
    })
}

/// Per-restart curves: `variant,restart,iteration,log_likelihood`.
pub fn write_curves_csv<W: Write>(mut w: W, curves: &PairedCurves) -> std::io::Result<()> {
    writeln!(w, "variant,restart,iteration,log_likelihood")?;
    let momentum_label = curves.variant.label();
    for (idx, &restart) in curves.restart_indices.iter().enumerate() {
        for (it, ll) in curves.baseline_traces[idx].iter().enumerate() {
            writeln!(w, "none,{restart},{it},{ll}")?;
        }
        for (it, ll) in curves.momentum_traces[idx].iter().enumerate() {
            writeln!(w, "{momentum_label},{restart},{it},{ll}")?;
        }
    }
    Ok(())
}

/// Summary curve: `iteration,mean_baseline,mean_momentum,mean_delta,median_delta`.
pub fn write_summary_csv<W: Write>(mut w: W, curves: &PairedCurves) -> std::io::Result<()> {
    writeln!(
        w,
        "iteration,mean_baseline,mean_momentum,mean_delta,median_delta"
    )?;
    for (i, &it) in curves.iterations.iter().enumerate() {
        writeln!(
            w,
            "{it},{},{},{},{}",
            curves.mean_baseline[i], curves.mean_momentum[i], curves.mean_delta[i],
            curves.median_delta[i]
        )?;
    }
    Ok(())
}

/// One labeled test sample.
#[derive(Clone, Debug)]
pub struct LabeledSample {
    pub id: String,
    pub family: String,
    pub symbols: Vec<usize>,
}

/// One scored test sample: per-family length-normalized log-likelihoods.
#[derive(Clone, Debug)]
pub struct ScoreRow {
    pub sample_id: String,
    pub true_family: String,
    pub scores: Vec<f64>,
}

/// A sample that could not be scored against every family model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExcludedSample {
    pub sample_id: String,
    pub true_family: String,
    pub reason: String,
}

/// Rows = test samples, columns = family models, entries = per-symbol
/// scores. Unscoreable samples are excluded from the rows and reported.
#[derive(Clone, Debug)]
pub struct ScoreMatrix {
    pub families: Vec<String>,
    pub rows: Vec<ScoreRow>,
    pub excluded: Vec<ExcludedSample>,
    /// Training iteration the models were taken at, when known.
    pub checkpoint: Option<usize>,
}

/// Score every sample against every family model.
///
/// All models must share the vocabulary size. A sample that any model
/// rejects as impossible (possible when training used zero smoothing) is
/// flagged and excluded rather than failing the whole matrix.
pub fn score_matrix(
    models: &[(String, Model)],
    samples: &[LabeledSample],
    checkpoint: Option<usize>,
) -> Result<ScoreMatrix> {
    if models.is_empty() {
        return Err(Error::InvalidInput("need at least one family model".into()));
    }
    let m = models[0].1.m();
    for (family, model) in models {
        if model.m() != m {
            return Err(Error::InvalidInput(format!(
                "family {family:?} has vocabulary {}, expected {m}",
                model.m()
            )));
        }
    }

    let scored: Vec<Result<std::result::Result<ScoreRow, ExcludedSample>>> = samples
        .par_iter()
        .map(|sample| {
            let mut scores = Vec::with_capacity(models.len());
            for (family, model) in models {
                match model.score_per_symbol(&sample.symbols) {
                    Ok(s) => scores.push(s),
                    // Only an impossible sequence flags the row; anything
                    // else (bad symbols, internal failures) is a real error.
                    Err(e @ Error::ImpossibleSequence { .. }) => {
                        return Ok(Err(ExcludedSample {
                            sample_id: sample.id.clone(),
                            true_family: sample.family.clone(),
                            reason: format!("model {family:?}: {e}"),
                        }))
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(Ok(ScoreRow {
                sample_id: sample.id.clone(),
                true_family: sample.family.clone(),
                scores,
            }))
        })
        .collect();

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for entry in scored {
        match entry? {
            Ok(row) => rows.push(row),
            Err(flag) => excluded.push(flag),
        }
    }
    Ok(ScoreMatrix {
        families: models.iter().map(|(f, _)| f.clone()).collect(),
        rows,
        excluded,
        checkpoint,
    })
}

/// One-vs-rest ROC result for a single family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RocResult {
    pub family: String,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub checkpoint: Option<usize>,
}

/// One-vs-rest AUC for `family`: its own samples are positives, everything
/// else negatives, all scored by the family's column. Computed by pair
/// counting with half credit for ties (equivalent to trapezoidal ROC
/// integration).
pub fn auc_one_vs_rest(matrix: &ScoreMatrix, family: &str) -> Result<RocResult> {
    let column = matrix
        .families
        .iter()
        .position(|f| f == family)
        .ok_or_else(|| Error::InvalidInput(format!("unknown family {family:?}")))?;

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for row in &matrix.rows {
        if row.true_family == family {
            positives.push(row.scores[column]);
        } else {
            negatives.push(row.scores[column]);
        }
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::DegenerateClass {
            family: family.to_string(),
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }

    Ok(RocResult {
        family: family.to_string(),
        auc: pair_counting_auc(&positives, &negatives),
        positives: positives.len(),
        negatives: negatives.len(),
        checkpoint: matrix.checkpoint,
    })
}

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked
/// correctly, ties counting half.
pub fn pair_counting_auc(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut favorable = 0.0;
    for &p in positives {
        for &n in negatives {
            if p > n {
                favorable += 1.0;
            } else if p == n {
                favorable += 0.5;
            }
        }
    }
    favorable / (positives.len() as f64 * negatives.len() as f64)
}

/// Score-vector CSV: `sample_id,true_family,<one column per family>`.
/// Excluded samples are absent; report them via [`write_excluded_json`].
pub fn write_score_vectors_csv<W: Write>(mut w: W, matrix: &ScoreMatrix) -> std::io::Result<()> {
    write!(w, "sample_id,true_family")?;
    for family in &matrix.families {
        write!(w, ",{family}")?;
    }
    writeln!(w)?;
    for row in &matrix.rows {
        write!(w, "{},{}", row.sample_id, row.true_family)?;
        for score in &row.scores {
            write!(w, ",{score}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Sidecar report for rows excluded from a score matrix.
pub fn write_excluded_json<W: Write>(w: W, matrix: &ScoreMatrix) -> Result<()> {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        excluded_count: usize,
        excluded: &'a [ExcludedSample],
    }
    serde_json::to_writer_pretty(
        w,
        &Sidecar {
            excluded_count: matrix.excluded.len(),
            excluded: &matrix.excluded,
        },
    )
    .map_err(|e| Error::InvalidInput(format!("sidecar serialization: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::InitScheme;
    use approx::assert_relative_eq;

    /// Trapezoidal ROC integration; independent oracle for the pair-counting
    /// implementation.
    pub(crate) fn trapezoid_auc(positives: &[f64], negatives: &[f64]) -> f64 {
        let mut all: Vec<(f64, bool)> = positives
            .iter()
            .map(|&s| (s, true))
            .chain(negatives.iter().map(|&s| (s, false)))
            .collect();
        // Descending by score; ties handled by accumulating both counts
        // before emitting the next curve point.
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let p = positives.len() as f64;
        let n = negatives.len() as f64;
        let mut auc = 0.0;
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut prev_tp = 0.0;
        let mut prev_fp = 0.0;
        let mut i = 0;
        while i < all.len() {
            let score = all[i].0;
            while i < all.len() && all[i].0 == score {
                if all[i].1 {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
                i += 1;
            }
            auc += (fp / n - prev_fp / n) * (tp / p + prev_tp / p) / 2.0;
            prev_tp = tp;
            prev_fp = fp;
        }
        auc
    }

    #[test]
    fn auc_hand_cases() {
        assert_eq!(pair_counting_auc(&[-1.0, -2.0], &[-3.0, -4.0]), 1.0);
        assert_eq!(pair_counting_auc(&[-2.0], &[-2.0]), 0.5);
        assert_eq!(pair_counting_auc(&[-1.0, -3.0], &[-2.0, -4.0]), 0.75);
    }

    #[test]
    fn auc_matches_trapezoid_oracle_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let np = rng.gen_range(1..20);
            let nn = rng.gen_range(1..20);
            // Coarse grid forces ties.
            let positives: Vec<f64> =
                (0..np).map(|_| rng.gen_range(-10..0) as f64 / 2.0).collect();
            let negatives: Vec<f64> =
                (0..nn).map(|_| rng.gen_range(-10..0) as f64 / 2.0).collect();
            let pairs = pair_counting_auc(&positives, &negatives);
            let trap = trapezoid_auc(&positives, &negatives);
            assert!(
                (pairs - trap).abs() < 1e-12,
                "pair {pairs} vs trapezoid {trap}"
            );
        }
    }

    #[test]
    fn auc_is_rank_invariant_and_complements_under_label_swap() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let positives: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..0.0)).collect();
            let negatives: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..0.0)).collect();
            let auc = pair_counting_auc(&positives, &negatives);
            // Strictly increasing transform preserves ranks.
            let tp: Vec<f64> = positives.iter().map(|s| (s * 0.5).exp()).collect();
            let tn: Vec<f64> = negatives.iter().map(|s| (s * 0.5).exp()).collect();
            assert_relative_eq!(auc, pair_counting_auc(&tp, &tn), epsilon = 1e-12);
            // Swapping labels complements the statistic.
            assert_relative_eq!(
                auc + pair_counting_auc(&negatives, &positives),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    fn toy_obs(seed: u64) -> ObservationSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let seq: Vec<usize> = (0..80).map(|_| rng.gen_range(0..3)).collect();
        ObservationSet::single(seq, 3).unwrap()
    }

    #[test]
    fn factor_zero_paired_curves_are_identically_zero() {
        let obs = toy_obs(1);
        let cfg = TrainConfig::new(2, 10, 3, 5);
        let curves =
            paired_experiment(&obs, &cfg, &MomentumPolicy::classic(0.0), &[]).unwrap();
        assert_eq!(curves.restarts_used(), 3);
        for (base, mom) in curves
            .baseline_traces
            .iter()
            .zip(curves.momentum_traces.iter())
        {
            assert_eq!(base, mom, "factor 0 must reproduce the baseline trace");
        }
        assert!(curves.mean_delta.iter().all(|&d| d == 0.0));
        assert!(curves.median_delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn delta_at_iteration_zero_is_exactly_zero() {
        let obs = toy_obs(2);
        let cfg = TrainConfig::new(3, 5, 4, 9).with_init(InitScheme::NearUniform { jitter: 0.05 });
        let curves =
            paired_experiment(&obs, &cfg, &MomentumPolicy::classic(0.7), &[]).unwrap();
        assert_eq!(curves.iterations[0], 0);
        assert_eq!(curves.mean_delta[0], 0.0);
        for (base, mom) in curves
            .baseline_traces
            .iter()
            .zip(curves.momentum_traces.iter())
        {
            assert_eq!(base[0], mom[0]);
        }
    }

    #[test]
    fn checkpoint_grid_subsets_iterations() {
        let obs = toy_obs(3);
        let cfg = TrainConfig::new(2, 10, 2, 4);
        let curves =
            paired_experiment(&obs, &cfg, &MomentumPolicy::classic(0.5), &[0, 5, 10]).unwrap();
        assert_eq!(curves.iterations, vec![0, 5, 10]);
        assert_eq!(curves.mean_delta.len(), 3);
        // Full traces are retained regardless of the grid.
        assert_eq!(curves.baseline_traces[0].len(), 11);

        assert!(paired_experiment(&obs, &cfg, &MomentumPolicy::classic(0.5), &[0, 11]).is_err());
        assert!(paired_experiment(&obs, &cfg, &MomentumPolicy::classic(0.5), &[5, 5]).is_err());
    }

    fn planted_models() -> Vec<(String, Model)> {
        let fam = |peak: usize| {
            let mut rows = Vec::new();
            for i in 0..2 {
                let mut row = vec![0.02; 4];
                row[(peak + i) % 4] = 0.94;
                let sum: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= sum;
                }
                rows.push(row);
            }
            Model::from_rows(
                vec![0.5, 0.5],
                vec![vec![0.85, 0.15], vec![0.3, 0.7]],
                rows,
            )
            .unwrap()
        };
        vec![
            ("alpha".to_string(), fam(0)),
            ("beta".to_string(), fam(2)),
        ]
    }

    #[test]
    fn score_matrix_separates_planted_families() {
        let models = planted_models();
        let mut samples = Vec::new();
        for (i, (family, model)) in models.iter().enumerate() {
            for j in 0..6 {
                samples.push(LabeledSample {
                    id: format!("{family}-{j}"),
                    family: family.clone(),
                    symbols: crate::data::generate(model, 200, (i * 10 + j) as u64),
                });
            }
        }
        let matrix = score_matrix(&models, &samples, Some(50)).unwrap();
        assert_eq!(matrix.rows.len(), 12);
        assert!(matrix.excluded.is_empty());
        // Each sample scores highest under its own family's model.
        for row in &matrix.rows {
            let own = matrix
                .families
                .iter()
                .position(|f| *f == row.true_family)
                .unwrap();
            for (k, score) in row.scores.iter().enumerate() {
                if k != own {
                    assert!(
                        row.scores[own] > *score,
                        "sample {} scored higher under {}",
                        row.sample_id,
                        matrix.families[k]
                    );
                }
            }
        }
        for (family, _) in &models {
            let roc = auc_one_vs_rest(&matrix, family).unwrap();
            assert!(roc.auc > 0.9, "family {family} auc {}", roc.auc);
            assert_eq!(roc.checkpoint, Some(50));
        }
    }

    #[test]
    fn single_cell_matrix_equals_score_per_symbol() {
        let models = vec![planted_models().remove(0)];
        let sample = LabeledSample {
            id: "s".into(),
            family: "alpha".into(),
            symbols: crate::data::generate(&models[0].1, 50, 3),
        };
        let matrix = score_matrix(&models, std::slice::from_ref(&sample), None).unwrap();
        assert_eq!(matrix.rows.len(), 1);
        assert_eq!(
            matrix.rows[0].scores[0],
            models[0].1.score_per_symbol(&sample.symbols).unwrap()
        );
    }

    #[test]
    fn identical_models_give_identical_columns() {
        let base = planted_models().remove(0).1;
        let models = vec![
            ("x".to_string(), base.clone()),
            ("y".to_string(), base.clone()),
            ("z".to_string(), base.clone()),
        ];
        let samples = vec![LabeledSample {
            id: "s".into(),
            family: "x".into(),
            symbols: crate::data::generate(&base, 100, 5),
        }];
        let matrix = score_matrix(&models, &samples, None).unwrap();
        let row = &matrix.rows[0].scores;
        assert!((row[0] - row[1]).abs() < 1e-12);
        assert!((row[0] - row[2]).abs() < 1e-12);
    }

    #[test]
    fn unscoreable_rows_are_flagged_not_fatal() {
        // Family model that forbids symbol 2.
        let strict = Model::from_rows(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![0.5, 0.5, 0.0]],
        )
        .unwrap();
        let lenient = Model::from_rows(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![0.4, 0.3, 0.3]],
        )
        .unwrap();
        let models = vec![("strict".to_string(), strict), ("lenient".to_string(), lenient)];
        let samples = vec![
            LabeledSample {
                id: "ok".into(),
                family: "strict".into(),
                symbols: vec![0, 1, 0],
            },
            LabeledSample {
                id: "bad".into(),
                family: "lenient".into(),
                symbols: vec![0, 2, 1],
            },
        ];
        let matrix = score_matrix(&models, &samples, None).unwrap();
        assert_eq!(matrix.rows.len(), 1);
        assert_eq!(matrix.excluded.len(), 1);
        assert_eq!(matrix.excluded[0].sample_id, "bad");
    }

    #[test]
    fn degenerate_class_is_an_error() {
        let models = planted_models();
        let samples = vec![LabeledSample {
            id: "only".into(),
            family: "alpha".into(),
            symbols: vec![0, 1, 2],
        }];
        let matrix = score_matrix(&models, &samples, None).unwrap();
        assert!(matches!(
            auc_one_vs_rest(&matrix, "alpha"),
            Err(Error::DegenerateClass { .. })
        ));
        assert!(auc_one_vs_rest(&matrix, "missing").is_err());
    }

    #[test]
    fn score_vector_csv_round_trips() {
        let models = planted_models();
        let samples: Vec<LabeledSample> = (0..4)
            .map(|j| LabeledSample {
                id: format!("s{j}"),
                family: if j % 2 == 0 { "alpha" } else { "beta" }.into(),
                symbols: crate::data::generate(&models[j % 2].1, 64, j as u64),
            })
            .collect();
        let matrix = score_matrix(&models, &samples, Some(10)).unwrap();
        let mut buf = Vec::new();
        write_score_vectors_csv(&mut buf, &matrix).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_id,true_family,alpha,beta");
        for (line, row) in lines.zip(matrix.rows.iter()) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], row.sample_id);
            for (f, s) in fields[2..].iter().zip(row.scores.iter()) {
                let parsed: f64 = f.parse().unwrap();
                assert_eq!(parsed, *s, "lossless decimal expected");
            }
        }

        let mut sidecar = Vec::new();
        write_excluded_json(&mut sidecar, &matrix).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&sidecar).unwrap();
        assert_eq!(v["excluded_count"], 0);
    }
}
