//! Baum-Welch training: reestimation with additive smoothing, multi-sequence
//! accumulation, initialization schemes, stopping rules, and multi-restart
//! orchestration.
//!
//! Reestimation accumulates gamma/di-gamma sums across every sequence of an
//! observation set and then forms smoothed ratios: with smoothing value `s`,
//! `a_ij = (s + sum digamma) / (N s + sum gamma)` and
//! `b_i(j) = (s + sum_{O_t = j} gamma) / (M s + sum gamma)`. The initial
//! distribution averages `gamma_0` over sequences and uses the denominator
//! `1 + N s`, which keeps the vector stochastic. The smoothing denominators
//! are exactly the row sums of the smoothed numerators, so reestimated models
//! are row stochastic for any `s >= 0`.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward_backward::total_score;
use crate::model::{Matrix, Model, ObservationSet};
use crate::momentum::{MomentumPolicy, MomentumState, Variant};

/// How initial models are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    /// Every entry drawn uniformly from `[0, 1)`, rows normalized.
    UniformRandom,
    /// Every entry drawn as `1/K + U(-jitter, +jitter)` for row length `K`,
    /// rows normalized. Small jitter produces the near-uniform start that
    /// plateaus before converging.
    NearUniform { jitter: f64 },
}

impl InitScheme {
    fn validate(&self, n: usize, m: usize) -> Result<()> {
        if let InitScheme::NearUniform { jitter } = self {
            let bound = 1.0 / n.max(m) as f64;
            if !(*jitter > 0.0 && *jitter < bound) {
                return Err(Error::InvalidInput(format!(
                    "near-uniform jitter {jitter} must lie in (0, {bound}) for N={n}, M={m}"
                )));
            }
        }
        Ok(())
    }
}

/// Training configuration shared by single runs and restart sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of hidden states.
    pub n: usize,
    /// Iteration budget.
    pub max_iters: usize,
    /// Number of random restarts.
    pub restarts: usize,
    /// Seed for the restart RNG streams.
    pub seed: u64,
    /// Additive smoothing value `s >= 0`.
    pub smoothing: f64,
    pub init: InitScheme,
    /// Minimum per-iteration log-likelihood improvement; when absent the
    /// full budget runs, which keeps iteration-indexed comparisons aligned.
    #[serde(default)]
    pub stop_tol: Option<f64>,
    /// Iterations at which to snapshot the model (0 = the initial model).
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

impl TrainConfig {
    pub fn new(n: usize, max_iters: usize, restarts: usize, seed: u64) -> Self {
        TrainConfig {
            n,
            max_iters,
            restarts,
            seed,
            smoothing: 0.0,
            init: InitScheme::UniformRandom,
            stop_tol: None,
            checkpoints: Vec::new(),
        }
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_init(mut self, init: InitScheme) -> Self {
        self.init = init;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<usize>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("hidden-state count must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("iteration budget must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restart count must be >= 1".into()));
        }
        if !self.smoothing.is_finite() || self.smoothing < 0.0 {
            return Err(Error::InvalidInput(format!(
                "smoothing {} must be finite and >= 0",
                self.smoothing
            )));
        }
        if let Some(tol) = self.stop_tol {
            if !tol.is_finite() {
                return Err(Error::InvalidInput("stop tolerance must be finite".into()));
            }
        }
        for pair in self.checkpoints.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "checkpoints must be strictly ascending".into(),
                ));
            }
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.max_iters {
                return Err(Error::InvalidInput(format!(
                    "checkpoint {last} exceeds iteration budget {}",
                    self.max_iters
                )));
            }
        }
        Ok(())
    }
}

/// Per-iteration log-likelihood trace for one restart, plus the final model.
#[derive(Clone, Debug)]
pub struct TrainRecord {
    pub restart_index: usize,
    /// `trace[k]` is the training-set log-likelihood of the model produced
    /// by iteration `k`; `trace[0]` scores the initial model.
    pub trace: Vec<f64>,
    pub final_model: Model,
    pub iterations_run: usize,
    /// Snapshots at the requested checkpoint iterations.
    pub snapshots: Vec<(usize, Model)>,
}

impl TrainRecord {
    pub fn final_score(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }

    pub fn snapshot_at(&self, iteration: usize) -> Option<&Model> {
        self.snapshots
            .iter()
            .find(|(it, _)| *it == iteration)
            .map(|(_, m)| m)
    }
}

/// A restart that failed, with the reason.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartFailure {
    pub restart: usize,
    pub message: String,
}

/// Results of a restart sweep; failed restarts are recorded rather than
/// aborting the sweep.
#[derive(Clone, Debug)]
pub struct TrainSweep {
    pub records: Vec<TrainRecord>,
    pub failures: Vec<RestartFailure>,
}

impl TrainSweep {
    /// Best record by final score, ties broken toward the lowest restart
    /// index.
    pub fn best(&self) -> &TrainRecord {
        let mut best = &self.records[0];
        for rec in &self.records[1..] {
            if rec.final_score() > best.final_score() {
                best = rec;
            }
        }
        best
    }
}

/// Deterministic RNG stream for restart `k` of a sweep seeded with `seed`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Draw a row-stochastic model under the given scheme. Deterministic for a
/// given RNG state: `pi` is drawn first, then `a` row by row, then `b`.
pub fn init_model(scheme: &InitScheme, n: usize, m: usize, rng: &mut impl Rng) -> Result<Model> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("model dimensions must be >= 1".into()));
    }
    scheme.validate(n, m)?;

    let draw_row = |len: usize, rng: &mut dyn rand::RngCore| -> Vec<f64> {
        let mut row = vec![0.0; len];
        let mut sum = 0.0;
        for v in row.iter_mut() {
            let u: f64 = rand::Rng::gen(rng);
            *v = match scheme {
                InitScheme::UniformRandom => u,
                InitScheme::NearUniform { jitter } => {
                    1.0 / len as f64 + (2.0 * u - 1.0) * jitter
                }
            };
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        row
    };

    let pi = draw_row(n, rng);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a.row_mut(i).copy_from_slice(&draw_row(n, rng));
    }
    let mut b = Matrix::zeros(n, m);
    for i in 0..n {
        b.row_mut(i).copy_from_slice(&draw_row(m, rng));
    }
    Model::new(pi, a, b)
}

/// One Baum-Welch update `F(lambda)` with additive smoothing.
pub fn reestimate(model: &Model, obs: &ObservationSet, smoothing: f64) -> Result<Model> {
    reestimate_scored(model, obs, smoothing).map(|(m, _)| m)
}

/// Baum-Welch update that also reports the log-likelihood of the *input*
/// model on `obs` (a byproduct of the forward passes).
pub fn reestimate_scored(
    model: &Model,
    obs: &ObservationSet,
    smoothing: f64,
) -> Result<(Model, f64)> {
    if obs.vocab_size() != model.m() {
        return Err(Error::InvalidInput(format!(
            "observation vocabulary {} does not match model vocabulary {}",
            obs.vocab_size(),
            model.m()
        )));
    }
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(Error::InvalidInput(format!(
            "smoothing {smoothing} must be finite and >= 0"
        )));
    }

    let n = model.n();
    let m = model.m();
    let mut num_a = Matrix::zeros(n, n);
    let mut den_a = vec![0.0; n];
    let mut num_b = Matrix::zeros(n, m);
    let mut den_b = vec![0.0; n];
    let mut gamma0 = vec![0.0; n];
    let mut ll_total = 0.0;

    let mut gamma = vec![0.0; n];
    let mut emit_beta = vec![0.0; n];
    for seq in obs.sequences() {
        let (alphas, scale, ll) = model.forward(seq)?;
        let betas = model.backward(seq, &scale)?;
        ll_total += ll;
        let t_len = seq.len();

        for t in 0..t_len {
            let alpha_row = alphas.row(t);
            let beta_row = betas.row(t);
            let mut sum = 0.0;
            for i in 0..n {
                gamma[i] = alpha_row[i] * beta_row[i];
                sum += gamma[i];
            }
            if !sum.is_finite() || sum <= 0.0 {
                return Err(Error::NonFinite("gamma normalization"));
            }
            for g in gamma.iter_mut() {
                *g /= sum;
            }

            if t == 0 {
                for i in 0..n {
                    gamma0[i] += gamma[i];
                }
            }
            let sym = seq[t];
            for i in 0..n {
                num_b.row_mut(i)[sym] += gamma[i];
                den_b[i] += gamma[i];
            }

            if t + 1 < t_len {
                for i in 0..n {
                    den_a[i] += gamma[i];
                }
                let sym_next = seq[t + 1];
                let beta_next = betas.row(t + 1);
                for j in 0..n {
                    emit_beta[j] = model.b().row(j)[sym_next] * beta_next[j];
                }
                for i in 0..n {
                    let a_row = model.a().row(i);
                    let out = num_a.row_mut(i);
                    let alpha_ti = alpha_row[i];
                    for j in 0..n {
                        out[j] += alpha_ti * a_row[j] * emit_beta[j];
                    }
                }
            }
        }
    }

    let s = smoothing;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        let den = n as f64 * s + den_a[i];
        if den > 0.0 {
            let num = num_a.row(i);
            let out = a.row_mut(i);
            for j in 0..n {
                out[j] = (s + num[j]) / den;
            }
        } else {
            // No transition evidence for this state (for example a set of
            // length-1 sequences with s = 0); keep the previous row.
            a.row_mut(i).copy_from_slice(model.a().row(i));
        }
    }

    let mut b = Matrix::zeros(n, m);
    for i in 0..n {
        let den = m as f64 * s + den_b[i];
        if den > 0.0 {
            let num = num_b.row(i);
            let out = b.row_mut(i);
            for j in 0..m {
                out[j] = (s + num[j]) / den;
            }
        } else {
            b.row_mut(i).copy_from_slice(model.b().row(i));
        }
    }

    let seq_count = obs.sequences().len() as f64;
    let pi: Vec<f64> = gamma0
        .iter()
        .map(|g| (g / seq_count + s) / (1.0 + n as f64 * s))
        .collect();

    let next = Model::new(pi, a, b)?;
    Ok((next, ll_total))
}

/// Train from a specific initial model.
///
/// The trace records the initial model's score as iteration 0 and then one
/// entry per iteration; `stop_tol` ends training once an iteration improves
/// the score by less than the tolerance.
pub fn train_from(
    initial: Model,
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
) -> Result<TrainRecord> {
    cfg.validate()?;
    policy.validate()?;
    if initial.m() != obs.vocab_size() {
        return Err(Error::InvalidInput(format!(
            "initial model vocabulary {} does not match observations {}",
            initial.m(),
            obs.vocab_size()
        )));
    }

    match policy.variant {
        Variant::Nesterov => train_loop_explicit(initial, obs, cfg, policy),
        Variant::None | Variant::Classic => train_loop_deferred(initial, obs, cfg, policy),
    }
}

/// Training loop for the none/classic policies.
///
/// For these policies the forward pass inside iteration `k + 1`'s
/// reestimation scores exactly the model produced by iteration `k`, so trace
/// entries are harvested from the next reestimation instead of a separate
/// scoring pass; only the final model needs an explicit pass.
fn train_loop_deferred(
    initial: Model,
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
) -> Result<TrainRecord> {
    let mut model = initial;
    let mut state = MomentumState::new(policy.clone(), model.n(), model.m());
    let mut trace: Vec<f64> = Vec::with_capacity(cfg.max_iters + 1);
    let mut snapshots = Vec::new();
    if cfg.checkpoints.first() == Some(&0) {
        snapshots.push((0, model.clone()));
    }

    let mut iterations_run = cfg.max_iters;
    let mut stopped = false;
    for iteration in 1..=cfg.max_iters {
        let (reestimated, prev_score) = reestimate_scored(&model, obs, cfg.smoothing)
            .map_err(|e| e.at_iteration(iteration))?;
        trace.push(prev_score); // score of the model produced by iteration - 1
        if let Some(tol) = cfg.stop_tol {
            let k = trace.len() - 1;
            if k >= 1 && trace[k] - trace[k - 1] < tol {
                iterations_run = k;
                stopped = true;
                break;
            }
        }
        model = match policy.variant {
            Variant::None => reestimated,
            Variant::Classic => state.classic_step(&model, reestimated, iteration),
            Variant::Nesterov => unreachable!("deferred loop never runs Nesterov"),
        };
        if cfg.checkpoints.contains(&iteration) {
            snapshots.push((iteration, model.clone()));
        }
    }
    if !stopped {
        let final_score =
            total_score(&model, obs).map_err(|e| e.at_iteration(cfg.max_iters))?;
        trace.push(final_score);
    } else {
        // The stop fires before iteration k+1 applies its update, so `model`
        // is already the iteration-k model and the trace ends at entry k.
        snapshots.retain(|(it, _)| *it <= iterations_run);
    }

    Ok(TrainRecord {
        restart_index: 0,
        trace,
        final_model: model,
        iterations_run,
        snapshots,
    })
}

/// Training loop for Nesterov, which scores explicitly each iteration
/// because reestimation runs on the look-ahead model rather than the
/// recorded one.
fn train_loop_explicit(
    initial: Model,
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
) -> Result<TrainRecord> {
    let mut model = initial;
    let mut state = MomentumState::new(policy.clone(), model.n(), model.m());
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(total_score(&model, obs)?);
    let mut snapshots = Vec::new();
    if cfg.checkpoints.first() == Some(&0) {
        snapshots.push((0, model.clone()));
    }

    let mut iterations_run = cfg.max_iters;
    for iteration in 1..=cfg.max_iters {
        let lookahead = state.nesterov_pre_step(&model, iteration);
        let reestimated = reestimate(&lookahead, obs, cfg.smoothing)
            .map_err(|e| e.at_iteration(iteration))?;
        model = state.nesterov_post_step(&model, reestimated, iteration);
        let score = total_score(&model, obs).map_err(|e| e.at_iteration(iteration))?;
        trace.push(score);
        if cfg.checkpoints.contains(&iteration) {
            snapshots.push((iteration, model.clone()));
        }
        if let Some(tol) = cfg.stop_tol {
            if trace[iteration] - trace[iteration - 1] < tol {
                iterations_run = iteration;
                break;
            }
        }
    }

    Ok(TrainRecord {
        restart_index: 0,
        trace,
        final_model: model,
        iterations_run,
        snapshots,
    })
}

/// Train with the restart-0 RNG stream.
pub fn train(
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
) -> Result<TrainRecord> {
    cfg.validate()?;
    let mut rng = restart_rng(cfg.seed, 0);
    let initial = init_model(&cfg.init, cfg.n, obs.vocab_size(), &mut rng)?;
    train_from(initial, obs, cfg, policy)
}

/// Run `cfg.restarts` independent restarts (possibly in parallel) and keep
/// every record. Restart `k` draws its initial model from the stream derived
/// from `(cfg.seed, k)`, so results do not depend on scheduling. Individual
/// failures are recorded; the sweep fails only when every restart does.
pub fn train_restarts(
    obs: &ObservationSet,
    cfg: &TrainConfig,
    policy: &MomentumPolicy,
) -> Result<TrainSweep> {
    cfg.validate()?;
    policy.validate()?;
    let outcomes: Vec<(usize, Result<TrainRecord>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let result = (|| {
                let mut rng = restart_rng(cfg.seed, k);
                let initial = init_model(&cfg.init, cfg.n, obs.vocab_size(), &mut rng)?;
                let mut record = train_from(initial, obs, cfg, policy)?;
                record.restart_index = k;
                Ok(record)
            })();
            (k, result)
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (k, outcome) in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e.to_string());
                }
                failures.push(RestartFailure {
                    restart: k,
                    message: e.to_string(),
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::AllRestartsFailed {
            restarts: cfg.restarts,
            first: Box::new(Error::InvalidInput(
                first_error.unwrap_or_else(|| "unknown".into()),
            )),
        });
    }
    Ok(TrainSweep { records, failures })
}

/// Write training traces as CSV with one row per (restart, iteration).
///
/// Log-likelihoods are printed with the shortest decimal representation that
/// round-trips to the same `f64`.
pub fn write_trace_csv<W: Write>(
    mut w: W,
    run_id: &str,
    variant: &str,
    records: &[TrainRecord],
) -> std::io::Result<()> {
    writeln!(w, "run_id,restart,iteration,variant,log_likelihood")?;
    for record in records {
        for (iteration, ll) in record.trace.iter().enumerate() {
            writeln!(
                w,
                "{run_id},{},{iteration},{variant},{ll}",
                record.restart_index
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_obs(n_seqs: usize, len: usize, m: usize, seed: u64) -> ObservationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seqs: Vec<Vec<usize>> = (0..n_seqs)
            .map(|_| (0..len).map(|_| rng.gen_range(0..m)).collect())
            .collect();
        ObservationSet::new(seqs, m).unwrap()
    }

    #[test]
    fn init_near_uniform_stays_close_to_uniform() {
        let mut rng = restart_rng(1, 0);
        let jitter = 0.01;
        let model = init_model(&InitScheme::NearUniform { jitter }, 4, 5, &mut rng).unwrap();
        for &p in model.pi() {
            // Pre-normalization entries lie in [1/4 - j, 1/4 + j]; the
            // normalized values stay within a slightly widened band.
            assert!((p - 0.25).abs() < 2.5 * jitter, "pi entry {p}");
        }
        let sum: f64 = model.pi().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn init_is_deterministic_per_stream() {
        let scheme = InitScheme::UniformRandom;
        let a = init_model(&scheme, 3, 4, &mut restart_rng(42, 7)).unwrap();
        let b = init_model(&scheme, 3, 4, &mut restart_rng(42, 7)).unwrap();
        assert_eq!(a, b);
        let c = init_model(&scheme, 3, 4, &mut restart_rng(42, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_single_state_is_degenerate() {
        for scheme in [InitScheme::UniformRandom, InitScheme::NearUniform { jitter: 0.2 }] {
            let model = init_model(&scheme, 1, 3, &mut restart_rng(5, 0)).unwrap();
            assert_eq!(model.pi(), &[1.0]);
            assert_eq!(model.a().row(0), &[1.0]);
        }
    }

    #[test]
    fn init_rejects_oversized_jitter() {
        let scheme = InitScheme::NearUniform { jitter: 0.5 };
        assert!(init_model(&scheme, 4, 4, &mut restart_rng(0, 0)).is_err());
    }

    #[test]
    fn single_state_reestimate_counts_emissions() {
        let model = Model::from_rows(vec![1.0], vec![vec![1.0]], vec![vec![0.5, 0.5]]).unwrap();
        let obs = ObservationSet::single(vec![0, 0, 1], 2).unwrap();
        let next = reestimate(&model, &obs, 0.0).unwrap();
        assert_relative_eq!(next.b().get(0, 0), 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(next.b().get(0, 1), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(next.pi(), &[1.0]);
        assert_eq!(next.a().row(0), &[1.0]);
        // Reestimation is idempotent once the single-state model matches the
        // empirical frequencies.
        let again = reestimate(&next, &obs, 0.0).unwrap();
        assert_eq!(again, next);
    }

    #[test]
    fn smoothing_formula_matches_hand_arithmetic() {
        // a_ij = (s + 4) / (N s + 10) with N = 2, s = 0.01 -> 4.01 / 10.02.
        let s: f64 = 0.01;
        assert_relative_eq!((s + 4.0) / (2.0 * s + 10.0), 0.4001996007984032, epsilon = 1e-15);
        // pi smoothing with gamma_0 = [0.8, 0.2]:
        let pi0 = (0.8 + s) / (1.0 + 2.0 * s);
        let pi1 = (0.2 + s) / (1.0 + 2.0 * s);
        assert_relative_eq!(pi0, 0.81 / 1.02, epsilon = 1e-15);
        assert_relative_eq!(pi1, 0.21 / 1.02, epsilon = 1e-15);
        assert_relative_eq!(pi0 + pi1, 1.0, epsilon = 1e-15);
        assert!((pi0 - 0.79412).abs() < 1e-5);
        assert!((pi1 - 0.20588).abs() < 1e-5);
    }

    #[test]
    fn reestimate_is_row_stochastic_for_any_smoothing() {
        let obs = random_obs(2, 40, 5, 11);
        let mut rng = restart_rng(3, 0);
        let model = init_model(&InitScheme::UniformRandom, 3, 5, &mut rng).unwrap();
        for s in [0.0, 1e-6, 0.01, 0.5, 3.0] {
            // Model::new inside reestimate enforces stochasticity at 1e-9;
            // verify the tighter direct sums too.
            let next = reestimate(&model, &obs, s).unwrap();
            let pi_sum: f64 = next.pi().iter().sum();
            assert!((pi_sum - 1.0).abs() < 1e-12);
            for i in 0..3 {
                let ra: f64 = next.a().row(i).iter().sum();
                let rb: f64 = next.b().row(i).iter().sum();
                assert!((ra - 1.0).abs() < 1e-12, "a row sum {ra} at s={s}");
                assert!((rb - 1.0).abs() < 1e-12, "b row sum {rb} at s={s}");
            }
        }
    }

    #[test]
    fn smoothing_keeps_every_emission_positive() {
        // Symbol 4 never occurs in training data.
        let mut rng = restart_rng(9, 0);
        let seqs: Vec<Vec<usize>> = (0..3)
            .map(|_| (0..60).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let obs = ObservationSet::new(seqs, 5).unwrap();
        let model = init_model(&InitScheme::UniformRandom, 2, 5, &mut rng).unwrap();
        let s = 0.01;
        let trained = reestimate(&model, &obs, s).unwrap();
        for i in 0..2 {
            for j in 0..5 {
                assert!(trained.b().get(i, j) > 0.0);
            }
        }
        // Scoring a sequence containing the held-out symbol succeeds.
        assert!(trained.score(&[0, 4, 1]).unwrap().is_finite());
    }

    #[test]
    fn zero_smoothing_propagates_impossible_sequence() {
        let mut rng = restart_rng(10, 0);
        let seqs: Vec<Vec<usize>> = vec![(0..80).map(|_| rng.gen_range(0..2)).collect()];
        let obs = ObservationSet::new(seqs, 3).unwrap();
        let model = init_model(&InitScheme::UniformRandom, 2, 3, &mut rng).unwrap();
        // One update is enough to zero out emissions of the unseen symbol.
        let trained = reestimate(&model, &obs, 0.0).unwrap();
        let err = trained.score(&[0, 1, 2]).unwrap_err();
        assert!(err.is_impossible_sequence(), "got {err:?}");
    }

    #[test]
    fn hill_climb_is_monotone_without_momentum() {
        for seed in 0..5u64 {
            let obs = random_obs(1, 120, 4, seed);
            let cfg = TrainConfig::new(3, 25, 1, seed);
            let record = train(&obs, &cfg, &MomentumPolicy::none()).unwrap();
            for w in record.trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-8,
                    "log-likelihood decreased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn trace_shape_matches_budget() {
        let obs = random_obs(1, 30, 3, 2);
        let cfg = TrainConfig::new(2, 1, 1, 0);
        let record = train(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        assert_eq!(record.trace.len(), 2);
        assert_eq!(record.iterations_run, 1);

        let cfg = TrainConfig::new(2, 0, 1, 0);
        assert!(train(&obs, &cfg, &MomentumPolicy::none()).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let obs = random_obs(2, 50, 4, 5);
        let cfg = TrainConfig::new(3, 12, 1, 77).with_smoothing(0.001);
        let a = train(&obs, &cfg, &MomentumPolicy::classic(0.5)).unwrap();
        let b = train(&obs, &cfg, &MomentumPolicy::classic(0.5)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.final_model, b.final_model);
    }

    #[test]
    fn multi_sequence_singleton_equals_single_sequence() {
        let mut rng = restart_rng(21, 0);
        let seq: Vec<usize> = (0..90).map(|_| rng.gen_range(0..4)).collect();
        let model = init_model(&InitScheme::UniformRandom, 3, 4, &mut rng).unwrap();

        let single = ObservationSet::single(seq.clone(), 4).unwrap();
        let wrapped = ObservationSet::new(vec![seq], 4).unwrap();
        let a = reestimate(&model, &single, 0.01).unwrap();
        let b = reestimate(&model, &wrapped, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stop_tol_ends_training_early() {
        let obs = random_obs(1, 60, 3, 8);
        let mut cfg = TrainConfig::new(2, 500, 1, 3);
        cfg.stop_tol = Some(1e-7);
        let record = train(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        assert!(record.iterations_run < 500, "expected early stop");
        assert_eq!(record.trace.len(), record.iterations_run + 1);
        // The last recorded improvement is below tolerance.
        let k = record.trace.len() - 1;
        assert!(record.trace[k] - record.trace[k - 1] < 1e-7);
    }

    #[test]
    fn restart_sweep_is_deterministic_and_keeps_best() {
        let obs = random_obs(1, 80, 4, 14);
        let cfg = TrainConfig::new(3, 8, 5, 99);
        let sweep1 = train_restarts(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        let sweep2 = train_restarts(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        assert_eq!(sweep1.records.len(), 5);
        for (a, b) in sweep1.records.iter().zip(sweep2.records.iter()) {
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.final_model, b.final_model);
        }
        let best = sweep1.best();
        for rec in &sweep1.records {
            assert!(best.final_score() >= rec.final_score());
        }

        // restarts = 1 equals a plain train call.
        let cfg1 = TrainConfig::new(3, 8, 1, 99);
        let sweep = train_restarts(&obs, &cfg1, &MomentumPolicy::none()).unwrap();
        let single = train(&obs, &cfg1, &MomentumPolicy::none()).unwrap();
        assert_eq!(sweep.records[0].trace, single.trace);
        assert_eq!(sweep.records[0].final_model, single.final_model);
    }

    #[test]
    fn best_of_more_restarts_is_at_least_best_of_fewer() {
        let obs = random_obs(1, 70, 3, 31);
        let few = TrainConfig::new(3, 6, 2, 123);
        let many = TrainConfig::new(3, 6, 10, 123);
        let sweep_few = train_restarts(&obs, &few, &MomentumPolicy::none()).unwrap();
        let sweep_many = train_restarts(&obs, &many, &MomentumPolicy::none()).unwrap();
        assert!(sweep_many.best().final_score() >= sweep_few.best().final_score());
    }

    #[test]
    fn checkpoints_capture_models() {
        let obs = random_obs(1, 40, 3, 4);
        let cfg = TrainConfig::new(2, 6, 1, 1).with_checkpoints(vec![0, 3, 6]);
        let record = train(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        assert_eq!(record.snapshots.len(), 3);
        assert!(record.snapshot_at(0).is_some());
        assert_eq!(record.snapshot_at(6).unwrap(), &record.final_model);
    }

    #[test]
    fn trace_csv_round_trips_exact_values() {
        let obs = random_obs(1, 30, 3, 6);
        let cfg = TrainConfig::new(2, 3, 2, 9);
        let sweep = train_restarts(&obs, &cfg, &MomentumPolicy::none()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, "run", "none", &sweep.records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,restart,iteration,variant,log_likelihood"
        );
        let first = lines.next().unwrap();
        let ll: f64 = first.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(ll, sweep.records[0].trace[0]);
    }
}
