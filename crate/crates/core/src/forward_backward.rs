//! Scaled forward/backward passes, posterior computation, and scoring.
//!
//! The forward pass normalizes each time step by a scaling constant
//! `c_t = 1 / sum_i alpha_t(i)` and the sequence log-likelihood is recovered
//! as `-sum_t log c_t`. The backward pass is scaled by the same constants, so
//! posterior state probabilities (gammas) and posterior transition
//! probabilities (digammas) come out of products of scaled quantities with
//! the division by `P(O | lambda)` implicit.

use crate::error::{Error, Result};
use crate::model::{Matrix, Model, ObservationSet};

/// Everything a forward/backward sweep produces for one sequence.
#[derive(Clone, Debug)]
pub struct ForwardBackwardPass {
    /// `T x N` scaled forward values; each row sums to 1.
    pub alphas: Matrix,
    /// `T x N` backward values scaled by the forward scaling constants.
    pub betas: Matrix,
    /// Length-`T` scaling constants `c_t`.
    pub scale: Vec<f64>,
    /// `T x N` posterior state probabilities; each row sums to 1.
    pub gammas: Matrix,
    /// `T-1` slices of `N x N` posterior transition probabilities.
    pub digammas: Vec<Matrix>,
    /// `log P(O | lambda)`.
    pub log_likelihood: f64,
}

fn validate_sequence(model: &Model, seq: &[usize]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidInput("observation sequence is empty".into()));
    }
    for (t, &sym) in seq.iter().enumerate() {
        if sym >= model.m() {
            return Err(Error::InvalidInput(format!(
                "position {t}: symbol {sym} >= vocabulary size {}",
                model.m()
            )));
        }
    }
    Ok(())
}

impl Model {
    /// Scaled forward pass.
    ///
    /// Returns `(alphas, scale, log_likelihood)` where each row of `alphas`
    /// is normalized to sum to 1, `scale[t]` is the reciprocal of the
    /// pre-normalization row sum, and the log-likelihood is
    /// `-sum_t log scale[t]`.
    ///
    /// Fails with [`Error::ImpossibleSequence`] when some time step has zero
    /// probability under the model (for example a symbol with zero emission
    /// probability in every state).
    pub fn forward(&self, seq: &[usize]) -> Result<(Matrix, Vec<f64>, f64)> {
        validate_sequence(self, seq)?;
        let n = self.n();
        let t_len = seq.len();
        let mut alphas = Matrix::zeros(t_len, n);
        let mut scale = vec![0.0; t_len];

        let row0 = alphas.row_mut(0);
        let sym0 = seq[0];
        let mut sum = 0.0;
        for i in 0..n {
            let v = self.pi()[i] * self.b().row(i)[sym0];
            row0[i] = v;
            sum += v;
        }
        scale[0] = normalize_step(row0, sum, 0, sym0)?;

        for t in 1..t_len {
            let sym = seq[t];
            let (prev, cur) = alphas.rows_pair_mut(t - 1, t);
            for j in 0..n {
                let w = prev[j];
                let a_row = self.a().row(j);
                for i in 0..n {
                    cur[i] += w * a_row[i];
                }
            }
            let mut sum = 0.0;
            for i in 0..n {
                cur[i] *= self.b().row(i)[sym];
                sum += cur[i];
            }
            scale[t] = normalize_step(cur, sum, t, sym)?;
        }

        let log_likelihood = -scale.iter().map(|c| c.ln()).sum::<f64>();
        if !log_likelihood.is_finite() {
            return Err(Error::NonFinite("forward log-likelihood"));
        }
        Ok((alphas, scale, log_likelihood))
    }

    /// Scaled backward pass using the scaling constants produced by
    /// [`Model::forward`] on the same `(model, seq)` pair.
    pub fn backward(&self, seq: &[usize], scale: &[f64]) -> Result<Matrix> {
        validate_sequence(self, seq)?;
        if scale.len() != seq.len() {
            return Err(Error::InvalidInput(format!(
                "scale length {} does not match sequence length {}",
                scale.len(),
                seq.len()
            )));
        }
        let n = self.n();
        let t_len = seq.len();
        let mut betas = Matrix::zeros(t_len, n);

        let c_last = scale[t_len - 1];
        for v in betas.row_mut(t_len - 1) {
            *v = c_last;
        }

        let mut emit_beta = vec![0.0; n];
        for t in (0..t_len - 1).rev() {
            let sym_next = seq[t + 1];
            {
                let next = betas.row(t + 1);
                for j in 0..n {
                    emit_beta[j] = self.b().row(j)[sym_next] * next[j];
                }
            }
            let c_t = scale[t];
            let cur = betas.row_mut(t);
            for i in 0..n {
                let a_row = self.a().row(i);
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a_row[j] * emit_beta[j];
                }
                cur[i] = acc * c_t;
            }
        }

        if betas.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("backward pass"));
        }
        Ok(betas)
    }

    /// Full forward/backward sweep with posteriors.
    pub fn posteriors(&self, seq: &[usize]) -> Result<ForwardBackwardPass> {
        let (alphas, scale, log_likelihood) = self.forward(seq)?;
        let betas = self.backward(seq, &scale)?;
        let n = self.n();
        let t_len = seq.len();

        let mut gammas = Matrix::zeros(t_len, n);
        for t in 0..t_len {
            let a_row = alphas.row(t);
            let b_row = betas.row(t);
            let g = gammas.row_mut(t);
            let mut sum = 0.0;
            for i in 0..n {
                g[i] = a_row[i] * b_row[i];
                sum += g[i];
            }
            if sum <= 0.0 || !sum.is_finite() {
                return Err(Error::NonFinite("posterior normalization"));
            }
            for v in g.iter_mut() {
                *v /= sum;
            }
        }

        let mut digammas = Vec::with_capacity(t_len - 1);
        let mut emit_beta = vec![0.0; n];
        for t in 0..t_len - 1 {
            let sym_next = seq[t + 1];
            let beta_next = betas.row(t + 1);
            for j in 0..n {
                emit_beta[j] = self.b().row(j)[sym_next] * beta_next[j];
            }
            let alpha_row = alphas.row(t);
            let mut slice = Matrix::zeros(n, n);
            for i in 0..n {
                let a_row = self.a().row(i);
                let out = slice.row_mut(i);
                for j in 0..n {
                    out[j] = alpha_row[i] * a_row[j] * emit_beta[j];
                }
            }
            digammas.push(slice);
        }

        Ok(ForwardBackwardPass {
            alphas,
            betas,
            scale,
            gammas,
            digammas,
            log_likelihood,
        })
    }

    /// `log P(O | lambda)` for one sequence.
    pub fn score(&self, seq: &[usize]) -> Result<f64> {
        let (_, _, ll) = self.forward(seq)?;
        Ok(ll)
    }

    /// Length-normalized score: `log P(O | lambda) / T`. Makes scores of
    /// sequences with different lengths comparable.
    pub fn score_per_symbol(&self, seq: &[usize]) -> Result<f64> {
        let ll = self.score(seq)?;
        Ok(ll / seq.len() as f64)
    }

    /// Most probable state per time step according to the posteriors, with
    /// ties broken toward the lowest state index.
    pub fn posterior_decode(&self, seq: &[usize]) -> Result<Vec<usize>> {
        let (alphas, scale, _) = self.forward(seq)?;
        let betas = self.backward(seq, &scale)?;
        let n = self.n();
        let mut states = Vec::with_capacity(seq.len());
        for t in 0..seq.len() {
            let a_row = alphas.row(t);
            let b_row = betas.row(t);
            let mut best = 0usize;
            let mut best_value = a_row[0] * b_row[0];
            for i in 1..n {
                let v = a_row[i] * b_row[i];
                if v > best_value {
                    best_value = v;
                    best = i;
                }
            }
            states.push(best);
        }
        Ok(states)
    }
}

#[inline]
fn normalize_step(row: &mut [f64], sum: f64, t: usize, symbol: usize) -> Result<f64> {
    if sum <= 0.0 {
        return Err(Error::ImpossibleSequence {
            position: t,
            symbol,
        });
    }
    let c = 1.0 / sum;
    if !c.is_finite() {
        // Probability mass too small to represent; indistinguishable from an
        // impossible step for the caller.
        return Err(Error::ImpossibleSequence {
            position: t,
            symbol,
        });
    }
    for v in row.iter_mut() {
        *v *= c;
    }
    Ok(c)
}

/// Sum of per-sequence log-likelihoods across an observation set.
pub fn total_score(model: &Model, obs: &ObservationSet) -> Result<f64> {
    let mut total = 0.0;
    for seq in obs.sequences() {
        total += model.score(seq)?;
    }
    Ok(total)
}
