//! Momentum update policies wrapping Baum-Welch reestimation.
//!
//! Three policies are available: plain reestimation, classic momentum, and
//! Nesterov momentum. Velocity is tracked per parameter in matrices shadowing
//! `A`, `B`, and `pi`, decays by the momentum factor each iteration, and is
//! driven by the raw reestimation delta (the difference between parameters
//! before and after reestimation, prior to any momentum application).
//!
//! Adding velocity can push parameters negative, so every momentum
//! application is followed by [`fixup`]: negative entries are clamped to a
//! small positive epsilon and each row is renormalized. A schedule can zero
//! the effective factor for chosen iteration intervals, which makes training
//! behave exactly like plain Baum-Welch inside those intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Matrix, Model};

/// Default clamp floor for negative entries after a momentum step.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Which update rule a policy applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain Baum-Welch; no velocity is tracked.
    None,
    /// Velocity added after reestimation.
    Classic,
    /// Velocity added before reestimation (look-ahead).
    Nesterov,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Classic => "classic",
            Variant::Nesterov => "nesterov",
        }
    }
}

/// Iteration intervals during which the effective momentum factor is zero.
///
/// Intervals are half-open `[start, end)` over iteration numbers, where
/// iteration 1 is the first reestimation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<[usize; 2]>", try_from = "Vec<[usize; 2]>")]
pub struct MomentumSchedule {
    intervals: Vec<(usize, usize)>,
}

impl MomentumSchedule {
    pub fn new(mut intervals: Vec<(usize, usize)>) -> Result<Self> {
        intervals.sort_unstable();
        for &(start, end) in &intervals {
            if start >= end {
                return Err(Error::InvalidInput(format!(
                    "zero interval [{start}, {end}) is empty or reversed"
                )));
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidInput(format!(
                    "zero intervals [{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(MomentumSchedule { intervals })
    }

    pub fn empty() -> Self {
        MomentumSchedule::default()
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    /// `0.0` when `iteration` falls in a zero interval, `base_factor`
    /// otherwise.
    pub fn effective_factor(&self, base_factor: f64, iteration: usize) -> f64 {
        for &(start, end) in &self.intervals {
            if iteration >= start && iteration < end {
                return 0.0;
            }
        }
        base_factor
    }
}

impl From<MomentumSchedule> for Vec<[usize; 2]> {
    fn from(s: MomentumSchedule) -> Self {
        s.intervals.iter().map(|&(a, b)| [a, b]).collect()
    }
}

impl TryFrom<Vec<[usize; 2]>> for MomentumSchedule {
    type Error = String;

    fn try_from(v: Vec<[usize; 2]>) -> std::result::Result<Self, String> {
        MomentumSchedule::new(v.into_iter().map(|[a, b]| (a, b)).collect())
            .map_err(|e| e.to_string())
    }
}

/// Serialized description of an update policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumPolicy {
    pub variant: Variant,
    #[serde(default)]
    pub factor: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, rename = "zero_intervals")]
    pub schedule: MomentumSchedule,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl MomentumPolicy {
    pub fn none() -> Self {
        MomentumPolicy {
            variant: Variant::None,
            factor: 0.0,
            epsilon: DEFAULT_EPSILON,
            schedule: MomentumSchedule::empty(),
        }
    }

    pub fn classic(factor: f64) -> Self {
        MomentumPolicy {
            variant: Variant::Classic,
            factor,
            epsilon: DEFAULT_EPSILON,
            schedule: MomentumSchedule::empty(),
        }
    }

    /// Nesterov policy. Factors around 0.3-0.5 work well; at higher values
    /// the look-ahead tends to keep training from converging at all, where
    /// classic momentum merely overshoots.
    pub fn nesterov(factor: f64) -> Self {
        MomentumPolicy {
            variant: Variant::Nesterov,
            factor,
            epsilon: DEFAULT_EPSILON,
            schedule: MomentumSchedule::empty(),
        }
    }

    pub fn with_schedule(mut self, schedule: MomentumSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.factor) {
            return Err(Error::InvalidInput(format!(
                "momentum factor {} outside [0, 1)",
                self.factor
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "epsilon {} must be a positive finite value",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-run momentum state: one velocity per model parameter.
///
/// A state belongs to exactly one training run and is mutated serially within
/// it; velocities start at zero.
#[derive(Clone, Debug)]
pub struct MomentumState {
    v_pi: Vec<f64>,
    v_a: Matrix,
    v_b: Matrix,
    policy: MomentumPolicy,
}

impl MomentumState {
    pub fn new(policy: MomentumPolicy, n: usize, m: usize) -> Self {
        MomentumState {
            v_pi: vec![0.0; n],
            v_a: Matrix::zeros(n, n),
            v_b: Matrix::zeros(n, m),
            policy,
        }
    }

    pub fn policy(&self) -> &MomentumPolicy {
        &self.policy
    }

    pub fn velocity_pi(&self) -> &[f64] {
        &self.v_pi
    }

    pub fn velocity_a(&self) -> &Matrix {
        &self.v_a
    }

    pub fn velocity_b(&self) -> &Matrix {
        &self.v_b
    }

    fn velocities_zero(&self) -> bool {
        self.v_pi.iter().all(|&v| v == 0.0)
            && self.v_a.iter().all(|v| v == 0.0)
            && self.v_b.iter().all(|v| v == 0.0)
    }

    fn reset_velocities(&mut self) {
        self.v_pi.fill(0.0);
        self.v_a.as_mut_slice().fill(0.0);
        self.v_b.as_mut_slice().fill(0.0);
    }

    /// `v <- m_eff * (v + (reestimated - prev))`, computed from the raw
    /// reestimated values (before any clamping or renormalization).
    fn decay_velocities(&mut self, prev: &Model, reestimated: &Model, m_eff: f64) {
        for (v, (new, old)) in self
            .v_pi
            .iter_mut()
            .zip(reestimated.pi().iter().zip(prev.pi().iter()))
        {
            *v = m_eff * (*v + (new - old));
        }
        for (v, (new, old)) in self
            .v_a
            .as_mut_slice()
            .iter_mut()
            .zip(reestimated.a().as_slice().iter().zip(prev.a().as_slice().iter()))
        {
            *v = m_eff * (*v + (new - old));
        }
        for (v, (new, old)) in self
            .v_b
            .as_mut_slice()
            .iter_mut()
            .zip(reestimated.b().as_slice().iter().zip(prev.b().as_slice().iter()))
        {
            *v = m_eff * (*v + (new - old));
        }
    }

    /// Classic momentum step: add the carried velocity to the freshly
    /// reestimated parameters, then decay the velocity with the raw delta.
    ///
    /// During a scheduled zero iteration the carried velocity is neither
    /// applied nor kept: the step returns the reestimated model unchanged and
    /// resets the velocity, so a zeroed interval is indistinguishable from
    /// plain Baum-Welch. With zero velocity (in particular on the first
    /// iteration) the reestimated model is returned bit-for-bit.
    pub fn classic_step(&mut self, prev: &Model, reestimated: Model, iteration: usize) -> Model {
        let m_eff = self.policy.schedule.effective_factor(self.policy.factor, iteration);
        if m_eff == 0.0 {
            self.reset_velocities();
            return reestimated;
        }
        let out = if self.velocities_zero() {
            reestimated.clone()
        } else {
            self.apply_velocity(&reestimated)
        };
        self.decay_velocities(prev, &reestimated, m_eff);
        out
    }

    /// Nesterov look-ahead: the model reestimation should run on, i.e. the
    /// current model plus the carried velocity (clamped and renormalized).
    ///
    /// The schedule deliberately does not gate this add; zeroing an iteration
    /// only affects the velocity decay in [`MomentumState::nesterov_post_step`].
    pub fn nesterov_pre_step(&self, current: &Model, _iteration: usize) -> Model {
        if self.velocities_zero() {
            return current.clone();
        }
        self.apply_velocity(current)
    }

    /// Nesterov velocity update after reestimating from the look-ahead
    /// model. Returns the reestimated model unchanged; its momentum is
    /// applied at the next iteration's pre-step.
    pub fn nesterov_post_step(
        &mut self,
        prev: &Model,
        reestimated_from_lookahead: Model,
        iteration: usize,
    ) -> Model {
        let m_eff = self.policy.schedule.effective_factor(self.policy.factor, iteration);
        if m_eff == 0.0 {
            self.reset_velocities();
        } else {
            self.decay_velocities(prev, &reestimated_from_lookahead, m_eff);
        }
        reestimated_from_lookahead
    }

    fn apply_velocity(&self, model: &Model) -> Model {
        let pi: Vec<f64> = model
            .pi()
            .iter()
            .zip(self.v_pi.iter())
            .map(|(p, v)| p + v)
            .collect();
        let mut a = model.a().clone();
        for (x, v) in a.as_mut_slice().iter_mut().zip(self.v_a.as_slice()) {
            *x += v;
        }
        let mut b = model.b().clone();
        for (x, v) in b.as_mut_slice().iter_mut().zip(self.v_b.as_slice()) {
            *x += v;
        }
        fixup(pi, a, b, self.policy.epsilon)
    }
}

/// Clamp negative entries to `epsilon` and renormalize each row, producing a
/// valid model from arbitrary finite matrices.
///
/// Panics on non-finite input; callers only ever pass sums of valid model
/// parameters and finite velocities.
pub fn fixup(mut pi: Vec<f64>, mut a: Matrix, mut b: Matrix, epsilon: f64) -> Model {
    fixup_row(&mut pi, epsilon);
    for i in 0..a.rows() {
        fixup_row(a.row_mut(i), epsilon);
    }
    for i in 0..b.rows() {
        fixup_row(b.row_mut(i), epsilon);
    }
    Model::new(pi, a, b).expect("fixup output is row stochastic by construction")
}

/// Clamp-and-renormalize a single row in place.
pub fn fixup_row(row: &mut [f64], epsilon: f64) {
    let mut sum = 0.0;
    for v in row.iter_mut() {
        if *v < 0.0 {
            *v = epsilon;
        }
        sum += *v;
    }
    assert!(
        sum.is_finite() && sum > 0.0,
        "fixup requires finite input and positive epsilon (row sum {sum})"
    );
    for v in row.iter_mut() {
        *v /= sum;
    }
}
