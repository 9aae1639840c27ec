//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model failed validation (shape mismatch, non-stochastic rows, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An input failed validation (bad symbols, empty sequences, bad config, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The forward pass found a time step at which every state assigns zero
    /// probability to the observed symbol. Distinguishes "the model forbids
    /// this sequence" from numerical failure; additive smoothing exists to
    /// prevent it.
    #[error("impossible sequence: zero probability mass at position {position} (symbol {symbol})")]
    ImpossibleSequence { position: usize, symbol: usize },

    /// Text or opcode encoding produced no symbols.
    #[error("empty encoding: input contains no encodable symbols")]
    EmptyEncoding,

    /// A split or truncation asked for more data than is available.
    #[error("insufficient data: {available} symbols available, {requested} requested")]
    InsufficientData { available: usize, requested: usize },

    /// One-vs-rest evaluation requires at least one positive and one negative.
    #[error("degenerate class for family {family:?}: {positives} positives, {negatives} negatives")]
    DegenerateClass {
        family: String,
        positives: usize,
        negatives: usize,
    },

    /// A training-loop failure, annotated with the iteration that caused it.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Every restart of a sweep failed.
    #[error("all {restarts} restarts failed; first failure: {first}")]
    AllRestartsFailed { restarts: usize, first: Box<Error> },

    /// A computation produced a non-finite value; indicates an internal bug
    /// or corrupted input rather than a modelling condition.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is (or wraps) an impossible-sequence condition.
    pub fn is_impossible_sequence(&self) -> bool {
        match self {
            Error::ImpossibleSequence { .. } => true,
            Error::AtIteration { source, .. } => source.is_impossible_sequence(),
            _ => false,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
