//! Model representation: the `(A, B, pi)` triple and observation sets.
//!
//! A [`Model`] is immutable after construction and validated on every
//! construction path (including deserialization), so any `Model` in scope is
//! guaranteed row stochastic. All probability arithmetic stays in plain `f64`
//! probability space; log space appears only at the scoring boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums when validating stochastic matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Dense row-major matrix of `f64`.
///
/// Serializes as a nested array of rows, which keeps the on-disk model format
/// plain JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix must have at least one row".into()));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::InvalidInput("matrix rows must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {} has length {}, expected {}",
                    i,
                    row.len(),
                    cols
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Borrow row `i` immutably and row `j` mutably (`i != j`).
    #[inline]
    pub(crate) fn rows_pair_mut(&mut self, i: usize, j: usize) -> (&[f64], &mut [f64]) {
        assert!(i < j, "rows_pair_mut requires i < j");
        let (head, tail) = self.data.split_at_mut(j * self.cols);
        (
            &head[i * self.cols..(i + 1) * self.cols],
            &mut tail[..self.cols],
        )
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        Matrix::from_rows(rows).map_err(|e| e.to_string())
    }
}

/// Serialized form of a model; also the JSON schema on disk.
#[derive(Serialize, Deserialize)]
struct ModelRepr {
    n: usize,
    m: usize,
    pi: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

/// A discrete hidden Markov model `(A, B, pi)` over `n` hidden states and a
/// vocabulary of `m` symbols.
///
/// Invariants (checked on construction):
/// - every entry of `pi`, `a`, `b` lies in `[0, 1]`,
/// - each row of `a` and `b`, and `pi` itself, sums to 1 within `1e-9`,
/// - `n >= 1`, `m >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct Model {
    n: usize,
    m: usize,
    pi: Vec<f64>,
    a: Matrix,
    b: Matrix,
}

impl Model {
    pub fn new(pi: Vec<f64>, a: Matrix, b: Matrix) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::InvalidModel("pi must be non-empty".into()));
        }
        if a.rows() != n || a.cols() != n {
            return Err(Error::InvalidModel(format!(
                "transition matrix is {}x{}, expected {n}x{n}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != n {
            return Err(Error::InvalidModel(format!(
                "emission matrix has {} rows, expected {n}",
                b.rows()
            )));
        }
        let m = b.cols();
        if m == 0 {
            return Err(Error::InvalidModel("emission matrix must have at least one column".into()));
        }
        let model = Model { n, m, pi, a, b };
        model.validate()?;
        Ok(model)
    }

    /// Convenience constructor from nested row vectors.
    pub fn from_rows(pi: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        Model::new(pi, Matrix::from_rows(a)?, Matrix::from_rows(b)?)
    }

    fn validate(&self) -> Result<()> {
        check_stochastic_row("pi", 0, &self.pi)?;
        for i in 0..self.n {
            check_stochastic_row("a", i, self.a.row(i))?;
            check_stochastic_row("b", i, self.b.row(i))?;
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    #[inline]
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    #[inline]
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Serialize to the on-disk JSON format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidModel(format!("model JSON: {e}")))
    }
}

impl From<Model> for ModelRepr {
    fn from(model: Model) -> Self {
        ModelRepr {
            n: model.n,
            m: model.m,
            pi: model.pi,
            a: model.a.to_rows(),
            b: model.b.to_rows(),
        }
    }
}

impl TryFrom<ModelRepr> for Model {
    type Error = String;

    fn try_from(repr: ModelRepr) -> std::result::Result<Self, String> {
        let model = Model::from_rows(repr.pi, repr.a, repr.b).map_err(|e| e.to_string())?;
        if model.n != repr.n || model.m != repr.m {
            return Err(format!(
                "declared dimensions ({}, {}) do not match matrices ({}, {})",
                repr.n, repr.m, model.n, model.m
            ));
        }
        Ok(model)
    }
}

fn check_stochastic_row(name: &str, index: usize, row: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &v in row {
        if !v.is_finite() {
            return Err(Error::InvalidModel(format!(
                "{name} row {index} contains a non-finite entry"
            )));
        }
        if !(-0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&v) {
            return Err(Error::InvalidModel(format!(
                "{name} row {index} entry {v} outside [0, 1]"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::InvalidModel(format!(
            "{name} row {index} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// One or more integer-encoded observation sequences over a shared vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    sequences: Vec<Vec<usize>>,
    vocab_size: usize,
    total_length: usize,
}

impl ObservationSet {
    pub fn new(sequences: Vec<Vec<usize>>, vocab_size: usize) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidInput("vocab_size must be >= 1".into()));
        }
        if sequences.is_empty() {
            return Err(Error::InvalidInput("observation set must contain at least one sequence".into()));
        }
        let mut total_length = 0usize;
        for (k, seq) in sequences.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::InvalidInput(format!("sequence {k} is empty")));
            }
            for (t, &sym) in seq.iter().enumerate() {
                if sym >= vocab_size {
                    return Err(Error::InvalidInput(format!(
                        "sequence {k} position {t}: symbol {sym} >= vocab_size {vocab_size}"
                    )));
                }
            }
            total_length += seq.len();
        }
        Ok(ObservationSet {
            sequences,
            vocab_size,
            total_length,
        })
    }

    /// Wrap a single sequence.
    pub fn single(sequence: Vec<usize>, vocab_size: usize) -> Result<Self> {
        ObservationSet::new(vec![sequence], vocab_size)
    }

    #[inline]
    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    #[inline]
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn total_length(&self) -> usize {
        self.total_length
    }
}
