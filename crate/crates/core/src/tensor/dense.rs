use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::factor::FactorTuple;
use super::matrix::RationalMatrix;
use crate::error::{Error, Result};
use crate::rational::{self, JsonRational, Rational};

/// Hypercubic `n x ... x n` tensor of order `N`, entries row-major in `(i_1, ..., i_N)`
/// (the last index varies fastest).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactTensor {
    order: usize,
    dim: usize,
    entries: Vec<Rational>,
}

impl ExactTensor {
    pub fn new(order: usize, dim: usize, entries: Vec<Rational>) -> Result<Self> {
        let expected = checked_volume(order, dim)?;
        if entries.len() != expected {
            return Err(Error::Shape(format!(
                "order-{order} tensor of dim {dim} needs {expected} entries, got {}",
                entries.len()
            )));
        }
        Ok(ExactTensor {
            order,
            dim,
            entries,
        })
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        let len = checked_volume(order, dim).expect("tensor volume overflows usize");
        ExactTensor {
            order,
            dim,
            entries: vec![Rational::zero(); len],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order);
        index.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, index: &[usize]) -> &Rational {
        &self.entries[self.linear_index(index)]
    }

    /// Multi-index of a row-major position.
    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in idx.iter_mut().rev() {
            *slot = linear % self.dim;
            linear /= self.dim;
        }
        idx
    }

    /// Mode-`mode` unfolding (0-based): an `n x n^(N-1)` matrix whose row is `i_mode`
    /// and whose column enumerates the remaining indices in increasing mode
    /// order with the lowest remaining mode varying fastest.
    ///
    /// With that column order, for `T = [X_1; ...; X_N]`,
    /// `unfold(T, 0)^T = (X_N ⊙ ... ⊙ X_2) X_1^T`.
    pub fn unfold(&self, mode: usize) -> Result<RationalMatrix> {
        if mode >= self.order {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order,
            });
        }
        let n = self.dim;
        let cols = self.entries.len() / n;
        let mut out = RationalMatrix::zeros(n, cols);
        for (linear, v) in self.entries.iter().enumerate() {
            let idx = self.multi_index(linear);
            let mut col = 0;
            for k in (0..self.order).rev().filter(|&k| k != mode) {
                col = col * n + idx[k];
            }
            out.set(idx[mode], col, v.clone());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            order: self.order,
            dim: self.dim,
            entries: rational::to_json_vec(&self.entries),
        }
    }
}

fn checked_volume(order: usize, dim: usize) -> Result<usize> {
    u32::try_from(order)
        .ok()
        .and_then(|o| dim.checked_pow(o))
        .ok_or_else(|| Error::Shape(format!("tensor of order {order} and dim {dim} is too large")))
}

impl fmt::Debug for ExactTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries: Vec<String> = self.entries.iter().map(rational::format).collect();
        f.debug_struct("ExactTensor")
            .field("order", &self.order)
            .field("dim", &self.dim)
            .field("entries", &entries)
            .finish()
    }
}

/// JSON form of a tensor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorJson {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<JsonRational>,
}

impl TryFrom<TensorJson> for ExactTensor {
    type Error = Error;

    fn try_from(j: TensorJson) -> Result<Self> {
        ExactTensor::new(j.order, j.dim, rational::from_json_vec(j.entries))
    }
}

impl Serialize for ExactTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ExactTensor::try_from(TensorJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// `T[i_1, ..., i_N] = v_1[i_1] * ... * v_N[i_N]`.
pub fn outer_product(vectors: &[Vec<Rational>]) -> Result<ExactTensor> {
    let order = vectors.len();
    if order == 0 {
        return Err(Error::Shape("outer product of no vectors".into()));
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::Shape(format!(
            "outer product vectors must share length {dim}, got {}",
            v.len()
        )));
    }
    let mut entries = vec![Rational::from_integer(1.into())];
    for v in vectors {
        entries = entries
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect();
    }
    ExactTensor::new(order, dim, entries)
}

/// Sum of the `R` rank-one terms built from matching columns of each factor matrix.
pub fn cpd_compose(t: &FactorTuple) -> ExactTensor {
    let order = t.order();
    let dim = t.dim();
    let mut acc = ExactTensor::zeros(order, dim);
    for r in 0..t.components() {
        let cols: Vec<Vec<Rational>> = t.matrices().iter().map(|m| m.column(r)).collect();
        let term = outer_product(&cols).expect("consistent tuple");
        for (a, b) in acc.entries.iter_mut().zip(term.entries) {
            *a += b;
        }
    }
    acc
}
