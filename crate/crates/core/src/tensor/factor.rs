use std::fmt;

use serde::Serialize;

use super::dense::{cpd_compose, ExactTensor};
use super::matrix::{kruskal_rank, RationalMatrix};
use crate::error::{Error, Result};
use crate::model::{Alphabet, ModelSpec};
use crate::rational::{self, JsonRational, Rational};

/// An `n x R` factor matrix whose entries are symbols of one mode's alphabet.
///
/// Entries are stored as symbol indices in column-major order, which is also
/// the canonical enumeration order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FactorMatrix {
    mode: usize,
    rows: usize,
    cols: usize,
    alphabet: Alphabet,
    symbols: Vec<u16>,
}

impl FactorMatrix {
    pub fn from_symbols(
        mode: usize,
        alphabet: Alphabet,
        rows: usize,
        cols: usize,
        symbols: Vec<u16>,
    ) -> Result<Self> {
        if symbols.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} factor matrix needs {} symbols, got {}",
                rows * cols,
                symbols.len()
            )));
        }
        if symbols.iter().any(|&s| s as usize >= alphabet.len()) {
            return Err(Error::InvalidParameter("symbol index outside alphabet".into()));
        }
        Ok(FactorMatrix {
            mode,
            rows,
            cols,
            alphabet,
            symbols,
        })
    }

    pub fn from_matrix(mode: usize, alphabet: Alphabet, m: &RationalMatrix) -> Result<Self> {
        let mut symbols = Vec::with_capacity(m.rows() * m.cols());
        for r in 0..m.cols() {
            for j in 0..m.rows() {
                let v = m.get(j, r);
                let s = alphabet.index_of(v).ok_or_else(|| Error::NotInAlphabet {
                    mode,
                    value: rational::format(v),
                })?;
                symbols.push(s);
            }
        }
        Self::from_symbols(mode, alphabet, m.rows(), m.cols(), symbols)
    }

    /// Convenience for integer-valued alphabets; `rows` are the matrix rows.
    pub fn from_int_rows(mode: usize, alphabet: Alphabet, rows: &[&[i64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let flat: Vec<i64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::from_matrix(mode, alphabet, &RationalMatrix::from_ints(r, c, &flat)?)
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Column-major symbol indices.
    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn symbol_at(&self, row: usize, col: usize) -> u16 {
        self.symbols[col * self.rows + row]
    }

    pub fn entry(&self, row: usize, col: usize) -> &Rational {
        self.alphabet.symbol(self.symbol_at(row, col))
    }

    pub fn column(&self, col: usize) -> Vec<Rational> {
        (0..self.rows).map(|j| self.entry(j, col).clone()).collect()
    }

    pub fn to_matrix(&self) -> RationalMatrix {
        let data = (0..self.rows)
            .flat_map(|j| (0..self.cols).map(move |r| (j, r)))
            .map(|(j, r)| self.entry(j, r).clone())
            .collect();
        RationalMatrix::new(self.rows, self.cols, data).expect("consistent shape")
    }

    pub fn rank(&self) -> usize {
        self.to_matrix().rank()
    }

    pub fn kruskal_rank(&self) -> usize {
        kruskal_rank(&self.to_matrix())
    }

    pub fn with_mode(&self, mode: usize) -> Self {
        FactorMatrix {
            mode,
            ..self.clone()
        }
    }
}

impl fmt::Debug for FactorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FactorMatrix(mode {}, {:?})", self.mode, self.to_matrix())
    }
}

/// One factor matrix per mode, sharing `n` and `R`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FactorTuple {
    matrices: Vec<FactorMatrix>,
}

impl FactorTuple {
    pub fn new(matrices: Vec<FactorMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Shape("factor tuple needs at least one matrix".into()))?;
        let (rows, cols) = (first.rows, first.cols);
        for (i, m) in matrices.iter().enumerate() {
            if m.rows != rows || m.cols != cols {
                return Err(Error::Shape(format!(
                    "mode {i} matrix is {}x{}, expected {rows}x{cols}",
                    m.rows, m.cols
                )));
            }
            if m.mode != i {
                return Err(Error::Shape(format!("matrix in slot {i} is tagged mode {}", m.mode)));
            }
        }
        Ok(FactorTuple { matrices })
    }

    /// Builds a tuple and checks it against a model: shapes, alphabets, and
    /// identical matrices when the model is supersymmetric.
    pub fn for_model(m: &ModelSpec, matrices: Vec<FactorMatrix>) -> Result<Self> {
        let t = Self::new(matrices)?;
        t.check_model(m)?;
        Ok(t)
    }

    pub fn check_model(&self, m: &ModelSpec) -> Result<()> {
        if self.order() != m.order() || self.dim() != m.dim() || self.components() != m.components()
        {
            return Err(Error::Shape(format!(
                "tuple (N={}, n={}, R={}) does not match model (N={}, n={}, R={})",
                self.order(),
                self.dim(),
                self.components(),
                m.order(),
                m.dim(),
                m.components()
            )));
        }
        for (i, x) in self.matrices.iter().enumerate() {
            if x.alphabet != *m.alphabet(i) {
                return Err(Error::Shape(format!("mode {i} alphabet differs from the model")));
            }
        }
        if m.is_supersymmetric()
            && self.matrices.iter().any(|x| x.symbols != self.matrices[0].symbols)
        {
            return Err(Error::Shape("supersymmetric tuple needs identical matrices".into()));
        }
        Ok(())
    }

    /// Replicates one matrix across `order` modes.
    pub fn replicated(x: &FactorMatrix, order: usize) -> Self {
        FactorTuple {
            matrices: (0..order).map(|i| x.with_mode(i)).collect(),
        }
    }

    /// Builds a tuple for `m` from per-free-mode column-major symbol vectors.
    pub fn from_free_symbols(m: &ModelSpec, free: &[&[u16]]) -> Self {
        let matrices = (0..m.order())
            .map(|i| {
                FactorMatrix::from_symbols(
                    i,
                    m.alphabet(i).clone(),
                    m.dim(),
                    m.components(),
                    free[m.source_mode(i)].to_vec(),
                )
                .expect("symbols from the model's own space")
            })
            .collect();
        FactorTuple { matrices }
    }

    pub fn matrices(&self) -> &[FactorMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, mode: usize) -> &FactorMatrix {
        &self.matrices[mode]
    }

    pub fn order(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows
    }

    pub fn components(&self) -> usize {
        self.matrices[0].cols
    }

    pub fn compose(&self) -> ExactTensor {
        cpd_compose(self)
    }

    pub fn is_full_rank(&self) -> bool {
        self.matrices.iter().all(|m| m.rank() == self.components())
    }

    /// `sum_i k(X_i) >= 2R + (N - 1)`. Only defined for `N >= 3`.
    pub fn kruskal_condition(&self) -> Result<bool> {
        kruskal_condition(self)
    }

    pub fn to_json(&self) -> Vec<Vec<Vec<JsonRational>>> {
        self.matrices.iter().map(|m| m.to_matrix().to_json_rows()).collect()
    }

    /// Parses the JSON matrix list against a model.
    pub fn from_json(m: &ModelSpec, j: Vec<Vec<Vec<JsonRational>>>) -> Result<Self> {
        let matrices = j
            .into_iter()
            .enumerate()
            .map(|(i, rows)| {
                m.check_mode(i)?;
                let mat = RationalMatrix::from_json_rows(rows)?;
                FactorMatrix::from_matrix(i, m.alphabet(i).clone(), &mat)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::for_model(m, matrices)
    }
}

impl fmt::Debug for FactorTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.matrices.iter().map(FactorMatrix::to_matrix))
            .finish()
    }
}

impl Serialize for FactorTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

pub fn kruskal_condition(t: &FactorTuple) -> Result<bool> {
    let n = t.order();
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "Kruskal's condition needs order >= 3, got {n}"
        )));
    }
    let sum: usize = t.matrices().iter().map(FactorMatrix::kruskal_rank).sum();
    Ok(sum >= 2 * t.components() + n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Distribution;

    fn fm(mode: usize, rows: &[&[i64]]) -> FactorMatrix {
        FactorMatrix::from_int_rows(mode, Alphabet::signs(), rows).unwrap()
    }

    #[test]
    fn symbols_are_column_major() {
        let x = fm(0, &[&[1, -1], &[-1, -1], &[1, 1]]);
        assert_eq!(x.symbols(), &[1, 0, 1, 0, 0, 1]);
        assert_eq!(x.entry(2, 1), &crate::rational::int(1));
        assert_eq!(x.to_matrix(), RationalMatrix::from_ints(3, 2, &[1, -1, -1, -1, 1, 1]).unwrap());
    }

    #[test]
    fn entries_outside_alphabet_are_rejected() {
        let m = RationalMatrix::from_ints(1, 1, &[2]).unwrap();
        assert!(matches!(
            FactorMatrix::from_matrix(0, Alphabet::signs(), &m),
            Err(Error::NotInAlphabet { .. })
        ));
    }

    #[test]
    fn kruskal_condition_cases() {
        let full = [&[1i64, 1][..], &[1, -1]];
        let t = FactorTuple::new(vec![fm(0, &full), fm(1, &full), fm(2, &full)]).unwrap();
        assert!(t.kruskal_condition().unwrap());

        let deficient = [&[1i64, 1][..], &[-1, -1]];
        let t = FactorTuple::new(vec![fm(0, &deficient), fm(1, &full), fm(2, &full)]).unwrap();
        assert!(!t.kruskal_condition().unwrap());

        // rank one: the sum N never reaches N + 1
        let col = [&[1i64][..], &[-1]];
        let t = FactorTuple::new((0..4).map(|i| fm(i, &col)).collect()).unwrap();
        assert!(!t.kruskal_condition().unwrap());

        let t = FactorTuple::new(vec![fm(0, &full), fm(1, &full)]).unwrap();
        assert!(matches!(t.kruskal_condition(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn supersymmetric_models_need_identical_matrices() {
        let m = ModelSpec::supersymmetric(
            3,
            2,
            Alphabet::signs(),
            vec![Distribution::uniform(2).unwrap(); 2],
        )
        .unwrap();
        let a = fm(0, &[&[1, 1], &[1, -1]]);
        assert!(FactorTuple::for_model(&m, FactorTuple::replicated(&a, 3).matrices().to_vec()).is_ok());
        let b = fm(2, &[&[1, 1], &[-1, -1]]);
        assert!(FactorTuple::for_model(&m, vec![a.clone(), a.with_mode(1), b]).is_err());
    }
}
