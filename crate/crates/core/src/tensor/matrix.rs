//! Dense matrices over exact rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, JsonRational, Rational};

/// Row-major dense matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(RationalMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_ints(rows: usize, cols: usize, values: &[i64]) -> Result<Self> {
        Self::new(rows, cols, values.iter().map(|&v| rational::int(v)).collect())
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(values: &[Rational]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = v.clone();
        }
        m
    }

    /// Permutation matrix `P` with `P[perm[r], r] = 1`, so `(A P)[:, r] = A[:, perm[r]]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zeros(n, n);
        for (r, &p) in perm.iter().enumerate() {
            m.data[p * n + r] = Rational::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        RationalMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul(&self, rhs: &RationalMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        RationalMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        RationalMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Exact rank by fraction-free elimination.
    pub fn rank(&self) -> usize {
        rank_exact(self)
    }

    /// Inverse of a square matrix by Gauss-Jordan elimination, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a.get(col, col).recip();
            for j in 0..n {
                a.data[col * n + j] *= &p;
                inv.data[col * n + j] *= &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let da = &a.data[col * n + j] * &f;
                    a.data[r * n + j] -= da;
                    let di = &inv.data[col * n + j] * &f;
                    inv.data[r * n + j] -= di;
                }
            }
        }
        Some(inv)
    }

    /// Indices of a maximal set of linearly independent rows, chosen greedily top-down.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            let mut trial = chosen.clone();
            trial.push(i);
            if self.select_rows(&trial).rank() == trial.len() {
                chosen = trial;
                if chosen.len() == self.cols {
                    break;
                }
            }
        }
        chosen
    }

    pub fn to_json_rows(&self) -> Vec<Vec<JsonRational>> {
        (0..self.rows)
            .map(|i| rational::to_json_vec(self.row(i)))
            .collect()
    }

    pub fn from_json_rows(rows: Vec<Vec<JsonRational>>) -> Result<Self> {
        Self::from_rows(rows.into_iter().map(rational::from_json_vec).collect())
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(rational::format).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<JsonRational>>::deserialize(d)?;
        Self::from_json_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Linear-algebra rank over the rationals, computed exactly.
///
/// Rows are cleared of denominators (row scaling preserves rank) and then
/// reduced with Bareiss' fraction-free elimination, so every intermediate
/// is an integer minor of the input.
pub fn rank_exact(m: &RationalMatrix) -> usize {
    let rows = m.rows;
    let cols = m.cols;
    let mut a: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let row = m.row(i);
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect()
        })
        .collect();

    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        for r in rank + 1..rows {
            for j in col + 1..cols {
                let v = (&a[r][j] * &a[rank][col] - &a[r][col] * &a[rank][j]) / &prev;
                a[r][j] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Largest `t` such that every set of `t` columns is linearly independent.
///
/// Returns 0 when some column is zero (no single column is independent),
/// and 0 for a matrix without columns.
pub fn kruskal_rank(m: &RationalMatrix) -> usize {
    let cols = m.cols;
    let upper = rank_exact(m);
    // all subsets of size t independent implies the same for every smaller size
    for t in (1..=upper).rev() {
        if combinations(cols, t).all(|subset| rank_exact(&m.select_columns(&subset)) == t) {
            return t;
        }
    }
    0
}

/// Column-wise Kronecker product. Row `ia * rows(b) + ib` of column `r` is `a[ia, r] * b[ib, r]`.
pub fn khatri_rao(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.cols, b.cols
        )));
    }
    let cols = a.cols;
    let mut data = Vec::with_capacity(a.rows * b.rows * cols);
    for ia in 0..a.rows {
        for ib in 0..b.rows {
            for r in 0..cols {
                data.push(a.get(ia, r) * b.get(ib, r));
            }
        }
    }
    RationalMatrix::new(a.rows * b.rows, cols, data)
}

/// `ms[0] ⊙ ms[1] ⊙ ... ⊙ ms[k-1]`, left to right.
pub fn khatri_rao_chain(ms: &[&RationalMatrix]) -> Result<RationalMatrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::Shape("empty Khatri-Rao chain".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}

/// Lexicographic `t`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, t: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut state: Option<Vec<usize>> = if t <= n { Some((0..t).collect()) } else { None };
    std::iter::from_fn(move || {
        let current = state.take()?;
        let mut next = current.clone();
        let mut i = t;
        while i > 0 {
            i -= 1;
            if next[i] < n - t + i {
                next[i] += 1;
                for j in i + 1..t {
                    next[j] = next[j - 1] + 1;
                }
                state = Some(next);
                break;
            }
        }
        Some(current)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn m(rows: usize, cols: usize, v: &[i64]) -> RationalMatrix {
        RationalMatrix::from_ints(rows, cols, v).unwrap()
    }

    // Laplace expansion, used only as an independent determinant oracle.
    fn det_oracle(a: &RationalMatrix) -> Rational {
        let n = a.rows();
        if n == 0 {
            return Rational::one();
        }
        let mut total = Rational::zero();
        for j in 0..n {
            let minor_cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let minor = a.select_rows(&(1..n).collect::<Vec<_>>()).select_columns(&minor_cols);
            let term = a.get(0, j) * det_oracle(&minor);
            if j % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    // Rank as the largest size of a non-vanishing minor.
    fn rank_oracle(a: &RationalMatrix) -> usize {
        let k = a.rows().min(a.cols());
        for t in (1..=k).rev() {
            for rs in combinations(a.rows(), t) {
                for cs in combinations(a.cols(), t) {
                    if !det_oracle(&a.select_rows(&rs).select_columns(&cs)).is_zero() {
                        return t;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_exact(&RationalMatrix::identity(3)), 3);
        assert_eq!(rank_exact(&m(3, 2, &[1, -1, 2, -2, -1, 1])), 1);
        assert_eq!(rank_exact(&RationalMatrix::zeros(2, 3)), 0);
        assert_eq!(rank_exact(&m(2, 3, &[0, 0, 1, 0, 0, 2])), 1);
        assert_eq!(rank_exact(&m(3, 3, &[0, 1, 2, 0, 2, 4, 1, 0, 0])), 2);
        let mixed = RationalMatrix::new(
            2,
            2,
            vec![ratio(1, 2), ratio(1, 3), ratio(3, 2), int(1)],
        )
        .unwrap();
        assert_eq!(rank_exact(&mixed), 1);
    }

    #[test]
    fn random_5x3_rank_matches_minor_oracle() {
        // fixed instance, then a rank-2 variant with column 2 = col0 - 3 col1 / 2
        let a = RationalMatrix::new(
            5,
            3,
            [
                (1, 2), (3, 1), (-2, 5),
                (0, 1), (7, 3), (1, 1),
                (-4, 1), (1, 6), (2, 1),
                (5, 7), (0, 1), (-1, 2),
                (2, 1), (-3, 4), (9, 5),
            ]
            .iter()
            .map(|&(p, q)| ratio(p, q))
            .collect(),
        )
        .unwrap();
        assert_eq!(rank_oracle(&a), 3);
        assert_eq!(rank_exact(&a), 3);
        let mut b = a.clone();
        for i in 0..5 {
            let v = b.get(i, 0) - b.get(i, 1) * ratio(3, 2);
            b.set(i, 2, v);
        }
        assert_eq!(rank_oracle(&b), 2);
        assert_eq!(rank_exact(&b), 2);
    }

    #[test]
    fn kruskal_rank_examples() {
        assert_eq!(kruskal_rank(&RationalMatrix::identity(2)), 2);
        // e1, e2, e1 + e2: every pair independent, the triple is not
        assert_eq!(kruskal_rank(&m(3, 3, &[1, 0, 1, 0, 1, 1, 0, 0, 0])), 2);
        assert_eq!(kruskal_rank(&m(2, 2, &[1, 0, 1, 0])), 0);
        // repeated column: rank 2 but k-rank 1
        assert_eq!(kruskal_rank(&m(2, 3, &[1, 1, 0, 0, 0, 1])), 1);
        assert_eq!(kruskal_rank(&RationalMatrix::zeros(3, 0)), 0);
    }

    #[test]
    fn kruskal_rank_equals_rank_for_all_sign_3x2() {
        for bits in 0u32..64 {
            let v: Vec<i64> = (0..6).map(|k| if bits >> k & 1 == 1 { 1 } else { -1 }).collect();
            let a = m(3, 2, &v);
            let (r, k) = (rank_exact(&a), kruskal_rank(&a));
            assert!(k <= r);
            if r == 2 {
                assert_eq!(k, r);
            }
        }
    }

    #[test]
    fn khatri_rao_examples() {
        let a = m(2, 1, &[1, 1]);
        let b = m(2, 1, &[1, -1]);
        assert_eq!(khatri_rao(&a, &b).unwrap(), m(4, 1, &[1, -1, 1, -1]));
        assert!(khatri_rao(&a, &m(2, 2, &[1, 0, 0, 1])).is_err());

        // full-rank 3x2 factors: k-rank of the product reaches min(k_a + k_b - 1, 2)
        let x = m(3, 2, &[1, 1, 1, -1, -1, 1]);
        let y = m(3, 2, &[1, -1, -1, -1, 1, 1]);
        let kr = khatri_rao(&x, &y).unwrap();
        let bound = (kruskal_rank(&x) + kruskal_rank(&y) - 1).min(2);
        assert!(kruskal_rank(&kr) >= bound);
        assert_eq!(bound, 2);
    }

    #[test]
    fn khatri_rao_matches_columnwise_kronecker() {
        let a = RationalMatrix::new(
            3,
            2,
            [(1, 2), (-1, 3), (2, 1), (0, 1), (5, 4), (-3, 7)]
                .iter()
                .map(|&(p, q)| ratio(p, q))
                .collect(),
        )
        .unwrap();
        let b = RationalMatrix::new(
            3,
            2,
            [(3, 1), (1, 5), (-2, 3), (4, 1), (1, 1), (-1, 2)]
                .iter()
                .map(|&(p, q)| ratio(p, q))
                .collect(),
        )
        .unwrap();
        let kr = khatri_rao(&a, &b).unwrap();
        for r in 0..2 {
            let ca = a.column(r);
            let cb = b.column(r);
            let kron: Vec<Rational> = ca
                .iter()
                .flat_map(|x| cb.iter().map(move |y| x * y))
                .collect();
            assert_eq!(kr.column(r), kron);
        }
    }

    #[test]
    fn inverse_and_permutation() {
        let a = m(2, 2, &[2, 1, 1, 1]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), RationalMatrix::identity(2));
        assert!(m(2, 2, &[1, 2, 2, 4]).inverse().is_none());
        let p = RationalMatrix::permutation(&[1, 0]);
        assert_eq!(a.mul(&p).unwrap(), m(2, 2, &[1, 2, 1, 1]));
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let all: Vec<Vec<usize>> = combinations(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(combinations(3, 0).count(), 1);
        assert_eq!(combinations(2, 3).count(), 0);
    }

    proptest! {
        #[test]
        fn rank_matches_minor_oracle(
            rows in 1usize..5, cols in 1usize..5,
            vals in prop::collection::vec(-2i64..3, 16),
            dens in prop::collection::vec(1i64..4, 16),
        ) {
            let data = (0..rows * cols).map(|k| ratio(vals[k], dens[k])).collect();
            let a = RationalMatrix::new(rows, cols, data).unwrap();
            prop_assert_eq!(rank_exact(&a), rank_oracle(&a));
            prop_assert!(kruskal_rank(&a) <= rank_exact(&a));
        }
    }
}
