//! Closed forms and finite-n bounds tied to the model.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numeric::Budget;
use crate::rational::{self, int, Rational};
use crate::typicality::ModeSpace;

/// Ratios `y / x` with `x, y` nonzero symbols of the alphabet.
fn ratio_set(m: &ModelSpec, mode: usize) -> BTreeSet<Rational> {
    let nonzero: Vec<&Rational> = m.alphabet(mode).symbols().iter().filter(|s| !s.is_zero()).collect();
    nonzero
        .iter()
        .flat_map(|x| nonzero.iter().map(move |y| *y / *x))
        .collect()
}

/// Upper bound on the number of full-rank tuples in one essential-uniqueness class.
///
/// Order `N >= 3`: `R! * c^R` where `c` counts `(λ_1, ..., λ_N)` with each `λ_i` a
/// ratio of two nonzero symbols of alphabet `i` and `prod λ_i = 1`. A column
/// scaling that keeps a nonzero column inside the alphabet must be such a ratio.
///
/// Order 2: `min_i |X_i|^(R^2)`, since `W` is fixed by `R` independent rows of
/// `X_1` and their images in `X_1'`.
pub fn gamma_bound(m: &ModelSpec) -> Result<BigUint> {
    let r = m.components();
    match m.order() {
        1 => Err(Error::Unsupported("order-one tensors are their own factor".into())),
        2 => Ok((0..2)
            .map(|i| BigUint::from(m.alphabet(i).len()).pow((r * r) as u32))
            .min()
            .expect("two modes")),
        order => {
            // products reachable by the first i modes, with multiplicity
            let mut reach: HashMap<Rational, BigUint> = HashMap::from([(int(1), BigUint::one())]);
            for i in 0..order {
                let ratios = ratio_set(m, i);
                let mut next: HashMap<Rational, BigUint> = HashMap::new();
                for (p, c) in &reach {
                    for l in &ratios {
                        *next.entry(p * l).or_default() += c;
                    }
                }
                reach = next;
            }
            let per_column = reach.remove(&int(1)).unwrap_or_default();
            let perms: BigUint = (1..=r).map(BigUint::from).product();
            Ok(perms * per_column.pow(r as u32))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FullRankBound {
    /// Largest symbol probability over the columns of each mode.
    #[serde(serialize_with = "ser_rationals")]
    pub rho_per_mode: Vec<Rational>,
    /// `sum_{r < R} rho^(n - r)`, exactly.
    #[serde(serialize_with = "ser_rationals")]
    pub zeta_exact: Vec<Rational>,
    pub zeta_per_mode: Vec<f64>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational::format))
}

/// `Pr{rank X_i < R} <= zeta_i` per mode.
pub fn full_rank_prob_bound(m: &ModelSpec) -> Result<FullRankBound> {
    let (n, r) = (m.dim(), m.components());
    if r > n {
        return Err(Error::InvalidParameter(format!("R = {r} exceeds n = {n}: no factor matrix is full rank")));
    }
    let mut rho_per_mode = Vec::with_capacity(m.order());
    let mut zeta_exact = Vec::with_capacity(m.order());
    for i in 0..m.order() {
        let rho = (0..r)
            .map(|c| m.dist(i, c).max_prob().clone())
            .max()
            .expect("at least one column");
        if rho >= int(1) {
            return Err(Error::InvalidParameter(format!("mode {i} has a point-mass column")));
        }
        let zeta: Rational = (0..r).map(|k| Pow::pow(&rho, (n - k) as u32)).sum();
        rho_per_mode.push(rho);
        zeta_exact.push(zeta);
    }
    let zeta_per_mode = zeta_exact.iter().map(rational::to_f64).collect();
    Ok(FullRankBound {
        rho_per_mode,
        zeta_exact,
        zeta_per_mode,
    })
}

/// Exact `Pr{rank X_mode < R}` over every realization of the factor matrix.
pub fn exact_rank_deficiency_prob(m: &ModelSpec, mode: usize, budget: Budget) -> Result<Rational> {
    m.check_mode(mode)?;
    let space = ModeSpace::new(m, m.source_mode(mode), budget)?;
    let r = m.components();
    let weight: BigUint = (0..space.matrix_count())
        .into_par_iter()
        .filter(|&idx| space.matrix(idx).rank() < r)
        .map(|idx| space.weight(idx))
        .reduce(BigUint::zero, |a, b| a + b);
    Ok(Rational::new(weight.into(), space.denominator().clone().into()))
}

fn is_sign_alphabet(m: &ModelSpec, mode: usize) -> bool {
    let a = m.alphabet(mode);
    a.len() == 2 && a.index_of(&int(1)).is_some() && a.index_of(&int(-1)).is_some()
}

/// `sum_a P(a) Q(s a)` over `{-1, 1}`.
fn agreement(m: &ModelSpec, mode: usize, p: usize, q: usize, s: i64) -> Rational {
    let a = m.alphabet(mode);
    [-1i64, 1]
        .iter()
        .map(|&v| {
            let x = a.index_of(&int(v)).expect("sign alphabet");
            let y = a.index_of(&int(s * v)).expect("sign alphabet");
            m.dist(mode, p).prob(x) * m.dist(mode, q).prob(y)
        })
        .sum()
}

/// Closed-form `Pr{T = 0}` for the two worked sign-alphabet examples.
///
/// Supersymmetric order 3 with two columns: `[sum_a P(a) Q(-a)]^n`.
/// Order 2 with two columns `[x, u]`, `[y, v]`:
/// `[sum P_X P_U(x)]^n [sum P_Y P_V(-y)]^n + [sum P_X P_U(-x)]^n [sum P_Y P_V(y)]^n`.
pub fn prob_zero_tensor(m: &ModelSpec) -> Result<Rational> {
    let n = m.dim() as u32;
    let signs = (0..m.order()).all(|i| is_sign_alphabet(m, i));
    match (m.order(), m.components(), m.is_supersymmetric(), signs) {
        (3, 2, true, true) => Ok(Pow::pow(agreement(m, 0, 0, 1, -1), n)),
        (2, 2, false, true) => {
            let same = Pow::pow(agreement(m, 0, 0, 1, 1), n) * Pow::pow(agreement(m, 1, 0, 1, -1), n);
            let flip = Pow::pow(agreement(m, 0, 0, 1, -1), n) * Pow::pow(agreement(m, 1, 0, 1, 1), n);
            Ok(same + flip)
        }
        _ => Err(Error::Unsupported(
            "closed form known only for the supersymmetric order-3 and the order-2 two-column sign models".into(),
        )),
    }
}
