//! Typical factor matrices: tests, exhaustive enumeration and exact masses.
//!
//! The deviation `-ln P(X) - n * sum_r H_r` is evaluated per column as
//! `sum_g (n * p_g * |g| - c_g) * ln p_g`, where `g` ranges over groups of
//! symbols sharing one probability and `c_g` counts their occurrences. The
//! coefficients are exact rationals, so uniform columns give exactly zero.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Alphabet, Distribution, ModelSpec};
use crate::numeric::{Budget, CompensatedSum};
use crate::rational::{self, Rational};
use crate::sampling::{trial_rng, ModelSampler};
use crate::tensor::FactorMatrix;

/// Relative width inside which a typicality decision is refused.
pub const AMBIGUITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypicalityParams {
    gamma: Rational,
}

impl TypicalityParams {
    pub fn new(gamma: Rational) -> Result<Self> {
        if gamma <= Rational::zero() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                rational::format(&gamma)
            )));
        }
        Ok(TypicalityParams { gamma })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(rational::parse(s)?)
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn gamma_f64(&self) -> f64 {
        rational::to_f64(&self.gamma)
    }
}

struct Group {
    prob: Rational,
    ln: f64,
    members: Vec<u16>,
}

/// Deviation of one column from `n * H`, from its symbol counts.
struct ColumnScore {
    dim: usize,
    groups: Vec<Group>,
}

impl ColumnScore {
    fn new(d: &Distribution, dim: usize) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        for (s, p) in d.probs().iter().enumerate() {
            match groups.iter_mut().find(|g| g.prob == *p) {
                Some(g) => g.members.push(s as u16),
                None => groups.push(Group {
                    prob: p.clone(),
                    ln: rational::ln(p),
                    members: vec![s as u16],
                }),
            }
        }
        ColumnScore { dim, groups }
    }

    fn deviation(&self, counts: &[u32]) -> f64 {
        let n = Rational::from_integer(self.dim.into());
        let mut acc = CompensatedSum::default();
        for g in &self.groups {
            let c: u32 = g.members.iter().map(|&s| counts[s as usize]).sum();
            if g.prob.is_zero() {
                if c > 0 {
                    return f64::INFINITY;
                }
                continue;
            }
            let coef = &n * &g.prob * Rational::from_integer(g.members.len().into())
                - Rational::from_integer(c.into());
            if !coef.is_zero() {
                acc.add(rational::to_f64(&coef) * g.ln);
            }
        }
        acc.value()
    }
}

fn column_counts(symbols: &[u16], k: usize) -> Vec<u32> {
    let mut counts = vec![0u32; k];
    for &s in symbols {
        counts[s as usize] += 1;
    }
    counts
}

fn check_matrix(x: &FactorMatrix, m: &ModelSpec) -> Result<()> {
    m.check_mode(x.mode())?;
    if x.rows() != m.dim() || x.cols() != m.components() {
        return Err(Error::Shape(format!(
            "factor matrix is {}x{}, model needs {}x{}",
            x.rows(),
            x.cols(),
            m.dim(),
            m.components()
        )));
    }
    if x.alphabet() != m.alphabet(x.mode()) {
        return Err(Error::Shape(format!(
            "mode {} matrix uses a different alphabet",
            x.mode()
        )));
    }
    Ok(())
}

/// `ln P(X) = sum_r sum_j ln P_r(X[j, r])`; `-inf` when some entry has probability zero.
pub fn log_prob_matrix(x: &FactorMatrix, m: &ModelSpec) -> Result<f64> {
    check_matrix(x, m)?;
    let mut acc = CompensatedSum::default();
    for r in 0..x.cols() {
        let d = m.dist(x.mode(), r);
        for j in 0..x.rows() {
            let p = d.prob(x.symbol_at(j, r));
            if p.is_zero() {
                return Ok(f64::NEG_INFINITY);
            }
            acc.add(rational::ln(p));
        }
    }
    Ok(acc.value())
}

/// `-ln P(X) - n * sum_r H(P_r)` for one matrix.
pub fn deviation(x: &FactorMatrix, m: &ModelSpec) -> Result<f64> {
    check_matrix(x, m)?;
    let k = x.alphabet().len();
    let mut acc = CompensatedSum::default();
    for r in 0..x.cols() {
        let score = ColumnScore::new(m.dist(x.mode(), r), m.dim());
        let d = score.deviation(&column_counts(&x.symbols()[r * x.rows()..(r + 1) * x.rows()], k));
        if d.is_infinite() {
            return Ok(d);
        }
        acc.add(d);
    }
    Ok(acc.value())
}

/// Strict `|deviation| < n * gamma`, refusing margins inside the ambiguity tolerance.
pub fn classify(deviation: f64, n_gamma: f64) -> Result<bool> {
    if deviation.is_infinite() {
        return Ok(false);
    }
    let margin = n_gamma - deviation.abs();
    if margin.abs() <= AMBIGUITY_TOLERANCE * n_gamma.max(1.0) {
        return Err(Error::AmbiguousTypicality { margin });
    }
    Ok(margin > 0.0)
}

pub fn is_typical_matrix(x: &FactorMatrix, m: &ModelSpec, p: &TypicalityParams) -> Result<bool> {
    classify(deviation(x, m)?, n_gamma(m, p))
}

fn n_gamma(m: &ModelSpec, p: &TypicalityParams) -> f64 {
    m.dim() as f64 * p.gamma_f64()
}

/// All `|X|^(nR)` matrices of one mode, indexed lexicographically over the
/// column-major symbol vector (first entry most significant).
pub struct ModeSpace {
    mode: usize,
    dim: usize,
    comps: usize,
    alphabet: Alphabet,
    /// `|X|^n`
    column_count: u64,
    matrix_count: u64,
    /// per column `r`, per column vector: deviation contribution
    deviations: Vec<Vec<f64>>,
    /// per column `r`, per column vector: `prod_j P_r(v_j) * D^n`
    weights: Vec<Vec<BigUint>>,
    /// `D^(nR)` with `D` the common denominator of the mode's distributions
    denominator: BigUint,
}

impl ModeSpace {
    pub fn new(m: &ModelSpec, mode: usize, budget: Budget) -> Result<Self> {
        m.check_mode(mode)?;
        let matrix_count = budget.check("matrix enumeration", &m.matrix_space(mode))?;
        let (n, r) = (m.dim(), m.components());
        let alphabet = m.alphabet(mode).clone();
        let k = alphabet.len();
        let column_count = (k as u64).pow(n as u32);
        let common = (0..r).fold(num_bigint::BigInt::one(), |acc, c| {
            m.dist(mode, c)
                .probs()
                .iter()
                .fold(acc, |a, p| num_integer::Integer::lcm(&a, p.denom()))
        });
        let common = common.to_biguint().expect("positive denominators");
        let mut deviations = Vec::with_capacity(r);
        let mut weights = Vec::with_capacity(r);
        let mut digits = vec![0u16; n];
        for c in 0..r {
            let d = m.dist(mode, c);
            let score = ColumnScore::new(d, n);
            let scaled: Vec<BigUint> = d
                .probs()
                .iter()
                .map(|p| {
                    (p * Rational::from_integer(common.clone().into()))
                        .to_integer()
                        .to_biguint()
                        .expect("non-negative")
                })
                .collect();
            let mut devs = Vec::with_capacity(column_count as usize);
            let mut ws = Vec::with_capacity(column_count as usize);
            for v in 0..column_count {
                decode_digits(v, k, &mut digits);
                devs.push(score.deviation(&column_counts(&digits, k)));
                ws.push(digits.iter().map(|&s| &scaled[s as usize]).product());
            }
            deviations.push(devs);
            weights.push(ws);
        }
        Ok(ModeSpace {
            mode,
            dim: n,
            comps: r,
            alphabet,
            column_count,
            matrix_count,
            deviations,
            weights,
            denominator: common.pow((n * r) as u32),
        })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn matrix_count(&self) -> u64 {
        self.matrix_count
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    fn column_indices(&self, index: u64) -> impl Iterator<Item = u64> + '_ {
        (0..self.comps).map(move |c| {
            let shift = self.column_count.pow((self.comps - 1 - c) as u32);
            index / shift % self.column_count
        })
    }

    /// Column-major symbol vector of matrix `index`.
    pub fn symbols(&self, index: u64) -> Vec<u16> {
        let mut out = vec![0u16; self.dim * self.comps];
        decode_digits(index, self.alphabet.len(), &mut out);
        out
    }

    pub fn matrix(&self, index: u64) -> FactorMatrix {
        FactorMatrix::from_symbols(
            self.mode,
            self.alphabet.clone(),
            self.dim,
            self.comps,
            self.symbols(index),
        )
        .expect("index inside the space")
    }

    pub fn deviation(&self, index: u64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (c, v) in self.column_indices(index).enumerate() {
            let d = self.deviations[c][v as usize];
            if d.is_infinite() {
                return d;
            }
            acc.add(d);
        }
        acc.value()
    }

    /// `P(X) * denominator`.
    pub fn weight(&self, index: u64) -> BigUint {
        self.column_indices(index)
            .enumerate()
            .map(|(c, v)| &self.weights[c][v as usize])
            .product()
    }

    pub fn prob(&self, index: u64) -> Rational {
        Rational::new(self.weight(index).into(), self.denominator.clone().into())
    }
}

fn decode_digits(mut v: u64, k: usize, out: &mut [u16]) {
    for slot in out.iter_mut().rev() {
        *slot = (v % k as u64) as u16;
        v /= k as u64;
    }
}

/// The typical matrices of one mode in canonical order.
#[derive(Clone, Debug)]
pub struct TypicalEnumeration {
    mode: usize,
    dim: usize,
    comps: usize,
    alphabet: Alphabet,
    /// positions in the mode's full matrix space, increasing
    indices: Vec<u64>,
    log_cardinality: f64,
}

impl TypicalEnumeration {
    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `ln` of the number of typical matrices (`-inf` when empty).
    pub fn log_cardinality(&self) -> f64 {
        self.log_cardinality
    }

    pub fn space_indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn symbols(&self, k: usize) -> Vec<u16> {
        let mut out = vec![0u16; self.dim * self.comps];
        decode_digits(self.indices[k], self.alphabet.len(), &mut out);
        out
    }

    pub fn matrix(&self, k: usize) -> FactorMatrix {
        FactorMatrix::from_symbols(
            self.mode,
            self.alphabet.clone(),
            self.dim,
            self.comps,
            self.symbols(k),
        )
        .expect("typical matrix inside the space")
    }

    pub fn iter(&self) -> impl Iterator<Item = FactorMatrix> + '_ {
        (0..self.len()).map(|k| self.matrix(k))
    }
}

/// Typical positions of a mode space, in increasing order.
pub(crate) fn typical_indices(space: &ModeSpace, m: &ModelSpec, p: &TypicalityParams) -> Result<Vec<u64>> {
    let ng = n_gamma(m, p);
    let flags: Vec<bool> = (0..space.matrix_count())
        .into_par_iter()
        .map(|i| classify(space.deviation(i), ng))
        .collect::<Result<_>>()?;
    Ok(flags
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| t.then_some(i as u64))
        .collect())
}

pub fn enumerate_typical(
    m: &ModelSpec,
    p: &TypicalityParams,
    mode: usize,
    budget: Budget,
) -> Result<TypicalEnumeration> {
    let space = ModeSpace::new(m, mode, budget)?;
    enumerate_in(&space, m, p)
}

pub(crate) fn enumerate_in(
    space: &ModeSpace,
    m: &ModelSpec,
    p: &TypicalityParams,
) -> Result<TypicalEnumeration> {
    let indices = typical_indices(space, m, p)?;
    let count = indices.len() as f64;
    let bound = m.dim() as f64 * (m.mode_entropy(space.mode()) + p.gamma_f64());
    assert!(
        count.ln() <= bound + 1e-9,
        "typical set larger than exp(n(H + gamma)): {count} > e^{bound}"
    );
    Ok(TypicalEnumeration {
        mode: space.mode(),
        dim: m.dim(),
        comps: m.components(),
        alphabet: m.alphabet(space.mode()).clone(),
        log_cardinality: count.ln(),
        indices,
    })
}

/// Exact probability of the mode's typical set.
pub fn typicality_mass(m: &ModelSpec, p: &TypicalityParams, mode: usize, budget: Budget) -> Result<Rational> {
    let space = ModeSpace::new(m, mode, budget)?;
    let e = enumerate_in(&space, m, p)?;
    Ok(mass_of(&space, e.space_indices()))
}

pub(crate) fn mass_of(space: &ModeSpace, indices: &[u64]) -> Rational {
    let total: BigUint = indices
        .par_iter()
        .map(|&i| space.weight(i))
        .reduce(BigUint::zero, |a, b| a + b);
    Rational::new(total.into(), space.denominator().clone().into())
}

/// `-(1/n) * sum_i ln P(X_i)` over the free matrices for `trials` seeded draws.
pub fn spectrum_samples(m: &ModelSpec, trials: u64, seed: u64) -> Vec<f64> {
    let sampler = ModelSampler::new(m);
    let threshold = crate::model::theoretical_threshold(m);
    let scores: Vec<Vec<ColumnScore>> = (0..m.free_modes())
        .map(|f| {
            (0..m.components())
                .map(|r| ColumnScore::new(m.dist(f, r), m.dim()))
                .collect()
        })
        .collect();
    let n = m.dim();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let free = sampler.sample_free(&mut trial_rng(seed, t));
            let mut dev = CompensatedSum::default();
            for (f, syms) in free.iter().enumerate() {
                let k = m.alphabet(f).len();
                for (r, score) in scores[f].iter().enumerate() {
                    dev.add(score.deviation(&column_counts(&syms[r * n..(r + 1) * n], k)));
                }
            }
            threshold + dev.value() / n as f64
        })
        .collect()
}

/// Mean and sample variance with the standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

pub fn summarize(samples: &[f64]) -> SampleSummary {
    let count = samples.len();
    let mut s = CompensatedSum::default();
    samples.iter().for_each(|&x| s.add(x));
    let mean = s.value() / count as f64;
    let mut q = CompensatedSum::default();
    samples.iter().for_each(|&x| q.add((x - mean) * (x - mean)));
    let variance = if count > 1 { q.value() / (count - 1) as f64 } else { 0.0 };
    SampleSummary {
        count,
        mean,
        variance,
        stderr: (variance / count as f64).sqrt(),
    }
}
