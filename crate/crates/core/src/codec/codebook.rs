use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::codeword::{Codeword, CodewordHeader, Flag};
use crate::error::{CodewordError, Error, Result};
use crate::model::{theoretical_threshold, ModelSpec};
use crate::numeric::Budget;
use crate::rational::Rational;
use crate::tensor::{Composer, ExactTensor, FactorTuple, TensorKey};
use crate::typicality::{self, ModeSpace, TypicalEnumeration, TypicalityParams};

/// Visits every tuple whose leading free-mode digit is `lead`, in increasing
/// mixed-radix order (free mode 0 most significant).
fn walk_block<S, F>(composer: &Composer, radices: &[u64], symbols: S, lead: u64, mut visit: F)
where
    S: Fn(usize, u64) -> Vec<u16>,
    F: FnMut(&[u64], TensorKey),
{
    let modes = radices.len();
    if radices.iter().any(|&r| r == 0) {
        return;
    }
    let mut digits = vec![0u64; modes];
    digits[0] = lead;
    let mut p = composer.prefix();
    for (f, &d) in digits.iter().enumerate() {
        p.set(f, &symbols(f, d));
    }
    loop {
        visit(&digits, p.key());
        // odometer over modes 1..
        let mut f = modes;
        loop {
            f -= 1;
            if f == 0 {
                return;
            }
            digits[f] += 1;
            if digits[f] < radices[f] {
                p.set(f, &symbols(f, digits[f]));
                break;
            }
            digits[f] = 0;
            p.set(f, &symbols(f, 0));
        }
    }
}

fn mixed_radix(digits: &[u64], radices: &[u64]) -> u64 {
    digits.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// Indexes the composable typical tensors of one model at one `gamma`.
///
/// Tuple index `k` is the mixed-radix number whose digits are positions in
/// each free mode's typical enumeration, free mode 0 most significant. Each
/// distinct tensor is assigned the smallest index among its generating tuples;
/// index `#tuples` is the fallback slot.
pub struct Codebook {
    model: ModelSpec,
    params: TypicalityParams,
    header: CodewordHeader,
    composer: Composer,
    typical: Vec<TypicalEnumeration>,
    radices: Vec<u64>,
    tuple_count: u64,
    map: HashMap<TensorKey, u64>,
    fallback: ExactTensor,
    fallback_key: TensorKey,
}

impl Codebook {
    pub fn build(m: &ModelSpec, p: &TypicalityParams, budget: Budget) -> Result<Self> {
        let header = CodewordHeader::new(m, p)?;
        let typical = (0..m.free_modes())
            .map(|f| typicality::enumerate_typical(m, p, f, budget))
            .collect::<Result<Vec<_>>>()?;
        let radices: Vec<u64> = typical.iter().map(|e| e.len() as u64).collect();
        let total: BigUint = radices.iter().map(|&r| BigUint::from(r)).product();
        let tuple_count = budget.check("typical tuple enumeration", &total)?;
        let composer = Composer::new(m);

        let symbols = |f: usize, d: u64| typical[f].symbols(d as usize);
        let lead = radices.first().copied().unwrap_or(0);
        let map = (0..lead)
            .into_par_iter()
            .fold(HashMap::new, |mut acc: HashMap<TensorKey, u64>, l| {
                walk_block(&composer, &radices, symbols, l, |digits, key| {
                    // blocks walk in increasing order, so the first index seen is the smallest
                    acc.entry(key).or_insert_with(|| mixed_radix(digits, &radices));
                });
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    a.entry(k)
                        .and_modify(|old| *old = (*old).min(v))
                        .or_insert(v);
                }
                a
            });

        let fallback = if tuple_count > 0 {
            let free: Vec<Vec<u16>> = (0..typical.len()).map(|f| typical[f].symbols(0)).collect();
            let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
            composer.tensor(&refs)
        } else {
            ExactTensor::zeros(m.order(), m.dim())
        };
        let fallback_key = composer.key_of(&fallback).expect("fallback lies in the model lattice");

        Ok(Codebook {
            model: m.clone(),
            params: p.clone(),
            header,
            composer,
            typical,
            radices,
            tuple_count,
            map,
            fallback,
            fallback_key,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn params(&self) -> &TypicalityParams {
        &self.params
    }

    pub fn header(&self) -> &CodewordHeader {
        &self.header
    }

    pub fn typical(&self) -> &[TypicalEnumeration] {
        &self.typical
    }

    /// Number of typical tuples.
    pub fn tuple_count(&self) -> u64 {
        self.tuple_count
    }

    /// `|M|`: typical tuples plus the fallback slot.
    pub fn size(&self) -> u64 {
        self.tuple_count + 1
    }

    pub fn log_size(&self) -> f64 {
        (self.size() as f64).ln()
    }

    pub fn fallback_index(&self) -> u64 {
        self.tuple_count
    }

    pub fn fallback(&self) -> &ExactTensor {
        &self.fallback
    }

    /// Number of distinct tensors in the image of the typical tuples.
    pub fn distinct_tensors(&self) -> usize {
        self.map.len()
    }

    /// Canonical indices of the distinct image tensors, ascending.
    pub fn canonical_indices(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.map.values().copied().collect();
        v.sort_unstable();
        v
    }

    fn digits(&self, mut index: u64) -> Vec<u64> {
        let mut d = vec![0u64; self.radices.len()];
        for (slot, &r) in d.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        d
    }

    fn free_symbols(&self, index: u64) -> Result<Vec<Vec<u16>>> {
        if index >= self.tuple_count {
            return Err(CodewordError::IndexOutOfRange {
                index: index.to_string(),
                size: self.size(),
            }
            .into());
        }
        Ok(self
            .digits(index)
            .iter()
            .enumerate()
            .map(|(f, &d)| self.typical[f].symbols(d as usize))
            .collect())
    }

    /// The typical tuple at `index`.
    pub fn tuple(&self, index: u64) -> Result<FactorTuple> {
        let free = self.free_symbols(index)?;
        let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
        Ok(FactorTuple::from_free_symbols(&self.model, &refs))
    }

    /// Tensor that index `index` decodes to.
    pub fn tensor_at(&self, index: u64) -> Result<ExactTensor> {
        if index == self.tuple_count {
            return Ok(self.fallback.clone());
        }
        let free = self.free_symbols(index)?;
        let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
        Ok(self.composer.tensor(&refs))
    }

    pub fn encode(&self, t: &ExactTensor) -> Result<Codeword> {
        if t.order() != self.model.order() || t.dim() != self.model.dim() {
            return Err(Error::Shape(format!(
                "tensor has order {} and dim {}, codebook expects {} and {}",
                t.order(),
                t.dim(),
                self.model.order(),
                self.model.dim()
            )));
        }
        let hit = self.composer.key_of(t).and_then(|k| self.map.get(&k).copied());
        let (flag, index) = match hit {
            Some(i) => (Flag::Typical, i),
            None => (Flag::Fallback, self.fallback_index()),
        };
        Ok(Codeword {
            header: self.header.clone(),
            flag,
            index,
        })
    }

    pub fn decode(&self, c: &Codeword) -> Result<ExactTensor> {
        if let Some(field) = c.header.mismatch(&self.header) {
            return Err(CodewordError::HeaderMismatch(field).into());
        }
        if c.index > self.fallback_index() {
            return Err(CodewordError::IndexOutOfRange {
                index: c.index.to_string(),
                size: self.size(),
            }
            .into());
        }
        let is_fallback = c.index == self.fallback_index();
        if is_fallback != (c.flag == Flag::Fallback) {
            return Err(CodewordError::FlagMismatch(c.index).into());
        }
        self.tensor_at(c.index)
    }

    pub fn decode_bytes(&self, bytes: &[u8]) -> Result<ExactTensor> {
        self.decode(&Codeword::from_bytes(bytes)?)
    }

    /// Exact error probability and typical-set masses, by walking the full tuple space.
    pub fn measure(&self, budget: Budget) -> Result<SchemeReport> {
        let m = &self.model;
        budget.check("full tuple space", &m.tuple_space())?;
        let spaces = (0..m.free_modes())
            .map(|f| ModeSpace::new(m, f, budget))
            .collect::<Result<Vec<_>>>()?;
        let radices: Vec<u64> = spaces.iter().map(ModeSpace::matrix_count).collect();
        let symbols = |f: usize, i: u64| spaces[f].symbols(i);
        let wrong: BigUint = (0..radices[0])
            .into_par_iter()
            .map(|l| {
                let mut acc = BigUint::zero();
                walk_block(&self.composer, &radices, symbols, l, |digits, key| {
                    if key != self.fallback_key && !self.map.contains_key(&key) {
                        acc += digits
                            .iter()
                            .enumerate()
                            .map(|(f, &d)| spaces[f].weight(d))
                            .product::<BigUint>();
                    }
                });
                acc
            })
            .reduce(BigUint::zero, |a, b| a + b);
        let denom: BigUint = spaces.iter().map(|s| s.denominator().clone()).product();
        let error = Rational::new(wrong.into(), denom.into());

        let masses: Vec<Rational> = spaces
            .iter()
            .zip(&self.typical)
            .map(|(s, e)| typicality::mass_of(s, e.space_indices()))
            .collect();
        let covered: Rational = masses.iter().fold(Rational::one(), |a, b| a * b);
        let n = m.dim() as f64;
        let log_m = self.log_size();
        let threshold = theoretical_threshold(m);
        let slack = (m.free_modes() * m.components()) as f64 * self.params.gamma_f64();
        Ok(SchemeReport {
            codebook_size: self.size(),
            typical_tuples: self.tuple_count,
            distinct_tensors: self.distinct_tensors() as u64,
            log_m_nats: log_m,
            threshold_per_n: log_m / n,
            entropy_threshold: threshold,
            nats_bound: n * (threshold + slack) + std::f64::consts::LN_2,
            exact_error_prob: error,
            error_bound: Rational::one() - covered,
            typicality_masses: masses,
        })
    }
}

/// Size and exact error of a built codebook.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeReport {
    pub codebook_size: u64,
    pub typical_tuples: u64,
    pub distinct_tensors: u64,
    /// `ln |M|`
    pub log_m_nats: f64,
    /// `ln |M| / n`
    pub threshold_per_n: f64,
    /// `sum_{i,r} H(P_{i,r})` over the free modes
    pub entropy_threshold: f64,
    /// `n (sum H + N R gamma) + ln 2`
    pub nats_bound: f64,
    pub exact_error_prob: Rational,
    /// `1 - prod_i mass_i`
    pub error_bound: Rational,
    pub typicality_masses: Vec<Rational>,
}

pub fn build_codebook(m: &ModelSpec, p: &TypicalityParams, budget: Budget) -> Result<Codebook> {
    Codebook::build(m, p, budget)
}

pub fn measure_scheme(m: &ModelSpec, p: &TypicalityParams, budget: Budget) -> Result<SchemeReport> {
    Codebook::build(m, p, budget)?.measure(budget)
}
