//! Seeded sampling of factor tuples.
//!
//! Generator: ChaCha20 (`rand_chacha`), seeded with `seed_from_u64(master)`;
//! trial `t` uses stream `t` of that key, so trial sets are reproducible in any
//! execution order. Symbols come from exact cumulative-rational inversion of one
//! `next_u64()` draw; the sub-unit slices straddling a non-integer boundary
//! `C_k * 2^64` are rejected and redrawn.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::model::{Distribution, ModelSpec};
use crate::rational::Rational;
use crate::tensor::FactorTuple;

/// Generator for trial `trial` under `master`.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Samples symbol indices of one distribution from 64-bit uniform draws.
#[derive(Clone, Debug)]
pub struct SymbolSampler {
    /// accept symbol `k` for `lo[k] <= u < hi[k]`
    lo: Vec<u128>,
    hi: Vec<u128>,
}

impl SymbolSampler {
    pub fn new(d: &Distribution) -> Self {
        let scale = Rational::from_integer(BigInt::from(1u128 << 64));
        let mut cum = Rational::from_integer(0.into());
        let mut lo = Vec::with_capacity(d.len());
        let mut hi = Vec::with_capacity(d.len());
        let mut prev_ceil = 0u128;
        for p in d.probs() {
            cum += p;
            let b = &cum * &scale;
            let floor = b.floor().to_integer().to_u128().expect("boundary within 2^64");
            let ceil = b.ceil().to_integer().to_u128().expect("boundary within 2^64");
            lo.push(prev_ceil);
            hi.push(floor);
            prev_ceil = ceil;
        }
        SymbolSampler { lo, hi }
    }

    /// Accepted slice length of each symbol out of `2^64`.
    pub fn weights(&self) -> Vec<u128> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h.saturating_sub(l))
            .collect()
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> u16 {
        loop {
            let u = u128::from(rng.next_u64());
            let k = self.hi.partition_point(|&h| h <= u);
            if k < self.hi.len() && u >= self.lo[k] {
                return k as u16;
            }
        }
    }
}

/// Per-free-mode, per-column symbol samplers for one model.
#[derive(Clone, Debug)]
pub struct ModelSampler {
    model: ModelSpec,
    columns: Vec<Vec<SymbolSampler>>,
}

impl ModelSampler {
    pub fn new(m: &ModelSpec) -> Self {
        let columns = (0..m.free_modes())
            .map(|f| {
                (0..m.components())
                    .map(|r| SymbolSampler::new(m.dist(f, r)))
                    .collect()
            })
            .collect();
        ModelSampler {
            model: m.clone(),
            columns,
        }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// Column-major symbols of each free matrix, drawn mode by mode, column by column, row by row.
    pub fn sample_free(&self, rng: &mut impl RngCore) -> Vec<Vec<u16>> {
        let n = self.model.dim();
        self.columns
            .iter()
            .map(|cols| {
                let mut syms = Vec::with_capacity(n * cols.len());
                for s in cols {
                    for _ in 0..n {
                        syms.push(s.sample(rng));
                    }
                }
                syms
            })
            .collect()
    }

    pub fn sample_tuple(&self, rng: &mut impl RngCore) -> FactorTuple {
        let free = self.sample_free(rng);
        let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
        FactorTuple::from_free_symbols(&self.model, &refs)
    }
}

pub fn sample_tuple(m: &ModelSpec, rng: &mut impl RngCore) -> FactorTuple {
    ModelSampler::new(m).sample_tuple(rng)
}

/// Monte-Carlo proportion with a 95% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl ProportionEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "proportion needs at least one trial");
        let nt = trials as f64;
        let p = successes as f64 / nt;
        let z = 1.959_963_984_540_054_f64;
        let z2 = z * z;
        let denom = 1.0 + z2 / nt;
        let centre = (p + z2 / (2.0 * nt)) / denom;
        let half = z * (p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
        ProportionEstimate {
            successes,
            trials,
            estimate: p,
            stderr: (p * (1.0 - p) / nt).sqrt(),
            wilson_low: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            wilson_high: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }
}

/// Per-free-mode estimates of `Pr{rank X_i = R}`.
pub fn estimate_full_rank_prob(m: &ModelSpec, trials: u64, seed: u64) -> Vec<ProportionEstimate> {
    let sampler = ModelSampler::new(m);
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let tuple = sampler.sample_tuple(&mut trial_rng(seed, t));
            (0..m.free_modes())
                .map(|f| u64::from(tuple.matrix(f).rank() == m.components()))
                .collect::<Vec<u64>>()
        })
        .reduce(
            || vec![0; m.free_modes()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    hits.into_iter()
        .map(|h| ProportionEstimate::new(h, trials))
        .collect()
}

/// Exact sampling probability of each symbol, `weight / 2^64` renormalised over accepted slices.
pub fn effective_probs(s: &SymbolSampler) -> Vec<Rational> {
    let w = s.weights();
    let total: u128 = w.iter().sum();
    let total = BigInt::from(total);
    w.into_iter()
        .map(|x| Rational::new(BigInt::from(x), total.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use crate::rational::ratio;

    #[test]
    fn streams_are_independent_of_order() {
        let mut a = trial_rng(7, 3);
        let first: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let _ = trial_rng(7, 2).next_u64();
        let mut b = trial_rng(7, 3);
        let again: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_eq!(first, again);
        assert_ne!(first[0], trial_rng(7, 4).next_u64());
        assert_ne!(first[0], trial_rng(8, 3).next_u64());
    }

    #[test]
    fn dyadic_distributions_have_exact_slices() {
        let d = Distribution::from_ratios(&[(1, 4), (3, 4)]).unwrap();
        let s = SymbolSampler::new(&d);
        assert_eq!(s.weights(), vec![1u128 << 62, 3u128 << 62]);
        assert_eq!(effective_probs(&s), vec![ratio(1, 4), ratio(3, 4)]);
    }

    #[test]
    fn non_dyadic_boundaries_reject_at_most_one_value() {
        let d = Distribution::from_ratios(&[(1, 3), (1, 3), (1, 3)]).unwrap();
        let s = SymbolSampler::new(&d);
        let total: u128 = s.weights().iter().sum();
        assert!((1u128 << 64) - total <= 2);
        for w in s.weights() {
            let exact = (1u128 << 64) / 3;
            assert!(w.abs_diff(exact) <= 1);
        }
    }

    #[test]
    fn uniform_binary_frequency_is_within_three_standard_errors() {
        let d = Distribution::uniform(2).unwrap();
        let s = SymbolSampler::new(&d);
        let mut rng = trial_rng(2024, 0);
        let draws = 100_000u32;
        let ones = (0..draws).filter(|_| s.sample(&mut rng) == 1).count() as f64;
        let se = (0.25 / f64::from(draws)).sqrt();
        assert!((ones / f64::from(draws) - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn skewed_frequency_is_within_three_standard_errors() {
        let d = Distribution::from_ratios(&[(1, 7), (2, 7), (4, 7)]).unwrap();
        let s = SymbolSampler::new(&d);
        let mut rng = trial_rng(99, 5);
        let draws = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[s.sample(&mut rng) as usize] += 1;
        }
        for (k, p) in [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0].into_iter().enumerate() {
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((counts[k] as f64 / draws as f64 - p).abs() < 3.0 * se, "symbol {k}");
            assert!(counts[k] < draws);
        }
    }

    #[test]
    fn zero_probability_symbols_never_appear() {
        let d = Distribution::from_ratios(&[(1, 3), (0, 1), (2, 3)]).unwrap();
        let s = SymbolSampler::new(&d);
        let mut rng = trial_rng(1, 1);
        assert!((0..10_000).all(|_| s.sample(&mut rng) != 1));
    }

    #[test]
    fn tuple_sampling_is_deterministic() {
        let m = ModelSpec::iid(3, 4, 2, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        let s = ModelSampler::new(&m);
        let a = s.sample_tuple(&mut trial_rng(11, 4));
        let b = s.sample_tuple(&mut trial_rng(11, 4));
        assert_eq!(a, b);
        assert_eq!(a.order(), 3);
    }

    #[test]
    fn supersymmetric_sampling_replicates_one_matrix() {
        let m = ModelSpec::supersymmetric(
            3,
            3,
            Alphabet::signs(),
            vec![Distribution::uniform(2).unwrap(); 2],
        )
        .unwrap();
        let t = sample_tuple(&m, &mut trial_rng(5, 0));
        assert!(t.matrices().iter().all(|x| x.symbols() == t.matrix(0).symbols()));
    }

    #[test]
    fn rank_one_sign_matrices_are_always_full_rank() {
        let m = ModelSpec::iid(3, 3, 1, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        for e in estimate_full_rank_prob(&m, 200, 3) {
            assert_eq!(e.estimate, 1.0);
            assert!(e.wilson_low > 0.98);
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let e = ProportionEstimate::new(37, 100);
        assert!(e.wilson_low < 0.37 && 0.37 < e.wilson_high);
        let z = ProportionEstimate::new(0, 50);
        assert_eq!(z.wilson_low, 0.0);
        assert!(z.wilson_high > 0.0);
    }
}
