//! Exhaustive counting of the factor tuples that compose to a given tensor.
//!
//! The search fixes factor rows in the order `(row 0, mode 0), (row 0, mode 1),
//! ..., (row 1, mode 0), ...` over the free modes. Every tensor entry is checked
//! at the first step where all rows it depends on are fixed, so branches die as
//! soon as one completed entry disagrees with the target.

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::uniqueness::{partition_classes, Class};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numeric::Budget;
use crate::rational::Rational;
use crate::tensor::{Composer, ExactTensor, FactorTuple, Kernel, RationalMatrix, Ring};

/// Generating tuples kept for class analysis before giving up on it.
const MAX_KEPT: usize = 1 << 16;
/// Arbitrary generating tuples reported as representatives.
const MAX_REPRESENTATIVES: usize = 16;

#[derive(Clone, Debug)]
pub struct FactorizationCensus {
    pub target: ExactTensor,
    /// Whether the caller asked for full-rank tuples only; selects [`FactorizationCensus::count`].
    pub full_rank_only: bool,
    /// All generating tuples.
    pub total: u64,
    /// Generating tuples whose free factor matrices all have rank `R`.
    pub full_rank: u64,
    /// Model probability of the target, summed over all generating tuples.
    pub probability: Rational,
    /// First few generating tuples in search order.
    pub representatives: Vec<FactorTuple>,
    /// Every full-rank generating tuple, in search order (`None` past the storage cap).
    pub full_rank_tuples: Option<Vec<FactorTuple>>,
    /// Partition of `full_rank_tuples` under shared column permutation and
    /// per-mode scalings with identity product.
    pub classes: Option<Vec<Class>>,
}

impl FactorizationCensus {
    pub fn count(&self) -> u64 {
        if self.full_rank_only {
            self.full_rank
        } else {
            self.total
        }
    }

    pub fn max_class_size(&self) -> Option<usize> {
        self.classes
            .as_ref()
            .map(|cs| cs.iter().map(|c| c.members.len()).max().unwrap_or(0))
    }
}

#[derive(Default)]
struct Tally {
    total: u64,
    full_rank: u64,
    probability: Rational,
    representatives: Vec<Vec<Vec<u16>>>,
    full_rank_tuples: Vec<Vec<Vec<u16>>>,
    overflow: bool,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.full_rank += other.full_rank;
        self.probability += other.probability;
        for r in other.representatives {
            if self.representatives.len() < MAX_REPRESENTATIVES {
                self.representatives.push(r);
            }
        }
        self.overflow |= other.overflow;
        for t in other.full_rank_tuples {
            if self.full_rank_tuples.len() < MAX_KEPT {
                self.full_rank_tuples.push(t);
            } else {
                self.overflow = true;
            }
        }
        self
    }
}

struct Leaf<'a> {
    model: &'a ModelSpec,
    probs: Vec<Vec<Vec<Rational>>>,
}

impl Leaf<'_> {
    fn record(&self, free: &[Vec<u16>], tally: &mut Tally) {
        let (n, r) = (self.model.dim(), self.model.components());
        tally.total += 1;
        let mut p = Rational::from_integer(1.into());
        for (f, syms) in free.iter().enumerate() {
            for (c, col) in syms.chunks(n).enumerate() {
                for &s in col {
                    p *= &self.probs[f][c][s as usize];
                }
            }
        }
        tally.probability += p;
        if tally.representatives.len() < MAX_REPRESENTATIVES {
            tally.representatives.push(free.to_vec());
        }
        let full = free.iter().enumerate().all(|(f, syms)| {
            let alphabet = self.model.alphabet(f);
            let data = (0..n)
                .flat_map(|j| (0..r).map(move |c| (j, c)))
                .map(|(j, c)| alphabet.symbol(syms[c * n + j]).clone())
                .collect();
            RationalMatrix::new(n, r, data).expect("shape").rank() == r
        });
        if full {
            tally.full_rank += 1;
            if tally.full_rank_tuples.len() < MAX_KEPT {
                tally.full_rank_tuples.push(free.to_vec());
            } else {
                tally.overflow = true;
            }
        }
    }
}

struct Search<'a, S> {
    kernel: &'a Kernel<S>,
    target: Vec<S>,
    /// per step: entries completed there, as (linear index, multi-index)
    checks: Vec<Vec<(usize, Vec<usize>)>>,
    /// per free mode: every row assignment, `R` symbols each
    rows: Vec<Vec<Vec<u16>>>,
    free: usize,
}

impl<S: Ring> Search<'_, S> {
    fn step_ok(&self, step: usize, state: &[Vec<u16>]) -> bool {
        self.checks[step]
            .iter()
            .all(|(lin, idx)| self.kernel.entry(idx, state) == self.target[*lin])
    }

    fn assign(&self, step: usize, choice: &[u16], state: &mut [Vec<u16>]) {
        let n = self.kernel.dim;
        let (k, g) = (step / self.free, step % self.free);
        for (c, &s) in choice.iter().enumerate() {
            state[g][c * n + k] = s;
        }
    }

    fn dfs(&self, step: usize, state: &mut Vec<Vec<u16>>, leaf: &Leaf, tally: &mut Tally) {
        if step == self.checks.len() {
            leaf.record(state, tally);
            return;
        }
        let g = step % self.free;
        for choice in &self.rows[g] {
            self.assign(step, choice, state);
            if self.step_ok(step, state) {
                self.dfs(step + 1, state, leaf, tally);
            }
        }
    }

    fn run(&self, leaf: &Leaf) -> Tally {
        let (n, r) = (self.kernel.dim, self.kernel.comps);
        self.rows[0]
            .par_iter()
            .map(|choice| {
                let mut state = vec![vec![0u16; n * r]; self.free];
                let mut tally = Tally::default();
                self.assign(0, choice, &mut state);
                if self.step_ok(0, &state) {
                    self.dfs(1, &mut state, leaf, &mut tally);
                }
                tally
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge)
    }
}

fn row_choices(k: usize, r: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::with_capacity(k.pow(r as u32));
    let mut cur = vec![0u16; r];
    loop {
        out.push(cur.clone());
        let mut c = r;
        loop {
            if c == 0 {
                return out;
            }
            c -= 1;
            cur[c] += 1;
            if (cur[c] as usize) < k {
                break;
            }
            cur[c] = 0;
        }
    }
}

/// Groups every entry by the search step that completes it.
fn completion_steps(m: &ModelSpec, t: &ExactTensor) -> Vec<Vec<(usize, Vec<usize>)>> {
    let free = m.free_modes();
    let mut checks = vec![Vec::new(); m.dim() * free];
    for lin in 0..t.len() {
        let idx = t.multi_index(lin);
        let k = *idx.iter().max().expect("order >= 1");
        let g = (0..m.order())
            .filter(|&j| idx[j] == k)
            .map(|j| m.source_mode(j))
            .max()
            .expect("some mode attains the max");
        checks[k * free + g].push((lin, idx));
    }
    checks
}

fn search<S: Ring>(kernel: &Kernel<S>, target: Vec<S>, m: &ModelSpec, t: &ExactTensor, leaf: &Leaf) -> Tally {
    let s = Search {
        kernel,
        target,
        checks: completion_steps(m, t),
        rows: (0..m.free_modes())
            .map(|f| row_choices(m.alphabet(f).len(), m.components()))
            .collect(),
        free: m.free_modes(),
    };
    s.run(leaf)
}

fn to_tuples(m: &ModelSpec, v: Vec<Vec<Vec<u16>>>) -> Vec<FactorTuple> {
    v.iter()
        .map(|free| {
            let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
            FactorTuple::from_free_symbols(m, &refs)
        })
        .collect()
}

/// Counts the factor tuples over the model's alphabets that compose to `t`.
pub fn count_factorizations(
    t: &ExactTensor,
    m: &ModelSpec,
    full_rank_only: bool,
    budget: Budget,
) -> Result<FactorizationCensus> {
    if t.order() != m.order() || t.dim() != m.dim() {
        return Err(Error::Shape(format!(
            "target has order {} and dim {}, model has {} and {}",
            t.order(),
            t.dim(),
            m.order(),
            m.dim()
        )));
    }
    budget.check("factorization census", &m.tuple_space())?;
    let composer = Composer::new(m);
    let leaf = Leaf {
        model: m,
        probs: (0..m.free_modes())
            .map(|f| (0..m.components()).map(|c| m.dist(f, c).probs().to_vec()).collect())
            .collect(),
    };
    let tally = match (composer.int_kernel(), composer.exact_kernel()) {
        (Some((kernel, scale)), _) => {
            let scale = Rational::from_integer(scale.clone());
            let target: Option<Vec<i128>> = t
                .entries()
                .iter()
                .map(|e| {
                    let v = e * &scale;
                    if v.is_integer() {
                        v.to_integer().to_i128()
                    } else {
                        None
                    }
                })
                .collect();
            match target {
                Some(target) => search(kernel, target, m, t, &leaf),
                // off the scaled lattice: nothing composes to it
                None => Tally::default(),
            }
        }
        (None, Some(kernel)) => search(kernel, t.entries().to_vec(), m, t, &leaf),
        (None, None) => unreachable!("composer has one representation"),
    };

    let full_rank_tuples = (!tally.overflow).then(|| to_tuples(m, tally.full_rank_tuples));
    let classes = full_rank_tuples.as_ref().map(|ts| partition_classes(ts));
    Ok(FactorizationCensus {
        target: t.clone(),
        full_rank_only,
        total: tally.total,
        full_rank: tally.full_rank,
        probability: tally.probability,
        representatives: to_tuples(m, tally.representatives),
        full_rank_tuples,
        classes,
    })
}

/// `Pr{T = t}` under the model, through the census.
pub fn tensor_probability(t: &ExactTensor, m: &ModelSpec, budget: Budget) -> Result<Rational> {
    Ok(count_factorizations(t, m, false, budget)?.probability)
}

/// One distinct tensor of a model's image with its generator count and probability.
#[derive(Clone, Debug)]
pub struct ImageEntry {
    pub tensor: ExactTensor,
    /// Smallest generating tuple in enumeration order.
    pub first: FactorTuple,
    pub count: u64,
    pub probability: Rational,
}

/// Composes every tuple of the model and groups them by tensor; entries are
/// ordered by their first generating tuple.
pub fn image_census(m: &ModelSpec, budget: Budget) -> Result<Vec<ImageEntry>> {
    use crate::typicality::ModeSpace;
    use std::collections::HashMap;

    budget.check("image census", &m.tuple_space())?;
    let spaces = (0..m.free_modes())
        .map(|f| ModeSpace::new(m, f, budget))
        .collect::<Result<Vec<_>>>()?;
    let composer = Composer::new(m);
    let radices: Vec<u64> = spaces.iter().map(ModeSpace::matrix_count).collect();
    let total: u64 = radices.iter().product();
    let mut groups: HashMap<crate::tensor::TensorKey, usize> = HashMap::new();
    let mut out: Vec<ImageEntry> = Vec::new();
    for index in 0..total {
        let mut rest = index;
        let mut digits = vec![0u64; radices.len()];
        for (d, &r) in digits.iter_mut().zip(&radices).rev() {
            *d = rest % r;
            rest /= r;
        }
        let free: Vec<Vec<u16>> = digits.iter().enumerate().map(|(f, &d)| spaces[f].symbols(d)).collect();
        let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
        let p: Rational = digits.iter().enumerate().map(|(f, &d)| spaces[f].prob(d)).product();
        let key = composer.key(&refs);
        match groups.get(&key) {
            Some(&slot) => {
                out[slot].count += 1;
                out[slot].probability += p;
            }
            None => {
                groups.insert(key, out.len());
                out.push(ImageEntry {
                    tensor: composer.tensor(&refs),
                    first: FactorTuple::from_free_symbols(m, &refs),
                    count: 1,
                    probability: p,
                });
            }
        }
    }
    Ok(out)
}

/// `Pr{T = t}` by walking the whole tuple space; an oracle independent of the census search.
pub fn brute_force_probability(t: &ExactTensor, m: &ModelSpec, budget: Budget) -> Result<Rational> {
    use crate::typicality::ModeSpace;

    budget.check("brute-force probability", &m.tuple_space())?;
    let spaces = (0..m.free_modes())
        .map(|f| ModeSpace::new(m, f, budget))
        .collect::<Result<Vec<_>>>()?;
    let radices: Vec<u64> = spaces.iter().map(ModeSpace::matrix_count).collect();
    let total: u64 = radices.iter().product();
    let hits: Vec<Rational> = (0..total)
        .into_par_iter()
        .filter_map(|index| {
            let mut rest = index;
            let mut digits = vec![0u64; radices.len()];
            for (d, &r) in digits.iter_mut().zip(&radices).rev() {
                *d = rest % r;
                rest /= r;
            }
            let free: Vec<Vec<u16>> = digits.iter().enumerate().map(|(f, &d)| spaces[f].symbols(d)).collect();
            let refs: Vec<&[u16]> = free.iter().map(Vec::as_slice).collect();
            let tuple = FactorTuple::from_free_symbols(m, &refs);
            (tuple.compose() == *t).then(|| digits.iter().enumerate().map(|(f, &d)| spaces[f].prob(d)).product())
        })
        .collect();
    Ok(hits.into_iter().fold(<Rational as Zero>::zero(), |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Distribution};
    use crate::rational::{int, ratio};

    fn cubic(n: usize) -> ModelSpec {
        ModelSpec::supersymmetric(3, n, Alphabet::signs(), vec![Distribution::uniform(2).unwrap(); 2]).unwrap()
    }

    #[test]
    fn row_choices_enumerate_in_order() {
        assert_eq!(row_choices(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(row_choices(3, 1).len(), 3);
    }

    #[test]
    fn every_entry_is_checked_exactly_once() {
        let m = ModelSpec::iid(3, 3, 2, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        let t = ExactTensor::zeros(3, 3);
        let checks = completion_steps(&m, &t);
        let mut seen: Vec<usize> = checks.iter().flatten().map(|(l, _)| *l).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..27).collect::<Vec<_>>());
        // (0,0,0) needs row 0 of every mode
        assert_eq!(checks[2][0].1, vec![0, 0, 0]);
    }

    #[test]
    fn census_agrees_with_image_census() {
        for m in [
            cubic(3),
            ModelSpec::iid(2, 2, 2, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap(),
            ModelSpec::iid(3, 2, 1, Alphabet::from_ints(&[-1, 0, 2]).unwrap(), Distribution::uniform(3).unwrap())
                .unwrap(),
        ] {
            let image = image_census(&m, Budget::default()).unwrap();
            let total: u64 = image.iter().map(|e| e.count).sum();
            assert_eq!(total, m.tuple_space().to_u64().unwrap());
            for e in &image {
                let c = count_factorizations(&e.tensor, &m, false, Budget::default()).unwrap();
                assert_eq!(c.total, e.count, "{:?}", e.tensor);
                assert_eq!(c.probability, e.probability);
                assert_eq!(c.representatives[0].compose(), e.tensor);
            }
        }
    }

    #[test]
    fn zero_cubic_tensor_has_two_to_the_n_factorizations() {
        for n in 2..=4 {
            let c = count_factorizations(&ExactTensor::zeros(3, n), &cubic(n), false, Budget::default()).unwrap();
            assert_eq!(c.total, 1 << n);
            assert_eq!(c.full_rank, 0);
            assert_eq!(c.probability, ratio(1, 1 << n));
        }
    }

    #[test]
    fn off_lattice_targets_have_no_factorizations() {
        let mut e = vec![int(0); 8];
        e[3] = ratio(1, 3);
        let t = ExactTensor::new(3, 2, e).unwrap();
        let c = count_factorizations(&t, &cubic(2), false, Budget::default()).unwrap();
        assert_eq!(c.total, 0);
        assert_eq!(c.probability, int(0));
    }

    #[test]
    fn rational_alphabets_are_counted() {
        let a = Alphabet::new(vec![ratio(-1, 2), ratio(1, 3), int(2)]).unwrap();
        let m = ModelSpec::iid(2, 2, 1, a, Distribution::uniform(3).unwrap()).unwrap();
        let image = image_census(&m, Budget::default()).unwrap();
        for e in &image {
            assert_eq!(count_factorizations(&e.tensor, &m, false, Budget::default()).unwrap().total, e.count);
        }
    }

    #[test]
    fn brute_force_probability_matches_census() {
        let m = ModelSpec::iid(2, 2, 2, Alphabet::signs(), Distribution::from_ratios(&[(1, 3), (2, 3)]).unwrap())
            .unwrap();
        let t = ExactTensor::zeros(2, 2);
        assert_eq!(
            brute_force_probability(&t, &m, Budget::default()).unwrap(),
            tensor_probability(&t, &m, Budget::default()).unwrap()
        );
    }

    #[test]
    fn shape_mismatch_and_budget_are_reported() {
        assert!(count_factorizations(&ExactTensor::zeros(2, 2), &cubic(2), false, Budget::default()).is_err());
        let m = ModelSpec::iid(3, 4, 2, Alphabet::signs(), Distribution::uniform(2).unwrap()).unwrap();
        assert!(matches!(
            count_factorizations(&ExactTensor::zeros(3, 4), &m, false, Budget(1000)),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
