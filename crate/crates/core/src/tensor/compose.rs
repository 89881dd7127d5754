//! Fast composition of symbol-indexed factor tuples into hashable tensor keys.
//!
//! Each mode's alphabet is cleared of denominators so that composition runs
//! in `i128`; the common scale is the product of the per-mode denominators,
//! so equal keys mean equal tensors. Models whose scaled values could
//! overflow fall back to exact rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::dense::ExactTensor;
use crate::model::ModelSpec;
use crate::rational::{self, Rational};

/// Compact byte encoding of a tensor, unique per tensor for a given [`Composer`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorKey(Box<[u8]>);

impl TensorKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

pub(crate) trait Ring: Clone + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn times(&self, other: &Self) -> Self;
    fn add_in(&mut self, other: &Self);
    fn write_key(&self, out: &mut Vec<u8>);
}

impl Ring for i128 {
    fn zero() -> Self {
        0
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn add_in(&mut self, other: &Self) {
        *self += other;
    }
    fn write_key(&self, out: &mut Vec<u8>) {
        rational::write_svarint_i128(*self, out);
    }
}

impl Ring for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn add_in(&mut self, other: &Self) {
        *self += other;
    }
    fn write_key(&self, out: &mut Vec<u8>) {
        rational::write_rational(self, out);
    }
}

/// Symbol values per free mode plus the mode layout.
pub(crate) struct Kernel<S> {
    pub order: usize,
    pub dim: usize,
    pub comps: usize,
    /// tensor mode -> free mode
    pub source: Vec<usize>,
    /// free mode -> symbol index -> value
    pub values: Vec<Vec<S>>,
}

/// Cached partial products `prod_{j <= k} X_j[i_j, r]` for every prefix level `k`.
pub(crate) struct Partials<S> {
    levels: Vec<Vec<S>>,
    valid: usize,
}

impl<S: Ring> Kernel<S> {
    fn new_partials(&self) -> Partials<S> {
        Partials {
            levels: (0..self.order)
                .map(|k| Vec::with_capacity(self.dim.pow(k as u32 + 1) * self.comps))
                .collect(),
            valid: 0,
        }
    }

    fn fill(&self, free: &[&[u16]], p: &mut Partials<S>) {
        let (n, r) = (self.dim, self.comps);
        for k in p.valid..self.order {
            let syms = free[self.source[k]];
            let vals = &self.values[self.source[k]];
            let (done, rest) = p.levels.split_at_mut(k);
            let level = &mut rest[0];
            level.clear();
            if k == 0 {
                for i in 0..n {
                    for c in 0..r {
                        level.push(vals[syms[c * n + i] as usize].clone());
                    }
                }
            } else {
                let prev = &done[k - 1];
                for prefix in prev.chunks(r) {
                    for i in 0..n {
                        for c in 0..r {
                            level.push(prefix[c].times(&vals[syms[c * n + i] as usize]));
                        }
                    }
                }
            }
        }
        p.valid = self.order;
    }

    fn entries(&self, p: &Partials<S>) -> impl Iterator<Item = S> + '_ {
        let r = self.comps;
        // levels borrowed through an owned clone of the slice iterator
        let last: Vec<S> = p.levels[self.order - 1].clone();
        (0..last.len() / r).map(move |e| {
            let mut acc = S::zero();
            for c in 0..r {
                acc.add_in(&last[e * r + c]);
            }
            acc
        })
    }

    fn write_key(&self, p: &Partials<S>, out: &mut Vec<u8>) {
        let r = self.comps;
        for chunk in p.levels[self.order - 1].chunks(r) {
            let mut acc = S::zero();
            for v in chunk {
                acc.add_in(v);
            }
            acc.write_key(out);
        }
    }

    /// Value of one tensor entry given the full index and the free matrices.
    pub fn entry<V: AsRef<[u16]>>(&self, index: &[usize], free: &[V]) -> S {
        let n = self.dim;
        let mut acc = S::zero();
        for c in 0..self.comps {
            let mut prod: Option<S> = None;
            for (k, &i) in index.iter().enumerate() {
                let f = self.source[k];
                let v = &self.values[f][free[f].as_ref()[c * n + i] as usize];
                prod = Some(match prod {
                    None => v.clone(),
                    Some(p) => p.times(v),
                });
            }
            acc.add_in(&prod.expect("order >= 1"));
        }
        acc
    }
}

enum Repr {
    Int { kernel: Kernel<i128>, scale: BigInt },
    Exact { kernel: Kernel<Rational> },
}

/// Composes factor tuples of one model into tensors or [`TensorKey`]s.
pub struct Composer {
    repr: Repr,
}

impl Composer {
    pub fn new(m: &ModelSpec) -> Self {
        let order = m.order();
        let source: Vec<usize> = (0..order).map(|k| m.source_mode(k)).collect();
        let free = m.free_modes();
        let dens: Vec<BigInt> = (0..free)
            .map(|f| {
                m.alphabet(f)
                    .symbols()
                    .iter()
                    .fold(BigInt::one(), |acc, s| acc.lcm(s.denom()))
            })
            .collect();
        let scaled: Vec<Vec<BigInt>> = (0..free)
            .map(|f| {
                m.alphabet(f)
                    .symbols()
                    .iter()
                    .map(|s| s.numer() * (&dens[f] / s.denom()))
                    .collect()
            })
            .collect();
        let max_abs: BigInt = source
            .iter()
            .map(|&f| {
                scaled[f]
                    .iter()
                    .map(|v| v.abs())
                    .max()
                    .unwrap_or_else(BigInt::one)
            })
            .product();
        let worst = max_abs * BigInt::from(m.components());
        let fits = worst.bits() <= 125;
        let kernel_shape = |_: ()| (order, m.dim(), m.components(), source.clone());
        let repr = if fits {
            let (order, dim, comps, source) = kernel_shape(());
            let scale: BigInt = source.iter().map(|&f| dens[f].clone()).product();
            Repr::Int {
                kernel: Kernel {
                    order,
                    dim,
                    comps,
                    source,
                    values: scaled
                        .iter()
                        .map(|vs| vs.iter().map(|v| v.to_i128().expect("bounded")).collect())
                        .collect(),
                },
                scale,
            }
        } else {
            let (order, dim, comps, source) = kernel_shape(());
            Repr::Exact {
                kernel: Kernel {
                    order,
                    dim,
                    comps,
                    source,
                    values: (0..free).map(|f| m.alphabet(f).symbols().to_vec()).collect(),
                },
            }
        };
        Composer { repr }
    }

    pub(crate) fn int_kernel(&self) -> Option<(&Kernel<i128>, &BigInt)> {
        match &self.repr {
            Repr::Int { kernel, scale } => Some((kernel, scale)),
            Repr::Exact { .. } => None,
        }
    }

    pub(crate) fn exact_kernel(&self) -> Option<&Kernel<Rational>> {
        match &self.repr {
            Repr::Exact { kernel } => Some(kernel),
            Repr::Int { .. } => None,
        }
    }

    fn shape(&self) -> (usize, usize) {
        match &self.repr {
            Repr::Int { kernel, .. } => (kernel.order, kernel.dim),
            Repr::Exact { kernel } => (kernel.order, kernel.dim),
        }
    }

    /// Key of the tensor composed from the free matrices' column-major symbols.
    pub fn key(&self, free: &[&[u16]]) -> TensorKey {
        let mut p = self.prefix();
        for (f, s) in free.iter().enumerate() {
            p.set(f, s);
        }
        p.key()
    }

    pub fn tensor(&self, free: &[&[u16]]) -> ExactTensor {
        let (order, dim) = self.shape();
        let entries: Vec<Rational> = match &self.repr {
            Repr::Int { kernel, scale } => {
                let mut p = kernel.new_partials();
                kernel.fill(free, &mut p);
                if scale.is_one() {
                    kernel.entries(&p).map(|v| Rational::from_integer(BigInt::from(v))).collect()
                } else {
                    kernel
                        .entries(&p)
                        .map(|v| Rational::new(BigInt::from(v), scale.clone()))
                        .collect()
                }
            }
            Repr::Exact { kernel } => {
                let mut p = kernel.new_partials();
                kernel.fill(free, &mut p);
                kernel.entries(&p).collect()
            }
        };
        ExactTensor::new(order, dim, entries).expect("composer shape")
    }

    /// Key of an arbitrary tensor, or `None` when it cannot be composed from
    /// this model's alphabets (wrong shape or off the scaled integer lattice).
    pub fn key_of(&self, t: &ExactTensor) -> Option<TensorKey> {
        if (t.order(), t.dim()) != self.shape() {
            return None;
        }
        let mut out = Vec::with_capacity(t.len());
        match &self.repr {
            Repr::Int { scale, .. } => {
                for e in t.entries() {
                    let scaled = e.numer() * scale;
                    let v = if e.denom().is_one() {
                        scaled
                    } else {
                        let (q, r) = scaled.div_rem(e.denom());
                        if !r.is_zero() {
                            return None;
                        }
                        q
                    };
                    rational::write_svarint_i128(v.to_i128()?, &mut out);
                }
            }
            Repr::Exact { .. } => {
                for e in t.entries() {
                    rational::write_rational(e, &mut out);
                }
            }
        }
        Some(TensorKey(out.into_boxed_slice()))
    }

    pub fn prefix(&self) -> PrefixComposer<'_> {
        let state = match &self.repr {
            Repr::Int { kernel, .. } => PrefixState::Int(kernel.new_partials()),
            Repr::Exact { kernel } => PrefixState::Exact(kernel.new_partials()),
        };
        let free = match &self.repr {
            Repr::Int { kernel, .. } => kernel.values.len(),
            Repr::Exact { kernel } => kernel.values.len(),
        };
        PrefixComposer {
            composer: self,
            free: vec![Vec::new(); free],
            state,
            buf: Vec::new(),
        }
    }

    fn first_level_of(&self, free_mode: usize) -> usize {
        let source = match &self.repr {
            Repr::Int { kernel, .. } => &kernel.source,
            Repr::Exact { kernel } => &kernel.source,
        };
        source
            .iter()
            .position(|&f| f == free_mode)
            .expect("free mode feeds some tensor mode")
    }
}

enum PrefixState {
    Int(Partials<i128>),
    Exact(Partials<Rational>),
}

/// Incremental composer: changing the last free matrix only recomputes the last level.
pub struct PrefixComposer<'a> {
    composer: &'a Composer,
    free: Vec<Vec<u16>>,
    state: PrefixState,
    buf: Vec<u8>,
}

impl PrefixComposer<'_> {
    pub fn set(&mut self, free_mode: usize, symbols: &[u16]) {
        if self.free[free_mode] == symbols {
            return;
        }
        self.free[free_mode].clear();
        self.free[free_mode].extend_from_slice(symbols);
        let level = self.composer.first_level_of(free_mode);
        match &mut self.state {
            PrefixState::Int(p) => p.valid = p.valid.min(level),
            PrefixState::Exact(p) => p.valid = p.valid.min(level),
        }
    }

    pub fn key(&mut self) -> TensorKey {
        let free: Vec<&[u16]> = self.free.iter().map(Vec::as_slice).collect();
        self.buf.clear();
        match (&self.composer.repr, &mut self.state) {
            (Repr::Int { kernel, .. }, PrefixState::Int(p)) => {
                kernel.fill(&free, p);
                kernel.write_key(p, &mut self.buf);
            }
            (Repr::Exact { kernel }, PrefixState::Exact(p)) => {
                kernel.fill(&free, p);
                kernel.write_key(p, &mut self.buf);
            }
            _ => unreachable!("state matches representation"),
        }
        TensorKey(self.buf.clone().into_boxed_slice())
    }
}
