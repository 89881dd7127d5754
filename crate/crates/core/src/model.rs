//! Probabilistic model of the factor matrices.
//!
//! Every entry in column `r` of factor matrix `i` is drawn independently from
//! `dists[i][r]` over `alphabets[i]`. In supersymmetric mode a single matrix
//! is drawn and used for every mode.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{self, int, JsonRational, Rational};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Arc<[Rational]>,
}

impl Alphabet {
    /// Symbols must be non-empty and strictly ascending.
    pub fn new(symbols: Vec<Rational>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        if symbols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "alphabet symbols must be strictly ascending".into(),
            ));
        }
        if symbols.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter("alphabet too large".into()));
        }
        Ok(Alphabet {
            symbols: symbols.into(),
        })
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| int(v)).collect())
    }

    /// The alphabet `{-1, 1}`.
    pub fn signs() -> Self {
        Self::from_ints(&[-1, 1]).expect("sorted")
    }

    pub fn symbols(&self) -> &[Rational] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: u16) -> &Rational {
        &self.symbols[index as usize]
    }

    pub fn index_of(&self, value: &Rational) -> Option<u16> {
        self.symbols.binary_search(value).ok().map(|i| i as u16)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.symbols.iter().map(rational::format))
            .finish()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Distribution {
    probs: Vec<Rational>,
}

impl Distribution {
    /// Non-negative, sums to exactly one, and no mass point of probability one.
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        let mut problems = Vec::new();
        check_distribution(&probs, 0, 0, &mut problems);
        if !problems.is_empty() {
            return Err(Error::InvalidModel(problems));
        }
        Ok(Distribution { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![rational::ratio(1, k as i64); k])
    }

    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(n, d)| rational::ratio(n, d)).collect())
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, symbol: u16) -> &Rational {
        &self.probs[symbol as usize]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_prob(&self) -> &Rational {
        self.probs.iter().max().expect("non-empty")
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.probs.iter().map(rational::format))
            .finish()
    }
}

/// Shannon entropy in nats, `0 ln 0 = 0`.
pub fn entropy(d: &Distribution) -> f64 {
    let mut acc = crate::numeric::CompensatedSum::default();
    for p in d.probs.iter().filter(|p| !p.is_zero()) {
        acc.add(-rational::to_f64(p) * rational::ln(p));
    }
    acc.value().max(0.0)
}

/// A constraint broken by a model description.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ZeroOrder,
    ZeroDim,
    ZeroComponents,
    AlphabetCount { expected: usize, found: usize },
    EmptyAlphabet { mode: usize },
    UnsortedAlphabet { mode: usize },
    DistRowCount { expected: usize, found: usize },
    DistCount { mode: usize, expected: usize, found: usize },
    DistLength { mode: usize, column: usize, expected: usize, found: usize },
    NegativeProbability { mode: usize, column: usize },
    NotNormalized { mode: usize, column: usize, sum: String },
    Degenerate { mode: usize, column: usize },
    SupersymmetricMismatch { mode: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            ZeroOrder => write!(f, "order must be at least 1"),
            ZeroDim => write!(f, "dim must be at least 1"),
            ZeroComponents => write!(f, "components must be at least 1"),
            AlphabetCount { expected, found } => {
                write!(f, "expected {expected} alphabets, found {found}")
            }
            EmptyAlphabet { mode } => write!(f, "mode {mode}: empty alphabet"),
            UnsortedAlphabet { mode } => {
                write!(f, "mode {mode}: alphabet not strictly ascending")
            }
            DistRowCount { expected, found } => {
                write!(f, "expected {expected} rows of distributions, found {found}")
            }
            DistCount {
                mode,
                expected,
                found,
            } => write!(f, "mode {mode}: expected {expected} distributions, found {found}"),
            DistLength {
                mode,
                column,
                expected,
                found,
            } => write!(
                f,
                "mode {mode} column {column}: distribution has {found} entries, alphabet has {expected}"
            ),
            NegativeProbability { mode, column } => {
                write!(f, "mode {mode} column {column}: negative probability")
            }
            NotNormalized { mode, column, sum } => {
                write!(f, "mode {mode} column {column}: not normalized (sum {sum})")
            }
            Degenerate { mode, column } => {
                write!(f, "mode {mode} column {column}: degenerate distribution")
            }
            SupersymmetricMismatch { mode } => write!(
                f,
                "mode {mode}: supersymmetric model needs identical alphabets and distributions"
            ),
        }
    }
}

fn check_distribution(probs: &[Rational], mode: usize, column: usize, out: &mut Vec<Violation>) {
    if probs.iter().any(|p| p.is_negative()) {
        out.push(Violation::NegativeProbability { mode, column });
    }
    let sum: Rational = probs.iter().sum();
    if !sum.is_one() {
        out.push(Violation::NotNormalized {
            mode,
            column,
            sum: rational::format(&sum),
        });
    }
    if probs.iter().any(|p| p.is_one()) || probs.len() == 1 {
        out.push(Violation::Degenerate { mode, column });
    }
}

/// Unvalidated model description, the JSON wire form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RawModel {
    pub order: usize,
    pub dim: usize,
    pub components: usize,
    #[serde(default)]
    pub supersymmetric: bool,
    pub alphabets: Vec<Vec<JsonRational>>,
    pub dists: Vec<Vec<Vec<JsonRational>>>,
}

impl RawModel {
    /// Every broken constraint, not just the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.order == 0 {
            out.push(Violation::ZeroOrder);
        }
        if self.dim == 0 {
            out.push(Violation::ZeroDim);
        }
        if self.components == 0 {
            out.push(Violation::ZeroComponents);
        }
        if self.alphabets.len() != self.order {
            out.push(Violation::AlphabetCount {
                expected: self.order,
                found: self.alphabets.len(),
            });
        }
        for (mode, a) in self.alphabets.iter().enumerate() {
            if a.is_empty() {
                out.push(Violation::EmptyAlphabet { mode });
            } else if a.windows(2).any(|w| w[0].0 >= w[1].0) {
                out.push(Violation::UnsortedAlphabet { mode });
            }
        }
        if self.dists.len() != self.order {
            out.push(Violation::DistRowCount {
                expected: self.order,
                found: self.dists.len(),
            });
        }
        for (mode, row) in self.dists.iter().enumerate() {
            if row.len() != self.components {
                out.push(Violation::DistCount {
                    mode,
                    expected: self.components,
                    found: row.len(),
                });
            }
            for (column, d) in row.iter().enumerate() {
                if let Some(a) = self.alphabets.get(mode) {
                    if a.len() != d.len() {
                        out.push(Violation::DistLength {
                            mode,
                            column,
                            expected: a.len(),
                            found: d.len(),
                        });
                    }
                }
                let probs: Vec<Rational> = d.iter().map(|p| p.0.clone()).collect();
                check_distribution(&probs, mode, column, &mut out);
            }
        }
        if self.supersymmetric {
            for mode in 1..self.order {
                let same_alphabet = self.alphabets.get(mode) == self.alphabets.first();
                let same_dists = self.dists.get(mode) == self.dists.first();
                if !(same_alphabet && same_dists) {
                    out.push(Violation::SupersymmetricMismatch { mode });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

pub fn validate(raw: &RawModel) -> std::result::Result<(), Vec<Violation>> {
    raw.validate()
}

/// A validated model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    order: usize,
    dim: usize,
    components: usize,
    supersymmetric: bool,
    alphabets: Vec<Alphabet>,
    dists: Vec<Vec<Distribution>>,
}

impl ModelSpec {
    pub fn from_raw(raw: &RawModel) -> Result<Self> {
        raw.validate().map_err(Error::InvalidModel)?;
        let alphabets = raw
            .alphabets
            .iter()
            .map(|a| Alphabet::new(a.iter().map(|s| s.0.clone()).collect()))
            .collect::<Result<Vec<_>>>()?;
        let dists = raw
            .dists
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| Distribution {
                        probs: d.iter().map(|p| p.0.clone()).collect(),
                    })
                    .collect()
            })
            .collect();
        Ok(ModelSpec {
            order: raw.order,
            dim: raw.dim,
            components: raw.components,
            supersymmetric: raw.supersymmetric,
            alphabets,
            dists,
        })
    }

    pub fn new(
        order: usize,
        dim: usize,
        components: usize,
        supersymmetric: bool,
        alphabets: Vec<Alphabet>,
        dists: Vec<Vec<Distribution>>,
    ) -> Result<Self> {
        let raw = RawModel {
            order,
            dim,
            components,
            supersymmetric,
            alphabets: alphabets
                .iter()
                .map(|a| rational::to_json_vec(a.symbols()))
                .collect(),
            dists: dists
                .iter()
                .map(|row| row.iter().map(|d| rational::to_json_vec(d.probs())).collect())
                .collect(),
        };
        Self::from_raw(&raw)
    }

    /// Same alphabet and distribution for every mode and column.
    pub fn iid(
        order: usize,
        dim: usize,
        components: usize,
        alphabet: Alphabet,
        dist: Distribution,
    ) -> Result<Self> {
        Self::new(
            order,
            dim,
            components,
            false,
            vec![alphabet; order],
            vec![vec![dist; components]; order],
        )
    }

    /// One shared matrix with per-column distributions, replicated across `order` modes.
    pub fn supersymmetric(
        order: usize,
        dim: usize,
        alphabet: Alphabet,
        columns: Vec<Distribution>,
    ) -> Result<Self> {
        let components = columns.len();
        Self::new(
            order,
            dim,
            components,
            true,
            vec![alphabet; order],
            vec![columns; order],
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text)?;
        Self::from_raw(&raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            order: self.order,
            dim: self.dim,
            components: self.components,
            supersymmetric: self.supersymmetric,
            alphabets: self
                .alphabets
                .iter()
                .map(|a| rational::to_json_vec(a.symbols()))
                .collect(),
            dists: self
                .dists
                .iter()
                .map(|row| row.iter().map(|d| rational::to_json_vec(d.probs())).collect())
                .collect(),
        }
    }

    /// Compact JSON with fixed key order and rationals as lowest-terms strings.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("model serializes")
    }

    /// SHA-256 of [`ModelSpec::canonical_json`].
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_json().as_bytes()).into()
    }

    /// The same model at another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel(vec![Violation::ZeroDim]));
        }
        Ok(ModelSpec {
            dim,
            ..self.clone()
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_supersymmetric(&self) -> bool {
        self.supersymmetric
    }

    pub fn alphabet(&self, mode: usize) -> &Alphabet {
        &self.alphabets[mode]
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn dist(&self, mode: usize, column: usize) -> &Distribution {
        &self.dists[mode][column]
    }

    /// Number of independently drawn factor matrices: 1 when supersymmetric, else the order.
    pub fn free_modes(&self) -> usize {
        if self.supersymmetric {
            1
        } else {
            self.order
        }
    }

    /// Maps a tensor mode to the free matrix that fills it.
    pub fn source_mode(&self, mode: usize) -> usize {
        if self.supersymmetric {
            0
        } else {
            mode
        }
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order {
            Err(Error::ModeOutOfRange {
                mode,
                order: self.order,
            })
        } else {
            Ok(())
        }
    }

    /// `sum_r H(dists[mode][r])`, the per-row entropy of one factor matrix.
    pub fn mode_entropy(&self, mode: usize) -> f64 {
        let mut acc = crate::numeric::CompensatedSum::default();
        for d in &self.dists[mode] {
            acc.add(entropy(d));
        }
        acc.value()
    }

    /// Number of realizations of one factor matrix, `|X_i|^(nR)`.
    pub fn matrix_space(&self, mode: usize) -> num_bigint::BigUint {
        num_bigint::BigUint::from(self.alphabets[mode].len()).pow((self.dim * self.components) as u32)
    }

    /// Number of realizations of a whole tuple of free matrices.
    pub fn tuple_space(&self) -> num_bigint::BigUint {
        (0..self.free_modes()).map(|i| self.matrix_space(i)).product()
    }
}

/// Sum of column entropies over the free factor matrices, in nats.
///
/// For supersymmetric models only the one shared matrix is counted.
pub fn theoretical_threshold(m: &ModelSpec) -> f64 {
    let mut acc = crate::numeric::CompensatedSum::default();
    for mode in 0..m.free_modes() {
        acc.add(m.mode_entropy(mode));
    }
    acc.value()
}
