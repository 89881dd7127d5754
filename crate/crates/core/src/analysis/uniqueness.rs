//! Essential-uniqueness certificates between co-generating full-rank tuples.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use super::bounds::gamma_bound;
use super::census::count_factorizations;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numeric::Budget;
use crate::rational::{self, Rational};
use crate::tensor::{ExactTensor, FactorTuple, RationalMatrix};

/// How one full-rank tuple is obtained from the reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `X'_i = X_i P Λ_i` with `(X P)[:, r] = X[:, permutation[r]]`,
    /// `Λ_i = diag(scalings[i])` and `prod_i Λ_i = I`.
    Scaling {
        permutation: Vec<usize>,
        scalings: Vec<Vec<Rational>>,
    },
    /// `X'_1 = X_1 W`, `X'_2 = X_2 W^{-T}` (order two).
    Invertible { w: RationalMatrix },
}

impl Serialize for Relation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Relation::Scaling {
                permutation,
                scalings,
            } => {
                #[derive(Serialize)]
                struct Out<'a> {
                    permutation: &'a [usize],
                    scalings: Vec<Vec<String>>,
                }
                Out {
                    permutation,
                    scalings: scalings
                        .iter()
                        .map(|v| v.iter().map(rational::format).collect())
                        .collect(),
                }
                .serialize(s)
            }
            Relation::Invertible { w } => {
                #[derive(Serialize)]
                struct Out<'a> {
                    w: &'a RationalMatrix,
                }
                Out { w }.serialize(s)
            }
        }
    }
}

/// Scalar `λ` with `b = λ a`, if one exists and is nonzero.
fn ratio_of(a: &[Rational], b: &[Rational]) -> Option<Rational> {
    let pivot = a.iter().position(|x| !x.is_zero())?;
    let lambda = &b[pivot] / &a[pivot];
    if lambda.is_zero() {
        return None;
    }
    a.iter()
        .zip(b)
        .all(|(x, y)| &(x * &lambda) == y)
        .then_some(lambda)
}

fn assign(
    r: usize,
    options: &[Vec<(usize, Vec<Rational>)>],
    used: &mut Vec<bool>,
    perm: &mut Vec<usize>,
    lambdas: &mut Vec<Vec<Rational>>,
) -> bool {
    if r == options.len() {
        return true;
    }
    for (s, ls) in &options[r] {
        if used[*s] {
            continue;
        }
        used[*s] = true;
        perm.push(*s);
        lambdas.push(ls.clone());
        if assign(r + 1, options, used, perm, lambdas) {
            return true;
        }
        used[*s] = false;
        perm.pop();
        lambdas.pop();
    }
    false
}

/// Finds `P` and `Λ_i` with `prod Λ_i = I` taking `a` to `b`, verified by exact multiplication.
pub fn relate_scaling(a: &FactorTuple, b: &FactorTuple) -> Option<Relation> {
    let (order, comps) = (a.order(), a.components());
    if b.order() != order || b.components() != comps || b.dim() != a.dim() {
        return None;
    }
    let acols: Vec<Vec<Vec<Rational>>> = a
        .matrices()
        .iter()
        .map(|x| (0..comps).map(|c| x.column(c)).collect())
        .collect();
    let bcols: Vec<Vec<Vec<Rational>>> = b
        .matrices()
        .iter()
        .map(|x| (0..comps).map(|c| x.column(c)).collect())
        .collect();
    // options[r]: columns s of `a` with b_i[:, r] = λ_i a_i[:, s] and prod λ_i = 1
    let options: Vec<Vec<(usize, Vec<Rational>)>> = (0..comps)
        .map(|r| {
            (0..comps)
                .filter_map(|s| {
                    let ls: Option<Vec<Rational>> = (0..order)
                        .map(|i| ratio_of(&acols[i][s], &bcols[i][r]))
                        .collect();
                    let ls = ls?;
                    let prod: Rational = ls.iter().product();
                    prod.is_one().then_some((s, ls))
                })
                .collect()
        })
        .collect();
    let mut perm = Vec::with_capacity(comps);
    let mut per_column = Vec::with_capacity(comps);
    if !assign(0, &options, &mut vec![false; comps], &mut perm, &mut per_column) {
        return None;
    }
    let scalings: Vec<Vec<Rational>> = (0..order)
        .map(|i| per_column.iter().map(|ls| ls[i].clone()).collect())
        .collect();
    let p = RationalMatrix::permutation(&perm);
    for i in 0..order {
        let lhs = a
            .matrix(i)
            .to_matrix()
            .mul(&p)
            .and_then(|ap| ap.mul(&RationalMatrix::diagonal(&scalings[i])))
            .ok()?;
        if lhs != b.matrix(i).to_matrix() {
            return None;
        }
    }
    Some(Relation::Scaling {
        permutation: perm,
        scalings,
    })
}

/// Recovers `W` for an order-two pair and verifies both factor identities exactly.
pub fn relate_invertible(a: &FactorTuple, b: &FactorTuple) -> Option<Relation> {
    if a.order() != 2 || b.order() != 2 {
        return None;
    }
    let (x1, x2) = (a.matrix(0).to_matrix(), a.matrix(1).to_matrix());
    let (y1, y2) = (b.matrix(0).to_matrix(), b.matrix(1).to_matrix());
    let rows = x1.independent_rows();
    if rows.len() != a.components() {
        return None;
    }
    let w = x1.select_rows(&rows).inverse()?.mul(&y1.select_rows(&rows)).ok()?;
    let w_inv = w.inverse()?;
    if x1.mul(&w).ok()? != y1 || x2.mul(&w_inv.transpose()).ok()? != y2 {
        return None;
    }
    Some(Relation::Invertible { w })
}

/// Tuples equivalent under shared column permutation and identity-product scalings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Class {
    pub representative: usize,
    pub members: Vec<usize>,
}

pub(crate) fn partition_classes(tuples: &[FactorTuple]) -> Vec<Class> {
    let mut classes: Vec<Class> = Vec::new();
    for (i, t) in tuples.iter().enumerate() {
        match classes
            .iter_mut()
            .find(|c| relate_scaling(&tuples[c.representative], t).is_some())
        {
            Some(c) => c.members.push(i),
            None => classes.push(Class {
                representative: i,
                members: vec![i],
            }),
        }
    }
    classes
}

#[derive(Clone, Debug)]
pub struct UniquenessCertificate {
    pub reference: FactorTuple,
    /// Every other full-rank generating tuple with its certified relation.
    pub relations: Vec<(FactorTuple, Relation)>,
    /// Full-rank generating tuples that could not be related to the reference.
    pub violations: Vec<FactorTuple>,
    pub full_rank_count: u64,
    pub class_count: usize,
    pub max_class_size: usize,
    pub gamma_bound: BigUint,
}

impl UniquenessCertificate {
    /// No violations and every class within the bound.
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && BigUint::from(self.max_class_size) <= self.gamma_bound
    }
}

/// Certifies that all full-rank factorizations of `t` are related to the first one found.
pub fn uniqueness_census(t: &ExactTensor, m: &ModelSpec, budget: Budget) -> Result<UniquenessCertificate> {
    if m.order() < 2 {
        return Err(Error::Unsupported("uniqueness needs order >= 2".into()));
    }
    let census = count_factorizations(t, m, true, budget)?;
    let tuples = census
        .full_rank_tuples
        .ok_or_else(|| Error::Unsupported("too many full-rank factorizations to certify".into()))?;
    let (reference, others) = tuples.split_first().ok_or(Error::NoFullRankFactorization)?;
    let mut relations = Vec::new();
    let mut violations = Vec::new();
    for other in others {
        let rel = if m.order() == 2 {
            relate_invertible(reference, other)
        } else {
            relate_scaling(reference, other)
        };
        match rel {
            Some(r) => relations.push((other.clone(), r)),
            None => violations.push(other.clone()),
        }
    }
    let classes = census.classes.expect("classes exist whenever tuples do");
    let max_class_size = classes.iter().map(|c| c.members.len()).max().unwrap_or(0);
    Ok(UniquenessCertificate {
        reference: reference.clone(),
        relations,
        violations,
        full_rank_count: census.full_rank,
        class_count: classes.len(),
        max_class_size,
        gamma_bound: gamma_bound(m)?,
    })
}
