//! The two worked sign-alphabet examples: constructions, predictions and a check table.

use num_traits::Zero;
use serde::Serialize;

use super::bounds::prob_zero_tensor;
use super::census::{brute_force_probability, count_factorizations, image_census};
use crate::error::Result;
use crate::model::{Alphabet, Distribution, ModelSpec};
use crate::numeric::Budget;
use crate::rational;
use crate::tensor::{ExactTensor, FactorMatrix, FactorTuple};

/// Supersymmetric order-3, two-column model over `{-1, 1}`.
pub fn example1_model(n: usize, p: Distribution, q: Distribution) -> Result<ModelSpec> {
    ModelSpec::supersymmetric(3, n, Alphabet::signs(), vec![p, q])
}

/// Order-2, two-column model over `{-1, 1}` with `X_1 = [x, u]`, `X_2 = [y, v]`.
pub fn example2_model(n: usize, px: Distribution, pu: Distribution, py: Distribution, pv: Distribution) -> Result<ModelSpec> {
    ModelSpec::new(2, n, 2, false, vec![Alphabet::signs(); 2], vec![vec![px, pu], vec![py, pv]])
}

fn uniform() -> Distribution {
    Distribution::uniform(2).expect("two symbols")
}

fn columns(mode: usize, a: &[i64], b: &[i64]) -> FactorMatrix {
    let rows: Vec<[i64; 2]> = a.iter().zip(b).map(|(&x, &y)| [x, y]).collect();
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    FactorMatrix::from_int_rows(mode, Alphabet::signs(), &refs).expect("sign entries")
}

/// `a_1 (x) a_1 (x) a_1 + a_2 (x) a_2 (x) a_2`.
pub fn example1_tensor(a1: &[i64], a2: &[i64]) -> ExactTensor {
    FactorTuple::replicated(&columns(0, a1, a2), 3).compose()
}

/// A tensor whose diagonal sums vanish except on the last row, where `a_1 = a_2 = 1`.
pub fn example1_two_generators(n: usize) -> ExactTensor {
    let a1: Vec<i64> = (0..n).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect();
    let mut a2: Vec<i64> = a1.iter().map(|v| -v).collect();
    a2[n - 1] = 1;
    let mut a1 = a1;
    a1[n - 1] = 1;
    example1_tensor(&a1, &a2)
}

/// A tensor with every diagonal sum nonzero (`a_2 = a_1`).
pub fn example1_one_generator(n: usize) -> ExactTensor {
    let a: Vec<i64> = (0..n).map(|j| if j % 3 == 1 { -1 } else { 1 }).collect();
    example1_tensor(&a, &a)
}

/// Generator count implied by the diagonal `T_iii = a_1i + a_2i`: all zero gives
/// the zero tensor and `2^n` pairs, none zero pins the pair, a mix allows only the column swap.
pub fn example1_predicted_count(t: &ExactTensor) -> u64 {
    let n = t.dim();
    let zeros = (0..n).filter(|&i| t.get(&[i, i, i]).is_zero()).count();
    match zeros {
        0 => 1,
        z if z == n => 1 << n,
        _ => 2,
    }
}

/// `x y^T + u v^T`.
pub fn example2_tensor(x: &[i64], u: &[i64], y: &[i64], v: &[i64]) -> ExactTensor {
    FactorTuple::new(vec![columns(0, x, u), columns(1, y, v)])
        .expect("matching shapes")
        .compose()
}

/// Zero first row and exactly `m` all-nonzero rows, from
/// `x = (1, 1^m, 1...)`, `u = (-1, 1^m, -1...)`, `y = v = 1`.
pub fn example2_nonzero_rows(n: usize, m: usize) -> ExactTensor {
    assert!(m >= 1 && m < n, "need 1 <= m < n");
    let x = vec![1i64; n];
    let u: Vec<i64> = (0..n).map(|j| if (1..=m).contains(&j) { 1 } else { -1 }).collect();
    let ones = vec![1i64; n];
    example2_tensor(&x, &u, &ones, &ones)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExampleCheck {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl ExampleCheck {
    fn new(name: impl Into<String>, expected: impl ToString, observed: impl ToString) -> Self {
        let (expected, observed) = (expected.to_string(), observed.to_string());
        ExampleCheck {
            name: name.into(),
            pass: expected == observed,
            expected,
            observed,
        }
    }
}

fn count(t: &ExactTensor, m: &ModelSpec, budget: Budget) -> Result<u64> {
    Ok(count_factorizations(t, m, false, budget)?.total)
}

/// Every count and closed form of the two examples, checked by exhaustive search.
pub fn verify_examples(budget: Budget) -> Result<Vec<ExampleCheck>> {
    let mut out = Vec::new();
    for n in 2..=5 {
        let m = example1_model(n, uniform(), uniform())?;
        out.push(ExampleCheck::new(
            format!("example1 zero tensor n={n}"),
            1u64 << n,
            count(&ExactTensor::zeros(3, n), &m, budget)?,
        ));
    }
    let m = example1_model(4, uniform(), uniform())?;
    out.push(ExampleCheck::new(
        "example1 one nonzero diagonal sum n=4",
        2,
        count(&example1_two_generators(4), &m, budget)?,
    ));
    out.push(ExampleCheck::new(
        "example1 all diagonal sums nonzero n=4",
        1,
        count(&example1_one_generator(4), &m, budget)?,
    ));

    let m = example1_model(3, uniform(), uniform())?;
    let image = image_census(&m, budget)?;
    let explained = image
        .iter()
        .filter(|e| e.count == example1_predicted_count(&e.tensor))
        .count();
    out.push(ExampleCheck::new(
        "example1 every tensor explained n=3",
        image.len(),
        explained,
    ));

    for n in 2..=3 {
        let m = example2_model(n, uniform(), uniform(), uniform(), uniform())?;
        out.push(ExampleCheck::new(
            format!("example2 zero matrix n={n}"),
            1u64 << (2 * n + 1),
            count(&ExactTensor::zeros(2, n), &m, budget)?,
        ));
    }
    let m = example2_model(4, uniform(), uniform(), uniform(), uniform())?;
    for rows in 1..=3 {
        out.push(ExampleCheck::new(
            format!("example2 {rows} nonzero rows n=4"),
            1u64 << (4 - rows + 2),
            count(&example2_nonzero_rows(4, rows), &m, budget)?,
        ));
    }

    let skew = |a: i64, b: i64, c: i64| Distribution::from_ratios(&[(a, c), (b, c)]);
    let mut closed = Vec::new();
    for n in 2..=3 {
        closed.push((format!("example1 uniform n={n}"), example1_model(n, uniform(), uniform())?));
        closed.push((
            format!("example1 skewed n={n}"),
            example1_model(n, skew(1, 3, 4)?, skew(2, 1, 3)?)?,
        ));
    }
    closed.push((
        "example2 uniform n=2".into(),
        example2_model(2, uniform(), uniform(), uniform(), uniform())?,
    ));
    for (name, m) in closed {
        let zero = ExactTensor::zeros(m.order(), m.dim());
        out.push(ExampleCheck::new(
            format!("{name} Pr(T=0)"),
            rational::format(&brute_force_probability(&zero, &m, budget)?),
            rational::format(&prob_zero_tensor(&m)?),
        ));
    }
    Ok(out)
}
