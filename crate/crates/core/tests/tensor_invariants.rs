use cpdzip::rational::{int, ratio};
use cpdzip::tensor::{
    dump, khatri_rao, khatri_rao_chain, kruskal_rank, outer_product, rank_exact, Composer, FactorMatrix, FactorTuple,
    RationalMatrix,
};
use cpdzip::{Alphabet, Distribution, ExactTensor, ModelSpec, Rational};
use proptest::prelude::*;

fn alphabet() -> Alphabet {
    Alphabet::new(vec![int(-2), int(-1), int(0), ratio(1, 2), int(3)]).unwrap()
}

fn model(order: usize, dim: usize, comps: usize) -> ModelSpec {
    ModelSpec::iid(order, dim, comps, alphabet(), Distribution::uniform(5).unwrap()).unwrap()
}

prop_compose! {
    fn tuple()(order in 1usize..=4, dim in 1usize..=3, comps in 1usize..=3)
        (syms in prop::collection::vec(prop::collection::vec(0u16..5, dim * comps), order), order in Just(order), dim in Just(dim), comps in Just(comps))
        -> FactorTuple {
        let m = model(order, dim, comps);
        let refs: Vec<&[u16]> = syms.iter().map(Vec::as_slice).collect();
        FactorTuple::from_free_symbols(&m, &refs)
    }
}

fn sum_of_outer_products(t: &FactorTuple) -> ExactTensor {
    let (order, dim) = (t.order(), t.dim());
    let mut acc = vec![Rational::from_integer(0.into()); dim.pow(order as u32)];
    for c in 0..t.components() {
        let cols: Vec<Vec<Rational>> = t.matrices().iter().map(|x| x.column(c)).collect();
        for (a, v) in acc.iter_mut().zip(outer_product(&cols).unwrap().entries()) {
            *a += v;
        }
    }
    ExactTensor::new(order, dim, acc).unwrap()
}

fn sign_matrix(rows: usize, cols: usize, bits: &[bool]) -> RationalMatrix {
    RationalMatrix::new(rows, cols, bits.iter().map(|&b| if b { int(1) } else { int(-1) }).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_a_sum_of_outer_products(t in tuple()) {
        prop_assert_eq!(t.compose(), sum_of_outer_products(&t));
    }

    #[test]
    fn unfolding_matches_khatri_rao(t in tuple().prop_filter("order >= 2", |t| t.order() >= 2)) {
        let tensor = t.compose();
        let xs: Vec<RationalMatrix> = t.matrices().iter().map(FactorMatrix::to_matrix).collect();
        for k in 0..t.order() {
            let others: Vec<&RationalMatrix> = (0..t.order()).rev().filter(|&i| i != k).map(|i| &xs[i]).collect();
            let rhs = khatri_rao_chain(&others).unwrap().mul(&xs[k].transpose()).unwrap();
            prop_assert_eq!(tensor.unfold(k).unwrap().transpose(), rhs);
        }
    }

    #[test]
    fn outer_product_is_multilinear(
        a in prop::collection::vec(-5i64..5, 3),
        b in prop::collection::vec(-5i64..5, 3),
        y in prop::collection::vec(-5i64..5, 3),
        s in -4i64..4,
    ) {
        let v = |xs: &[i64]| xs.iter().map(|&x| int(x)).collect::<Vec<_>>();
        let mixed: Vec<Rational> = a.iter().zip(&b).map(|(&p, &q)| int(s * p + q)).collect();
        let lhs = outer_product(&[mixed, v(&y)]).unwrap();
        let ta = outer_product(&[v(&a), v(&y)]).unwrap();
        let tb = outer_product(&[v(&b), v(&y)]).unwrap();
        let rhs: Vec<Rational> = ta.entries().iter().zip(tb.entries()).map(|(p, q)| p * int(s) + q).collect();
        prop_assert_eq!(lhs.entries(), rhs.as_slice());
    }

    #[test]
    fn permutation_and_unit_scaling_keep_the_tensor(
        bits in prop::collection::vec(any::<bool>(), 3 * 3 * 2),
        flips in prop::collection::vec(any::<bool>(), 2 * 2),
        swap in any::<bool>(),
    ) {
        let xs: Vec<RationalMatrix> = bits.chunks(6).map(|c| sign_matrix(3, 2, c)).collect();
        let perm = RationalMatrix::permutation(if swap { &[1, 0] } else { &[0, 1] });
        // Λ_1, Λ_2 free signs, Λ_3 = (Λ_1 Λ_2)^{-1}
        let sign = |b: bool| if b { int(-1) } else { int(1) };
        let l1: Vec<Rational> = (0..2).map(|c| sign(flips[c])).collect();
        let l2: Vec<Rational> = (0..2).map(|c| sign(flips[2 + c])).collect();
        let l3: Vec<Rational> = (0..2).map(|c| Rational::from_integer(1.into()) / (&l1[c] * &l2[c])).collect();
        let build = |ms: Vec<RationalMatrix>| {
            FactorTuple::new(
                ms.iter().enumerate().map(|(i, m)| FactorMatrix::from_matrix(i, Alphabet::signs(), m).unwrap()).collect(),
            )
            .unwrap()
        };
        let moved: Vec<RationalMatrix> = xs
            .iter()
            .zip([&l1, &l2, &l3])
            .map(|(x, l)| x.mul(&perm).unwrap().mul(&RationalMatrix::diagonal(l)).unwrap())
            .collect();
        prop_assert_eq!(build(xs).compose(), build(moved).compose());
    }

    #[test]
    fn sylvester_rank_inequality(
        a in prop::collection::vec(-2i64..=2, 12),
        b in prop::collection::vec(-2i64..=2, 12),
    ) {
        let a = RationalMatrix::from_ints(3, 4, &a).unwrap();
        let b = RationalMatrix::from_ints(4, 3, &b).unwrap();
        let (ra, rb, rab) = (rank_exact(&a), rank_exact(&b), rank_exact(&a.mul(&b).unwrap()));
        prop_assert!(rab <= ra.min(rb));
        prop_assert!(rab + 4 >= ra + rb);
    }

    #[test]
    fn khatri_rao_kruskal_rank_bound(
        a in prop::collection::vec(-1i64..=1, 9),
        b in prop::collection::vec(-1i64..=1, 9),
    ) {
        let a = RationalMatrix::from_ints(3, 3, &a).unwrap();
        let b = RationalMatrix::from_ints(3, 3, &b).unwrap();
        let (ka, kb) = (kruskal_rank(&a), kruskal_rank(&b));
        let kab = kruskal_rank(&khatri_rao(&a, &b).unwrap());
        if ka >= 1 && kb >= 1 {
            prop_assert!(kab >= (ka + kb - 1).min(3));
        }
    }

    #[test]
    fn composer_keys_identify_tensors(
        (order, dim, a, b, swap) in (1usize..=3, 1usize..=3).prop_flat_map(|(order, dim)| {
            let syms = prop::collection::vec(prop::collection::vec(0u16..3, dim * 2), order);
            (Just(order), Just(dim), syms.clone(), syms, any::<bool>())
        }),
    ) {
        let m = model(order, dim, 2);
        let c = Composer::new(&m);
        let build = |s: &[Vec<u16>]| {
            let refs: Vec<&[u16]> = s.iter().map(Vec::as_slice).collect();
            FactorTuple::from_free_symbols(&m, &refs).compose()
        };
        // swapping the two columns of every factor keeps the tensor
        let b = if swap {
            a.iter().map(|x| x[dim..].iter().chain(&x[..dim]).copied().collect()).collect()
        } else {
            b
        };
        let (ta, tb) = (build(&a), build(&b));
        prop_assert_eq!(c.key_of(&ta).unwrap() == c.key_of(&tb).unwrap(), ta == tb);
        prop_assert_eq!(c.key(&a.iter().map(Vec::as_slice).collect::<Vec<_>>()), c.key_of(&ta).unwrap());
    }
}

fn golden_tuple() -> FactorTuple {
    let x = |mode, rows: &[&[i64]]| {
        FactorMatrix::from_int_rows(mode, Alphabet::from_ints(&[-1, 0, 2]).unwrap(), rows).unwrap()
    };
    FactorTuple::new(vec![
        x(0, &[&[2, -1], &[0, 2]]),
        x(1, &[&[-1, -1], &[2, 0]]),
        x(2, &[&[0, 2], &[-1, 2]]),
    ])
    .unwrap()
}

#[test]
fn golden_tensor_dump_is_stable() {
    let golden = include_bytes!("data/golden_tensor.tcpt");
    let t = golden_tuple().compose();
    assert_eq!(dump::write_tensor(&t).unwrap(), golden.to_vec());
    assert_eq!(dump::read_tensor(golden).unwrap(), t);
}

#[test]
fn golden_matrix_dump_is_stable() {
    let golden = include_bytes!("data/golden_factor_mode1.tcpm");
    let x = golden_tuple().matrix(1).to_matrix();
    assert_eq!(dump::write_matrix(&x, 1).unwrap(), golden.to_vec());
    assert_eq!(dump::read_matrix(golden).unwrap(), (1, x));
}
