//! Compose a CPD tensor and check the unfolding identity against a Khatri-Rao chain.
//!
//! cargo run --example compose_and_unfold

use cpdzip::sampling::{trial_rng, ModelSampler};
use cpdzip::tensor::khatri_rao_chain;
use cpdzip::{Alphabet, Distribution, ModelSpec};

fn main() -> cpdzip::Result<()> {
    let m = ModelSpec::iid(3, 3, 2, Alphabet::from_ints(&[-1, 0, 2])?, Distribution::uniform(3)?)?;
    let tuple = ModelSampler::new(&m).sample_tuple(&mut trial_rng(42, 0));
    let t = tuple.compose();
    println!("factors: {tuple:?}");
    println!("tensor:  {t:?}");

    let xs: Vec<_> = tuple.matrices().iter().map(|x| x.to_matrix()).collect();
    for mode in 0..3 {
        // unfold(T, k)^T = (X_N ⊙ ... ⊙ X_1 without X_k) X_k^T, highest mode leftmost
        let others: Vec<_> = (0..3).rev().filter(|&i| i != mode).map(|i| &xs[i]).collect();
        let kr = khatri_rao_chain(&others)?;
        let lhs = t.unfold(mode)?.transpose();
        let rhs = kr.mul(&xs[mode].transpose())?;
        println!("mode {mode}: unfolding identity holds = {}", lhs == rhs);
    }
    Ok(())
}
