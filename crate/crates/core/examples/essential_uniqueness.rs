//! Certify that every full-rank co-factorization differs only by permutation and scaling.
//!
//! cargo run --release --example essential_uniqueness

use cpdzip::analysis::{gamma_bound, uniqueness_census, Relation};
use cpdzip::rational::format;
use cpdzip::sampling::{trial_rng, ModelSampler};
use cpdzip::{Alphabet, Budget, Distribution, ModelSpec};

fn main() -> cpdzip::Result<()> {
    let m = ModelSpec::iid(3, 4, 2, Alphabet::signs(), Distribution::uniform(2)?)?;
    println!("class-size bound: {}", gamma_bound(&m)?);
    let sampler = ModelSampler::new(&m);
    let mut trial = 0;
    let mut shown = 0;
    while shown < 5 {
        let tuple = sampler.sample_tuple(&mut trial_rng(1, trial));
        trial += 1;
        if !tuple.is_full_rank() {
            continue;
        }
        let cert = uniqueness_census(&tuple.compose(), &m, Budget::default())?;
        println!(
            "trial {}: {} full-rank tuples, {} class(es), largest {}, violations {}",
            trial - 1,
            cert.full_rank_count,
            cert.class_count,
            cert.max_class_size,
            cert.violations.len()
        );
        if let Some((_, Relation::Scaling { permutation, scalings })) = cert.relations.first() {
            let scalings: Vec<Vec<String>> = scalings.iter().map(|s| s.iter().map(format).collect()).collect();
            println!("  e.g. permutation {permutation:?}, scalings {scalings:?}");
        }
        shown += 1;
    }
    Ok(())
}
