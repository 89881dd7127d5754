//! Count the factor pairs behind supersymmetric order-3 tensors over {-1, 1}.
//!
//! cargo run --example factorization_census

use cpdzip::analysis::{
    count_factorizations, example1_model, example1_one_generator, example1_predicted_count, example1_two_generators,
    image_census,
};
use cpdzip::{Budget, Distribution, ExactTensor};

fn main() -> cpdzip::Result<()> {
    let u = || Distribution::uniform(2);
    for n in 2..=5 {
        let m = example1_model(n, u()?, u()?)?;
        let c = count_factorizations(&ExactTensor::zeros(3, n), &m, false, Budget::default())?;
        println!("n={n}: zero tensor has {} generating pairs, probability {}", c.total, c.probability);
    }
    let m = example1_model(4, u()?, u()?)?;
    for (name, t) in [("mixed diagonal", example1_two_generators(4)), ("nonzero diagonal", example1_one_generator(4))] {
        let c = count_factorizations(&t, &m, false, Budget::default())?;
        println!("{name}: {} generating pairs", c.total);
    }

    let m = example1_model(3, u()?, u()?)?;
    let image = image_census(&m, Budget::default())?;
    let explained = image.iter().filter(|e| e.count == example1_predicted_count(&e.tensor)).count();
    println!("n=3: {} distinct tensors, {explained} match the diagonal prediction", image.len());
    Ok(())
}
