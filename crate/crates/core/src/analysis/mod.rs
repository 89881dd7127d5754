//! Factorization counting, essential uniqueness and the closed forms of the worked examples.

mod bounds;
mod census;
mod scenarios;
mod uniqueness;

pub use bounds::{exact_rank_deficiency_prob, full_rank_prob_bound, gamma_bound, prob_zero_tensor, FullRankBound};
pub use census::{
    brute_force_probability, count_factorizations, image_census, tensor_probability, FactorizationCensus, ImageEntry,
};
pub use scenarios::{
    example1_model, example1_one_generator, example1_predicted_count, example1_tensor, example1_two_generators,
    example2_model, example2_nonzero_rows, example2_tensor, verify_examples, ExampleCheck,
};
pub use uniqueness::{relate_invertible, relate_scaling, uniqueness_census, Class, Relation, UniquenessCertificate};
