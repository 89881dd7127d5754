//! Fixed-length index codec over the typical factor tuples of a model.

mod codebook;
pub mod codeword;

pub use codebook::{build_codebook, measure_scheme, Codebook, SchemeReport};
pub use codeword::{Codeword, CodewordHeader, Flag};
