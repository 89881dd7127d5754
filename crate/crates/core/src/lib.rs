//! Exact-arithmetic lab for compressing random CPD tensors over finite alphabets.

pub mod analysis;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod model;
pub mod numeric;
pub mod rational;
pub mod sampling;
pub mod tensor;
pub mod typicality;

pub use error::{CodewordError, Error, Result};
pub use model::{Alphabet, Distribution, ModelSpec, RawModel};
pub use numeric::Budget;
pub use rational::Rational;
pub use tensor::{ExactTensor, FactorMatrix, FactorTuple, RationalMatrix};
