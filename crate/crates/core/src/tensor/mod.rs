//! Exact tensors, factor matrices and the linear algebra around them.

mod compose;
mod dense;
pub mod dump;
mod factor;
mod matrix;

pub use compose::{Composer, PrefixComposer, TensorKey};
pub(crate) use compose::{Kernel, Ring};
pub use dense::{cpd_compose, outer_product, ExactTensor, TensorJson};
pub use factor::{kruskal_condition, FactorMatrix, FactorTuple};
pub use matrix::{khatri_rao, khatri_rao_chain, kruskal_rank, rank_exact, RationalMatrix};
