//! Tensor networks for finite Markov decision processes: exact expected
//! return via matrix-product contraction, greedy single-site policy
//! optimisation, model-learning planning loops, and SVD compression of joint
//! multi-agent transitions.

pub mod decompose;
pub mod engine;
pub mod error;
pub mod fmdp;
pub mod mpo;
pub mod optimizer;
pub mod planner;
pub mod tensor;
pub mod walker;

pub use error::{Error, Result};
pub use tensor::DenseTensor;

// Compile every code block in the guide as a doc-test so the book cannot
// drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/fmdp.md")]
    mod fmdp {}
    #[doc = include_str!("../../../book/src/return-mpo.md")]
    mod return_mpo {}
    #[doc = include_str!("../../../book/src/contraction.md")]
    mod contraction {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/walker.md")]
    mod walker {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/multi-agent.md")]
    mod multi_agent {}
    #[doc = include_str!("../../../book/src/svd-compression.md")]
    mod svd_compression {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
