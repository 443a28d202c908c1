//! Substitution-closed permutation classes as forests of decorated trees:
//! exact counting, uniform sampling, limit parameters and limit-law experiments.

pub mod analytic;
pub mod class;
pub mod decomposition;
pub mod error;
pub mod harness;
pub mod perm;
pub mod sampler;
pub mod skeleton;
pub mod stats;
pub mod tree;

pub use class::ClassSpec;
pub use error::{Error, Result};
pub use perm::Permutation;
