//! Uniform random generation of packed trees and class members, and
//! simulation of the two limit trees.

mod class;
mod conditioned;
mod exact;
mod gadget;
mod limit;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use class::{sample_uniform_class_permutation, ClassSampler};
pub use conditioned::{
    gw_unconditioned, sample_conditioned_packed_tree, sample_conditioned_shape, LeafConditioned, TreeMethod,
};
pub use exact::{random_below, ExactTables};
pub use gadget::{decorate, sample_gadget};
pub use limit::{
    sample_limit_pointed_tree, sample_limit_skeleton_tree, sample_limit_window, sample_stretch, LimitSkeletonTree,
    LimitTreeOptions, PointedPackedTree,
};

/// The random generator used everywhere.
pub type Rng = ChaCha8Rng;

/// Independent stream `index` of `seed`; results do not depend on scheduling.
pub fn stream_rng(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Recursive method over exact big-integer counts.
    Exact,
    /// Leaf-conditioned Galton–Watson trees.
    GwRejection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub method: Method,
    /// Abort a Galton–Watson attempt once it has more than `vertex_cap_factor * n` vertices.
    pub vertex_cap_factor: usize,
    pub max_attempts: u64,
    /// Order of the exact tables (`Method::Exact` only).
    pub exact_order: usize,
    /// Beyond this many leaves, leaf conditioning uses the cycle-lemma method
    /// instead of rejection.
    pub rejection_max_n: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            method: Method::GwRejection,
            vertex_cap_factor: 64,
            max_attempts: 100_000_000,
            exact_order: 128,
            rejection_max_n: 256,
        }
    }
}

impl SamplerConfig {
    pub fn exact(seed: u64, order: usize) -> Self {
        SamplerConfig { seed, method: Method::Exact, exact_order: order, ..Default::default() }
    }

    pub fn gw(seed: u64) -> Self {
        SamplerConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.vertex_cap_factor == 0 || self.max_attempts == 0 || self.exact_order == 0 {
            return crate::error::invalid("sampler caps must be positive");
        }
        Ok(())
    }
}
