//! Induced subgraph frequencies of small dense graphs.
//!
//! A graph is mapped to the vector of frequencies of its induced `k`-node
//! subgraphs. On top of that coordinate system the crate provides a
//! continuous-time edge formation walk with triadic closure whose stationary
//! distribution traces the empirical backbone of the space, a linear program
//! over translated homomorphism inequalities that bounds the feasible region,
//! synthetic graph generators, global structural features and a logistic
//! regression harness for classifying graph collections.

pub mod catalog;
pub mod census;
pub mod classify;
pub mod efrw;
pub mod error;
pub mod extremal;
pub mod features;
pub mod generators;
pub mod graph;
pub mod lp;

pub use catalog::{Catalog, GraphClass};
pub use error::{Error, Result};
pub use graph::{CanonicalCode, Graph};
pub use census::{CensusMethod, FrequencyVector};

/// Seed for item `index` of a collection generated or sampled under `seed`
/// (SplitMix64 finalizer over the combined value).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
