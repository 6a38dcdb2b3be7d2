//! Inputs shared by the benchmarks.

use contractlab::fixtures::{random_contract, random_instance, rng, RandomKind, RandomSpec};
use contractlab::{ratio, Contract, Instance};

/// A seeded instance with `sizes[i]` actions for agent `i`.
pub fn instance(kind: RandomKind, seed: u64, sizes: &[usize]) -> Instance {
    random_instance(&RandomSpec::new(kind, seed, sizes.to_vec())).expect("sizes within caps")
}

/// A seeded contract with shares on multiples of 1/12 summing to at most 1.
pub fn contract(seed: u64, n: usize) -> Contract {
    random_contract(&mut rng(seed), n, 12, &ratio(1, 1))
}
