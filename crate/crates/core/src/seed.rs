//! Per-run random streams derived from a single master seed.
//!
//! The run seed is `splitmix64_mix(master_seed ^ (run_index * GOLDEN_GAMMA))`.
//! Multiplication by an odd constant, XOR with a fixed word and the
//! SplitMix64 finalizer are all bijections on `u64`, so distinct run indices
//! under one master seed always receive distinct run seeds. The stream
//! itself is ChaCha8 seeded through `SeedableRng::seed_from_u64`, which is
//! specified bit-for-bit and does not depend on the platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random stream owned by one simulation run.
pub type RunRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub run_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        Self {
            master_seed,
            run_index,
        }
    }

    pub fn rng(&self) -> RunRng {
        RunRng::seed_from_u64(derive_run_seed(*self))
    }
}

/// SplitMix64 output function (Steele, Lea & Flood 2014).
fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_run_seed(spec: SeedSpec) -> u64 {
    splitmix64_mix(spec.master_seed ^ spec.run_index.wrapping_mul(GOLDEN_GAMMA))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::Rng;

    use super::*;

    #[test]
    fn neighbouring_runs_differ() {
        let s = 0xDEAD_BEEF;
        assert_ne!(
            derive_run_seed(SeedSpec::new(s, 0)),
            derive_run_seed(SeedSpec::new(s, 1))
        );
    }

    #[test]
    fn deterministic() {
        let spec = SeedSpec::new(7, 42);
        assert_eq!(derive_run_seed(spec), derive_run_seed(spec));
        let a: Vec<u64> = (0..8).map(|_| spec.rng().random()).collect();
        let b: Vec<u64> = (0..8).map(|_| spec.rng().random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ten_thousand_runs_get_distinct_seeds() {
        for master in [0u64, 1, 7, u64::MAX] {
            let seeds: HashSet<u64> = (0..10_000)
                .map(|i| derive_run_seed(SeedSpec::new(master, i)))
                .collect();
            assert_eq!(seeds.len(), 10_000);
        }
    }

    #[test]
    fn mixing_constants_are_pinned() {
        // splitmix64 reference: first output for state 0 after one increment
        assert_eq!(splitmix64_mix(GOLDEN_GAMMA), 0xE220_A839_7B1D_CDAF);
    }
}
