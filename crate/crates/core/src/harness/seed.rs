//! Per-trial seed derivation.
//!
//! `seed = mix(mix(mix(base) ^ cell) ^ trial)` where `mix` is the SplitMix64
//! finalizer. Every trial can be reproduced from `(base, cell, trial)` alone,
//! so trials may run in any order or on any thread.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(base_seed: u64, cell: u64, trial: u64) -> u64 {
    mix(mix(mix(base_seed) ^ cell) ^ trial)
}
