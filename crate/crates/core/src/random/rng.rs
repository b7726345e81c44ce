// SPDX-License-Identifier: Apache-2.0

//! Deterministic SplitMix64 generator.
//!
//! Update rule (pinned so seeds are portable): the state advances by
//! `0x9e3779b97f4a7c15` (wrapping); the output is the state mixed by
//! `z = (z ^ z>>30) * 0xbf58476d1ce4e5b9; z = (z ^ z>>27) * 0x94d049bb133111eb;
//! z ^ z>>31`. The initial state is the seed itself.

use num_bigint::BigUint;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::bits;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: SplitMix64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng {
            seed,
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform in `0..bound`; `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Uniform `width`-bit value, filled from the low 64-bit word upwards.
    pub fn bits(&mut self, width: u32) -> BigUint {
        let words = width.div_ceil(64).max(1);
        let mut v = BigUint::default();
        for i in 0..words {
            v |= BigUint::from(self.next_u64()) << (64 * i as usize);
        }
        bits::truncate(&v, width)
    }

    /// Independent child stream seeded from this one.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }
}

/// Seed from text: decimal, `0x` hex, or otherwise the 64-bit FNV-1a hash of
/// the bytes.
pub fn parse_seed(text: &str) -> u64 {
    let t = text.trim();
    if let Ok(v) = t.parse::<u64>() {
        return v;
    }
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        if let Ok(v) = u64::from_str_radix(hex, 16) {
            return v;
        }
    }
    let mut h: u64 = 0xcbf29ce484222325;
    for b in t.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
