// SPDX-License-Identifier: Apache-2.0

//! Helpers for unsigned fixed-width values stored as `BigUint`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `2^width - 1`.
pub fn mask(width: u32) -> BigUint {
    (BigUint::one() << width as usize) - BigUint::one()
}

/// Reduce `value` modulo `2^width`.
pub fn truncate(value: &BigUint, width: u32) -> BigUint {
    value & mask(width)
}

pub fn fits(value: &BigUint, width: u32) -> bool {
    value.bits() <= width as u64
}

pub fn bit(value: &BigUint, index: u32) -> bool {
    value.bit(index as u64)
}

pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> BigUint {
    let mut out = BigUint::zero();
    for (i, b) in bits.into_iter().enumerate() {
        if b {
            out.set_bit(i as u64, true);
        }
    }
    out
}

pub fn from_bool(b: bool) -> BigUint {
    if b {
        BigUint::one()
    } else {
        BigUint::zero()
    }
}

/// Parse a decimal or `0x`/`0b` prefixed unsigned literal.
pub fn parse_literal(text: &str) -> Option<BigUint> {
    let t = text.trim().replace('_', "");
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        BigUint::parse_bytes(hex.as_bytes(), 16)
    } else if let Some(bin) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        BigUint::parse_bytes(bin.as_bytes(), 2)
    } else {
        BigUint::parse_bytes(t.as_bytes(), 10)
    }
}

/// Minimal index width for a loop of `count` iterations: `ceil(log2(max(count, 2)))`.
pub fn index_width(count: u64) -> u32 {
    let n = count.max(2);
    64 - (n - 1).leading_zeros()
}
