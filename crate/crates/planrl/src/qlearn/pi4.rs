//! Fractional base-4 digits of pi, used as a deterministic universal
//! exploration sequence. Digits are generated on demand with the
//! Chudnovsky series and binary splitting, and cached process-wide.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use std::sync::{OnceLock, RwLock};

/// Largest digit index the generator will serve.
pub const DIGIT_BUDGET: usize = 10_000_000;

// cache growth ladder; each level is a full recomputation
const LEVELS: [usize; 4] = [4_096, 65_536, 1_048_576, DIGIT_BUDGET];

fn cache() -> &'static RwLock<Vec<u8>> {
    static CACHE: OnceLock<RwLock<Vec<u8>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(Vec::new()))
}

/// The `i`-th fractional base-4 digit of pi (i = 0 gives the digit right
/// after the point). Returns `None` when `i` exceeds the digit budget.
pub fn pi_base4_digit(i: usize) -> Option<u8> {
    if i >= DIGIT_BUDGET {
        return None;
    }
    {
        let digits = cache().read().unwrap();
        if i < digits.len() {
            return Some(digits[i]);
        }
    }
    let target = LEVELS.iter().copied().find(|&l| l > i).unwrap_or(DIGIT_BUDGET);
    let mut digits = cache().write().unwrap();
    if i >= digits.len() {
        *digits = compute_digits(target);
    }
    Some(digits[i])
}

/// First `n` fractional base-4 digits of pi.
fn compute_digits(n: usize) -> Vec<u8> {
    let prec_bits = 2 * n + 64;
    let pi = pi_scaled(prec_bits as u64);
    // fractional part, truncated to 2n bits = n base-4 digits
    let frac = (&pi - BigUint::from(3u32) * (BigUint::one() << prec_bits)) >> (prec_bits - 2 * n);
    let bytes = frac.to_bytes_be();
    let mut digits = Vec::with_capacity(n);
    let total_pairs = n;
    for idx in 0..total_pairs {
        // digit idx occupies bits [2(n-1-idx), 2(n-1-idx)+1] of frac
        let bit = 2 * (n - 1 - idx);
        let byte_pos = bit / 8;
        let shift = bit % 8;
        let byte = if byte_pos < bytes.len() {
            bytes[bytes.len() - 1 - byte_pos]
        } else {
            0
        };
        digits.push((byte >> shift) & 0b11);
    }
    digits
}

/// floor(pi * 2^prec_bits) via the Chudnovsky series.
fn pi_scaled(prec_bits: u64) -> BigUint {
    // each series term contributes ~47.11 bits
    let terms = (prec_bits / 47 + 2).max(2);
    let (p, q, t) = split(1, terms);
    let _ = p;
    // pi = 426880 * sqrt(10005) * Q / (13591409*Q + T)
    let q_int = BigInt::from(q.clone());
    let denom = BigInt::from(13_591_409u64) * &q_int + t;
    let denom: BigUint = denom.to_biguint().expect("denominator is positive");
    let sqrt10005 = (BigUint::from(10_005u32) << (2 * prec_bits)).sqrt();
    let numer = BigUint::from(426_880u64) * sqrt10005 * q;
    numer / denom
}

/// Binary splitting of the Chudnovsky sum over k in [a, b).
fn split(a: u64, b: u64) -> (BigUint, BigUint, BigInt) {
    if b - a == 1 {
        let k = a;
        let p = BigUint::from(6 * k - 5) * BigUint::from(2 * k - 1) * BigUint::from(6 * k - 1);
        let q = BigUint::from(k) * BigUint::from(k) * BigUint::from(k)
            * BigUint::from(10_939_058_860_032_000u64);
        let mut t = BigInt::from(p.clone()) * BigInt::from(13_591_409u64 + 545_140_134 * k);
        if k % 2 == 1 {
            t = -t;
        }
        (p, q, t)
    } else {
        let m = (a + b) / 2;
        let (p1, q1, t1) = split(a, m);
        let (p2, q2, t2) = split(m, b);
        let p = &p1 * p2;
        let q = q1 * &q2;
        let t = t1 * BigInt::from(q2) + BigInt::from(p1) * t2;
        (p, q, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // hand-expanded from the hexadecimal digits 243F6A8885A308D3131 of pi
    const KNOWN: [u8; 38] = [
        0, 2, 1, 0, 0, 3, 3, 3, 1, 2, 2, 2, 2, 0, 2, 0, 2, 0, 1, 1, 2, 2, 0, 3, 0, 0, 2, 0, 3, 1,
        0, 3, 0, 1, 0, 3, 0, 1,
    ];

    #[test]
    fn leading_digits_match_known_expansion() {
        for (i, &d) in KNOWN.iter().enumerate() {
            assert_eq!(pi_base4_digit(i), Some(d), "digit {i}");
        }
    }

    #[test]
    fn digits_are_a_pure_function() {
        assert_eq!(pi_base4_digit(1234), pi_base4_digit(1234));
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(pi_base4_digit(DIGIT_BUDGET), None);
    }

    #[test]
    fn compute_matches_across_cache_levels() {
        let small = compute_digits(100);
        let large = compute_digits(4_096);
        assert_eq!(&large[..100], &small[..]);
    }
}
