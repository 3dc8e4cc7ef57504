//! Exact comparison of two-word collision probabilities: a less-hashing Bloom
//! filter setting two of `bits` positions versus XASH matching `K` rare
//! characters in their segments.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::xash::{XashParams, ALPHABET_SIZE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyticCheck {
    pub bits: usize,
    pub k: usize,
    /// `2 / (bits (bits - 1))`.
    pub lhbf_side: BigRational,
    /// `(1/β) · Π_{i=1..K} 1/(37 - i + 1)`.
    pub xash_side: BigRational,
    pub char_only_holds: bool,
    /// `1 / (bits (bits - 1))`.
    pub lhbf_side_with_length: BigRational,
    /// `(1/|a_l|) · xash_side`.
    pub xash_side_with_length: BigRational,
    pub with_length_holds: bool,
}

/// Display form of an [`AnalyticCheck`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalyticRow {
    pub bits: usize,
    pub k: usize,
    pub lhbf_side: String,
    pub xash_side: String,
    pub char_only_holds: bool,
    pub lhbf_side_with_length: String,
    pub xash_side_with_length: String,
    pub with_length_holds: bool,
}

impl From<&AnalyticCheck> for AnalyticRow {
    fn from(c: &AnalyticCheck) -> Self {
        AnalyticRow {
            bits: c.bits,
            k: c.k,
            lhbf_side: c.lhbf_side.to_string(),
            xash_side: c.xash_side.to_string(),
            char_only_holds: c.char_only_holds,
            lhbf_side_with_length: c.lhbf_side_with_length.to_string(),
            xash_side_with_length: c.xash_side_with_length.to_string(),
            with_length_holds: c.with_length_holds,
        }
    }
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Evaluates both inequalities exactly for `K` characters in a `bits`-wide hash.
pub fn analytic_collision_check(bits: usize, k: usize) -> Result<AnalyticCheck> {
    if !(1..=ALPHABET_SIZE).contains(&k) {
        return Err(Error::Param(format!("K = {k} outside 1..={ALPHABET_SIZE}")));
    }
    let p = XashParams::compute(bits, 1)?;
    let a = bits as u64;
    let lhbf = ratio(2, a * (a - 1));
    let mut xash = ratio(1, p.beta as u64);
    for i in 1..=k as u64 {
        xash *= ratio(1, ALPHABET_SIZE as u64 - i + 1);
    }
    let lhbf_len = ratio(1, a * (a - 1));
    let xash_len = &xash * ratio(1, p.length_bits as u64);
    Ok(AnalyticCheck {
        bits,
        k,
        char_only_holds: lhbf > xash,
        with_length_holds: lhbf_len > xash_len,
        lhbf_side: lhbf,
        xash_side: xash,
        lhbf_side_with_length: lhbf_len,
        xash_side_with_length: xash_len,
    })
}

/// Smallest `K` from which an inequality holds for every larger `K` up to 37.
pub fn threshold(bits: usize, with_length: bool) -> Result<Option<usize>> {
    let holds = (1..=ALPHABET_SIZE)
        .map(|k| {
            analytic_collision_check(bits, k).map(|c| if with_length { c.with_length_holds } else { c.char_only_holds })
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok((0..holds.len()).find(|&i| holds[i..].iter().all(|h| *h)).map(|i| i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sides_are_exact() {
        let c = analytic_collision_check(128, 1).unwrap();
        assert_eq!(c.lhbf_side, ratio(1, 8128));
        assert_eq!(c.xash_side, ratio(1, 111));
        assert!(!c.char_only_holds);
        let c3 = analytic_collision_check(128, 3).unwrap();
        assert_eq!(c3.xash_side, ratio(1, 3 * 37 * 36 * 35));
        assert_eq!(c3.xash_side_with_length, ratio(1, 17 * 3 * 37 * 36 * 35));
        assert!(ratio(1, 1) > c3.lhbf_side);
    }

    #[test]
    fn monotone_in_k() {
        for bits in [128, 256, 512] {
            let mut prev = analytic_collision_check(bits, 1).unwrap();
            for k in 2..=37 {
                let c = analytic_collision_check(bits, k).unwrap();
                assert!(c.xash_side <= prev.xash_side);
                assert!(!prev.char_only_holds || c.char_only_holds);
                prev = c;
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        assert!(analytic_collision_check(128, 0).is_err());
        assert!(analytic_collision_check(128, 38).is_err());
        assert!(analytic_collision_check(100, 3).is_err());
    }
}
