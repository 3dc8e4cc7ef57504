//! Fixed-width bit vectors used for value hashes and row super keys.
//!
//! Bit 0 is the left-most bit. Internally bit `i` lives in word `i / 64` at
//! position `63 - i % 64`, so the words read as a big-endian bit string and
//! serialize to bytes with bit 0 as the most-significant bit of byte 0.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported width in bits.
pub const MAX_BITS: usize = 512;
const WORDS: usize = MAX_BITS / 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitArray {
    width: u16,
    words: [u64; WORDS],
}

impl BitArray {
    /// All-zero array of `width` bits. Panics if `width` is 0 or above [`MAX_BITS`].
    pub fn zeros(width: usize) -> Self {
        assert!(
            (1..=MAX_BITS).contains(&width),
            "bit width {width} outside 1..={MAX_BITS}"
        );
        BitArray {
            width: width as u16,
            words: [0; WORDS],
        }
    }

    /// Parses a string of `0`/`1` characters, left-most character is bit 0.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n == 0 || n > MAX_BITS {
            return Err(Error::Param(format!("bit string of length {n}")));
        }
        let mut out = BitArray::zeros(n);
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i),
                other => return Err(Error::Param(format!("invalid bit character {other:?}"))),
            }
        }
        Ok(out)
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width());
        self.words[i / 64] >> (63 - i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        assert!(i < self.width(), "bit {i} out of range for width {}", self.width);
        self.words[i / 64] |= 1 << (63 - i % 64);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        assert!(i < self.width(), "bit {i} out of range for width {}", self.width);
        self.words[i / 64] &= !(1 << (63 - i % 64));
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width()).filter(move |&i| self.get(i))
    }

    fn check_width(&self, other: &BitArray) -> Result<()> {
        if self.width != other.width {
            return Err(Error::WidthMismatch {
                left: self.width(),
                right: other.width(),
            });
        }
        Ok(())
    }

    pub fn or(&self, other: &BitArray) -> Result<BitArray> {
        self.check_width(other)?;
        let mut out = *self;
        out.or_assign_unchecked(other);
        Ok(out)
    }

    pub fn and(&self, other: &BitArray) -> Result<BitArray> {
        self.check_width(other)?;
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a &= b;
        }
        Ok(out)
    }

    pub fn or_assign(&mut self, other: &BitArray) -> Result<()> {
        self.check_width(other)?;
        self.or_assign_unchecked(other);
        Ok(())
    }

    #[inline]
    pub(crate) fn or_assign_unchecked(&mut self, other: &BitArray) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    /// True iff every set bit of `self` is also set in `other`, i.e.
    /// `self | other == other`.
    pub fn is_covered_by(&self, other: &BitArray) -> Result<bool> {
        self.check_width(other)?;
        Ok(self.is_covered_by_unchecked(other))
    }

    #[inline]
    pub(crate) fn is_covered_by_unchecked(&self, other: &BitArray) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    /// Number of bytes used by [`BitArray::to_bytes`].
    pub fn byte_len(&self) -> usize {
        self.width().div_ceil(8)
    }

    /// Packs into `ceil(width / 8)` bytes, bit 0 = MSB of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.byte_len();
        self.words
            .iter()
            .flat_map(|w| w.to_be_bytes())
            .take(n)
            .collect()
    }

    pub fn from_bytes(width: usize, bytes: &[u8]) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&width) {
            return Err(Error::Param(format!("bit width {width}")));
        }
        let mut out = BitArray::zeros(width);
        if bytes.len() != out.byte_len() {
            return Err(Error::Param(format!(
                "expected {} bytes for width {width}, got {}",
                out.byte_len(),
                bytes.len()
            )));
        }
        for (i, &b) in bytes.iter().enumerate() {
            out.words[i / 8] |= (b as u64) << (56 - 8 * (i % 8));
        }
        // Padding bits past `width` must be zero.
        for i in width..out.byte_len() * 8 {
            if out.words[i / 64] >> (63 - i % 64) & 1 == 1 {
                return Err(Error::Param("non-zero padding bits".into()));
            }
        }
        Ok(out)
    }

    /// Circular left rotation of `[start, start + len)` by `amount mod len`.
    /// Bits outside the region are untouched.
    pub fn rotate_region(&self, start: usize, len: usize, amount: usize) -> Result<BitArray> {
        if len == 0 || start + len > self.width() {
            return Err(Error::Param(format!(
                "region [{start}, {}) outside width {}",
                start + len,
                self.width
            )));
        }
        let shift = amount % len;
        let mut out = *self;
        for offset in 0..len {
            out.clear(start + offset);
        }
        for offset in 0..len {
            if self.get(start + offset) {
                out.set(start + (offset + len - shift) % len);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for BitArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitArray({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> BitArray {
        BitArray::from_bit_str(s).unwrap()
    }

    #[test]
    fn rotation_example() {
        let r = b("01100101").rotate_region(0, 8, 3).unwrap();
        assert_eq!(r.to_string(), "00101011");
    }

    #[test]
    fn rotation_identities() {
        let x = b("1101001110");
        assert_eq!(x.rotate_region(2, 8, 0).unwrap(), x);
        assert_eq!(x.rotate_region(2, 8, 8).unwrap(), x);
        assert!(x.rotate_region(5, 6, 1).is_err());
    }

    #[test]
    fn rotation_leaves_outside_bits() {
        let x = b("1110000111");
        let r = x.rotate_region(3, 4, 1).unwrap();
        assert_eq!(r.to_string(), "1110000111");
        let r = b("1011000111").rotate_region(3, 4, 1).unwrap();
        assert_eq!(r.to_string(), "1010001111");
    }

    #[test]
    fn width_mismatch_rejected() {
        assert!(matches!(
            b("0101").or(&b("01010")),
            Err(Error::WidthMismatch { left: 4, right: 5 })
        ));
        assert!(b("01").is_covered_by(&b("011")).is_err());
    }

    #[test]
    fn byte_layout_msb_first() {
        let x = b("1000000000000001");
        assert_eq!(x.to_bytes(), vec![0x80, 0x01]);
        assert_eq!(BitArray::from_bytes(16, &[0x80, 0x01]).unwrap(), x);
        // width 12 pads the final byte with zeros
        assert_eq!(b("111100001111").to_bytes(), vec![0xF0, 0xF0]);
        assert!(BitArray::from_bytes(12, &[0xF0, 0xF1]).is_err());
    }

    #[test]
    fn covering() {
        assert!(b("01111100").is_covered_by(&b("11111110")).unwrap());
        assert!(!b("01111100").is_covered_by(&b("11011101")).unwrap());
        assert!(BitArray::zeros(8).is_covered_by(&b("00000000")).unwrap());
    }

    fn arb_bits(width: usize) -> impl Strategy<Value = BitArray> {
        proptest::collection::vec(any::<bool>(), width).prop_map(move |v| {
            let mut out = BitArray::zeros(width);
            for (i, set) in v.into_iter().enumerate() {
                if set {
                    out.set(i);
                }
            }
            out
        })
    }

    proptest! {
        #[test]
        fn rotation_round_trip(x in arb_bits(128), start in 0usize..64, len in 1usize..64, k in 0usize..200) {
            let r = x.rotate_region(start, len, k).unwrap();
            prop_assert_eq!(r.count_ones(), x.count_ones());
            let back = r.rotate_region(start, len, len - k % len).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn bytes_round_trip(x in arb_bits(200)) {
            prop_assert_eq!(BitArray::from_bytes(200, &x.to_bytes()).unwrap(), x);
        }

        #[test]
        fn or_covers_operands(x in arb_bits(64), y in arb_bits(64)) {
            let agg = x.or(&y).unwrap();
            prop_assert!(x.is_covered_by(&agg).unwrap());
            prop_assert!(y.is_covered_by(&agg).unwrap());
        }
    }
}
