//! Row-value hashers behind one interface: XASH and the uniform-hash baselines
//! (Bloom filter, less-hashing Bloom filter, single-hash table, raw uniform bits).

use std::fmt;
use std::str::FromStr;

use twox_hash::XxHash64;

use crate::bitarray::BitArray;
use crate::corpus::NormalizedValue;
use crate::error::{Error, Result};
use crate::xash::{xash_str, XashComponents, XashParams};

/// Seed used by the uniform baselines unless overridden.
pub const DEFAULT_SEED: u64 = 0x6d61_7465_5f73_6565;

const SEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;
const LHBF_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const UNIFORM_SALT: u64 = 0x2545_F491_4F6C_DD1D;

/// Anything that maps a normalized cell value to a fixed-width bit array.
pub trait RowValueHasher {
    fn name(&self) -> &str;
    fn bits(&self) -> usize;
    fn hash_str(&self, normalized: &str) -> BitArray;

    fn hash(&self, v: &NormalizedValue) -> BitArray {
        self.hash_str(v.as_str())
    }
}

/// Seeded 64-bit base hash shared by all uniform baselines.
#[inline]
pub fn uniform_hash64(normalized: &str, seed: u64) -> u64 {
    XxHash64::oneshot(seed, normalized.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HasherKind {
    Xash,
    Bloom,
    Lhbf,
    Ht,
    Uniform,
}

impl HasherKind {
    pub const ALL: [HasherKind; 5] = [
        HasherKind::Xash,
        HasherKind::Bloom,
        HasherKind::Lhbf,
        HasherKind::Ht,
        HasherKind::Uniform,
    ];

    pub fn token(self) -> &'static str {
        match self {
            HasherKind::Xash => "xash",
            HasherKind::Bloom => "bf",
            HasherKind::Lhbf => "lhbf",
            HasherKind::Ht => "ht",
            HasherKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for HasherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for HasherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HasherKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::Param(format!("unknown hasher {s:?} (xash|bf|lhbf|ht|uniform)")))
    }
}

/// `H = max(1, round(bits / V · ln 2))`.
pub fn optimal_bf_hash_count(bits: usize, avg_columns: f64) -> usize {
    let h = (bits as f64 / avg_columns.max(1.0) * std::f64::consts::LN_2).round();
    (h as usize).max(1)
}

/// Sets `hash_count` bits, each from an independently seeded base hash.
pub fn bloom_hash(normalized: &str, bits: usize, hash_count: usize, seed: u64) -> BitArray {
    let mut out = BitArray::zeros(bits);
    for i in 0..hash_count as u64 {
        let h = uniform_hash64(normalized, seed.wrapping_add(i.wrapping_mul(SEED_STEP)));
        out.set((h % bits as u64) as usize);
    }
    out
}

/// Bit positions `(h1 + i·h2) mod bits` for `i in 0..hash_count`.
pub fn double_hash_positions(h1: u64, h2: u64, hash_count: usize, bits: usize) -> Vec<usize> {
    let m = bits as u64;
    let (a, b) = (h1 % m, h2 % m);
    (0..hash_count as u64)
        .map(|i| ((a + i * b) % m) as usize)
        .collect()
}

/// Less-hashing Bloom filter: two base hashes generate all `hash_count` positions.
pub fn lhbf_hash(normalized: &str, bits: usize, hash_count: usize, seed: u64) -> BitArray {
    let h1 = uniform_hash64(normalized, seed);
    // an odd stride keeps all positions distinct in a power-of-two width
    let h2 = uniform_hash64(normalized, seed ^ LHBF_SALT) | 1;
    let mut out = BitArray::zeros(bits);
    for p in double_hash_positions(h1, h2, hash_count, bits) {
        out.set(p);
    }
    out
}

/// Exactly one bit at `uniform_hash64(v) mod bits`.
pub fn ht_hash(normalized: &str, bits: usize, seed: u64) -> BitArray {
    bloom_hash(normalized, bits, 1, seed)
}

/// Pseudorandom bits, each set with probability 1/2.
pub fn uniform_hash(normalized: &str, bits: usize, seed: u64) -> BitArray {
    let mut out = BitArray::zeros(bits);
    let mut word = 0u64;
    for i in 0..bits {
        if i % 64 == 0 {
            let s = (seed ^ UNIFORM_SALT).wrapping_add((i as u64 / 64).wrapping_mul(SEED_STEP));
            word = uniform_hash64(normalized, s);
        }
        if word >> (63 - i % 64) & 1 == 1 {
            out.set(i);
        }
    }
    out
}

/// A fully configured hasher. It carries the XASH layout parameters for every
/// kind so the index header can echo them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HasherSpec {
    pub kind: HasherKind,
    pub params: XashParams,
    pub hash_count: usize,
    pub seed: u64,
    pub components: XashComponents,
}

impl HasherSpec {
    pub fn xash(params: XashParams) -> Self {
        Self::new(HasherKind::Xash, params, 1)
    }

    /// Baselines that need a hash count use the Bloom optimum for `avg_columns`.
    pub fn for_corpus(kind: HasherKind, params: XashParams, avg_columns: f64) -> Self {
        let h = match kind {
            HasherKind::Bloom | HasherKind::Lhbf => optimal_bf_hash_count(params.bits, avg_columns),
            _ => 1,
        };
        Self::new(kind, params, h)
    }

    pub fn new(kind: HasherKind, params: XashParams, hash_count: usize) -> Self {
        HasherSpec {
            kind,
            params,
            hash_count: hash_count.clamp(1, params.bits),
            seed: DEFAULT_SEED,
            components: XashComponents::FULL,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_components(mut self, components: XashComponents) -> Self {
        self.components = components;
        self
    }

    /// Human-readable label, e.g. `xash-128` or `xash[chars+positions]-128`.
    pub fn label(&self) -> String {
        if self.kind == HasherKind::Xash && self.components != XashComponents::FULL {
            format!("xash[{}]-{}", self.components.label(), self.params.bits)
        } else {
            format!("{}-{}", self.kind, self.params.bits)
        }
    }

    /// Index and query side must agree on all of these for masking to be sound.
    pub fn check_compatible(&self, other: &HasherSpec) -> Result<()> {
        let mismatch = |what: &str| {
            Err(Error::Compatibility(format!(
                "{what} differs: index {} vs query {}",
                self.label(),
                other.label()
            )))
        };
        if self.kind != other.kind {
            return mismatch("hasher");
        }
        if self.params.bits != other.params.bits {
            return mismatch("bit width");
        }
        if self.params.frequency.digest() != other.params.frequency.digest() {
            return mismatch("frequency table");
        }
        if self.params.alpha != other.params.alpha
            || self.hash_count != other.hash_count
            || self.seed != other.seed
            || self.components != other.components
        {
            return mismatch("hash parameters");
        }
        Ok(())
    }
}

impl RowValueHasher for HasherSpec {
    fn name(&self) -> &str {
        self.kind.token()
    }

    fn bits(&self) -> usize {
        self.params.bits
    }

    fn hash_str(&self, normalized: &str) -> BitArray {
        let bits = self.params.bits;
        match self.kind {
            HasherKind::Xash => xash_str(normalized, &self.params, self.components),
            HasherKind::Bloom => bloom_hash(normalized, bits, self.hash_count, self.seed),
            HasherKind::Lhbf => lhbf_hash(normalized, bits, self.hash_count, self.seed),
            HasherKind::Ht => ht_hash(normalized, bits, self.seed),
            HasherKind::Uniform => uniform_hash(normalized, bits, self.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize_value;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params(bits: usize) -> XashParams {
        XashParams::compute(bits, 1_000_000).unwrap()
    }

    fn random_words(n: usize, seed: u64) -> Vec<String> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let len = rng.random_range(1..16);
                (0..len).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
            })
            .collect()
    }

    #[test]
    fn hash_count_formula() {
        assert_eq!(optimal_bf_hash_count(128, 5.0), 18);
        assert_eq!(optimal_bf_hash_count(128, 26.0), 3);
        assert_eq!(optimal_bf_hash_count(128, 128.0 / std::f64::consts::LN_2), 1);
        assert_eq!(optimal_bf_hash_count(128, 1000.0), 1);
    }

    #[test]
    fn bloom_with_one_hash_is_ht() {
        for w in random_words(200, 1) {
            assert_eq!(bloom_hash(&w, 128, 1, 7), ht_hash(&w, 128, 7));
            assert_eq!(ht_hash(&w, 128, 7).count_ones(), 1);
            assert!(bloom_hash(&w, 128, 18, 7).count_ones() <= 18);
        }
    }

    #[test]
    fn double_hashing_arithmetic() {
        assert_eq!(double_hash_positions(3, 5, 2, 128), vec![3, 8]);
        assert_eq!(double_hash_positions(3, 0, 6, 128), vec![3; 6]);
        assert_eq!(double_hash_positions(130, 128, 3, 128), vec![2, 2, 2]);
    }

    #[test]
    fn lhbf_sets_distinct_bits() {
        for w in random_words(500, 9) {
            assert_eq!(lhbf_hash(&w, 128, 23, DEFAULT_SEED).count_ones(), 23);
        }
    }

    #[test]
    fn tokens_round_trip() {
        for k in HasherKind::ALL {
            assert_eq!(k.token().parse::<HasherKind>().unwrap(), k);
        }
        assert!("md5".parse::<HasherKind>().is_err());
    }

    #[test]
    fn ht_occupancy_is_uniform() {
        // ~10^5 distinct values into 128 bins; every bin within 5 sigma of the mean.
        let mut words = random_words(100_000, 2);
        words.sort();
        words.dedup();
        let mut counts = [0u32; 128];
        for w in &words {
            counts[ht_hash(w, 128, DEFAULT_SEED).ones().next().unwrap()] += 1;
        }
        let n = words.len() as f64;
        let p = 1.0 / 128.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for (bin, &c) in counts.iter().enumerate() {
            assert!((c as f64 - n * p).abs() < 5.0 * sigma, "bin {bin}: {c}");
        }
        // chi-square with 127 dof; the 0.9999 quantile is about 196
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - n * p).powi(2) / (n * p)).sum();
        assert!(chi2 < 196.0, "chi2 {chi2}");
    }

    #[test]
    fn uniform_hash_sets_half_the_bits() {
        for bits in [128, 512] {
            let words = random_words(10_000, 3);
            let mean = words
                .iter()
                .map(|w| uniform_hash(w, bits, DEFAULT_SEED).count_ones() as f64)
                .sum::<f64>()
                / words.len() as f64;
            let half = bits as f64 / 2.0;
            assert!((mean - half).abs() <= 0.03 * half, "bits {bits}: mean {mean}");
        }
        assert_ne!(uniform_hash("lee", 128, 1), uniform_hash("lea", 128, 1));
    }

    #[test]
    fn bloom_false_positive_rate_tracks_closed_form() {
        // OR V random values into one array and probe with fresh values.
        let (bits, v) = (128usize, 5usize);
        let h = optimal_bf_hash_count(bits, v as f64);
        let h_small = 4; // a higher-FP setting so the estimate is not swamped by noise
        for hc in [h, h_small] {
            let trials = 20_000;
            let words = random_words(trials * (v + 1), 4);
            let mut hits = 0usize;
            for chunk in words.chunks(v + 1) {
                let mut agg = BitArray::zeros(bits);
                for w in &chunk[..v] {
                    agg.or_assign(&bloom_hash(w, bits, hc, 11)).unwrap();
                }
                let probe = bloom_hash(&chunk[v], bits, hc, 11);
                if probe.is_covered_by(&agg).unwrap() && !chunk[..v].contains(&chunk[v]) {
                    hits += 1;
                }
            }
            let rate = hits as f64 / trials as f64;
            let expected = (1.0 - (-(v as f64) * hc as f64 / bits as f64).exp()).powi(hc as i32);
            let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
            // the closed form slightly underestimates; allow 5 sigma plus a relative slack
            assert!(
                (rate - expected).abs() <= 5.0 * sigma + 0.25 * expected,
                "H={hc}: rate {rate} vs {expected}"
            );
        }
    }

    #[test]
    fn xash_uses_far_fewer_bits_than_uniform() {
        let p = params(128);
        let xs = HasherSpec::xash(p);
        let un = HasherSpec::new(HasherKind::Uniform, p, 1);
        let words = random_words(2_000, 5);
        let mean = |h: &HasherSpec| {
            words.iter().map(|w| h.hash_str(w).count_ones() as f64).sum::<f64>() / words.len() as f64
        };
        assert!(mean(&xs) <= p.alpha as f64);
        assert!(mean(&xs) * 5.0 < mean(&un));
    }

    #[test]
    fn incompatible_specs_detected() {
        let p = params(128);
        let a = HasherSpec::xash(p);
        assert!(a.check_compatible(&a).is_ok());
        assert!(a.check_compatible(&HasherSpec::xash(params(256))).is_err());
        assert!(a
            .check_compatible(&HasherSpec::for_corpus(HasherKind::Bloom, p, 5.0))
            .is_err());
        let mut other = p;
        other.frequency = crate::xash::FrequencyTable::from_order({
            let mut o = crate::xash::DEFAULT_FREQUENCY_ORDER;
            o.swap(0, 1);
            o
        })
        .unwrap();
        assert!(matches!(
            a.check_compatible(&HasherSpec::xash(other)),
            Err(Error::Compatibility(_))
        ));
    }

    proptest! {
        #[test]
        fn all_hashers_total_and_deterministic(s in "\\PC{0,20}", kind_idx in 0usize..5, width_idx in 0usize..3) {
            let p = params([128, 256, 512][width_idx]);
            let h = HasherSpec::for_corpus(HasherKind::ALL[kind_idx], p, 5.0);
            let v = normalize_value(&s);
            let a = h.hash(&v);
            prop_assert_eq!(a, h.hash(&v));
            prop_assert_eq!(a.width(), p.bits);
        }

        #[test]
        fn or_aggregate_covers_each_value(vals in proptest::collection::vec("[a-z0-9 ]{0,12}", 1..8), kind_idx in 0usize..5) {
            let h = HasherSpec::for_corpus(HasherKind::ALL[kind_idx], params(128), 5.0);
            let mut agg = BitArray::zeros(128);
            for v in &vals {
                agg.or_assign(&h.hash_str(v)).unwrap();
            }
            for v in &vals {
                prop_assert!(h.hash_str(v).is_covered_by(&agg).unwrap());
            }
        }
    }
}
