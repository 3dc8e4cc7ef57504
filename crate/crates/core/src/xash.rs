//! XASH: a syntactic hash that encodes a value's rarest characters, their
//! relative positions, and its length into disjoint segments of a bit array.
//!
//! Layout for an `|a|`-bit array:
//!
//! ```text
//! [ length segment: |a_l| bits ][ 37 character segments of β bits each ]
//! ```
//!
//! Character segments follow the alphabet order `0-9`, `a-z`, space. After
//! the character bits are placed, the character region (the `37·β` bits right
//! of the length segment) is rotated left by the value length.

use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bitarray::BitArray;
use crate::corpus::NormalizedValue;
use crate::error::{Error, Result};

pub const ALPHABET_SIZE: usize = 37;

/// Segment order: digits, lowercase letters, space.
pub const ALPHABET: [char; ALPHABET_SIZE] = [
    '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', 'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i',
    'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v', 'w', 'x', 'y', 'z', ' ',
];

/// Default ranking, most frequent first.
pub const DEFAULT_FREQUENCY_ORDER: [char; ALPHABET_SIZE] = [
    ' ', 'e', 't', 'a', 'o', 'i', 'n', 's', 'r', 'h', 'l', 'd', 'c', 'u', 'm', 'f', 'p', 'g', 'w',
    'y', 'b', 'v', 'k', 'x', 'j', 'q', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9',
];

pub const SUPPORTED_WIDTHS: [usize; 3] = [128, 256, 512];

/// Position of `c` in [`ALPHABET`], or `None` for characters that are never hashed.
#[inline]
pub fn alphabet_index(c: char) -> Option<usize> {
    match c {
        '0'..='9' => Some(c as usize - '0' as usize),
        'a'..='z' => Some(10 + c as usize - 'a' as usize),
        ' ' => Some(36),
        _ => None,
    }
}

/// Global character frequency ranking shared by index and query side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyTable {
    order: [char; ALPHABET_SIZE],
    /// rank[alphabet_index] = position in `order` (0 = most frequent).
    rank: [u8; ALPHABET_SIZE],
    digest: u64,
}

impl Default for FrequencyTable {
    fn default() -> Self {
        FrequencyTable::from_order(DEFAULT_FREQUENCY_ORDER).expect("default order is a permutation")
    }
}

impl FrequencyTable {
    pub fn from_order(order: [char; ALPHABET_SIZE]) -> Result<Self> {
        let mut rank = [u8::MAX; ALPHABET_SIZE];
        for (r, &c) in order.iter().enumerate() {
            let idx = alphabet_index(c)
                .ok_or_else(|| Error::Param(format!("{c:?} is not in the hash alphabet")))?;
            if rank[idx] != u8::MAX {
                return Err(Error::Param(format!("{c:?} appears twice in frequency table")));
            }
            rank[idx] = r as u8;
        }
        let text: String = order.iter().collect();
        let digest = twox_hash::XxHash64::oneshot(0, text.as_bytes());
        Ok(FrequencyTable {
            order,
            rank,
            digest,
        })
    }

    /// Parses a JSON array of 37 single-character strings, most frequent first.
    pub fn from_json(text: &str) -> Result<Self> {
        let items: Vec<String> = serde_json::from_str(text)?;
        if items.len() != ALPHABET_SIZE {
            return Err(Error::Param(format!(
                "frequency table has {} entries, expected {ALPHABET_SIZE}",
                items.len()
            )));
        }
        let mut order = [' '; ALPHABET_SIZE];
        for (slot, item) in order.iter_mut().zip(&items) {
            let mut chars = item.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => *slot = c,
                _ => return Err(Error::Param(format!("entry {item:?} is not a single character"))),
            }
        }
        FrequencyTable::from_order(order)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FrequencyTable::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let items: Vec<String> = self.order.iter().map(|c| c.to_string()).collect();
        serde_json::to_string(&items).expect("string array serializes")
    }

    /// Rank of an alphabet index; 0 is the most frequent character.
    #[inline]
    pub fn rank_of(&self, alphabet_idx: usize) -> u8 {
        self.rank[alphabet_idx]
    }

    pub fn order(&self) -> &[char; ALPHABET_SIZE] {
        &self.order
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }
}

/// Bit layout constants derived from the hash width and corpus size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XashParams {
    pub bits: usize,
    /// Upper bound on set bits per hash: one length bit plus `alpha - 1` character bits.
    pub alpha: usize,
    pub beta: usize,
    pub length_bits: usize,
    pub frequency: FrequencyTable,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

impl XashParams {
    /// Derives `alpha`, `beta` and `|a_l|` for `bits` and `unique_values` distinct corpus values.
    pub fn compute(bits: usize, unique_values: u64) -> Result<Self> {
        Self::compute_with(bits, unique_values, FrequencyTable::default())
    }

    pub fn compute_with(bits: usize, unique_values: u64, frequency: FrequencyTable) -> Result<Self> {
        if !SUPPORTED_WIDTHS.contains(&bits) {
            return Err(Error::Param(format!(
                "hash width {bits} not in {SUPPORTED_WIDTHS:?}"
            )));
        }
        if unique_values == 0 {
            return Err(Error::Param("corpus has no values".into()));
        }
        // largest beta with 37 * beta < bits
        let beta = (bits - 1) / ALPHABET_SIZE;
        let length_bits = bits - ALPHABET_SIZE * beta;
        let alpha = (2..=bits as u64)
            .find(|&a| binomial(bits as u64, a) > unique_values as u128)
            .ok_or_else(|| {
                Error::Param(format!(
                    "{unique_values} unique values cannot be encoded in {bits} bits"
                ))
            })? as usize;
        Ok(XashParams {
            bits,
            alpha,
            beta,
            length_bits,
            frequency,
        })
    }

    /// Params with an explicit ones budget, bypassing the corpus-size rule.
    pub fn with_alpha(bits: usize, alpha: usize) -> Result<Self> {
        let mut p = Self::compute(bits, 1)?;
        if alpha < 2 || alpha > bits {
            return Err(Error::Param(format!("alpha {alpha} outside 2..={bits}")));
        }
        p.alpha = alpha;
        Ok(p)
    }

    pub fn char_region_len(&self) -> usize {
        ALPHABET_SIZE * self.beta
    }
}

/// Average 1-based position of a character, kept as an exact fraction.
pub type Location = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    /// Least frequent first.
    pub selected: Vec<(char, Location)>,
    pub value_length: usize,
}

/// Per-alphabet-symbol position sums and occurrence counts for one value.
struct CharStats {
    sum: [u64; ALPHABET_SIZE],
    count: [u32; ALPHABET_SIZE],
    len: usize,
}

impl CharStats {
    fn of(text: &str) -> CharStats {
        let mut s = CharStats {
            sum: [0; ALPHABET_SIZE],
            count: [0; ALPHABET_SIZE],
            len: 0,
        };
        for (i, c) in text.chars().enumerate() {
            s.len = i + 1;
            if let Some(idx) = alphabet_index(c) {
                s.sum[idx] += i as u64 + 1;
                s.count[idx] += 1;
            }
        }
        s
    }

    /// Alphabet indices of the `k` least frequent present characters, least frequent first.
    fn rarest(&self, freq: &FrequencyTable, k: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend((0..ALPHABET_SIZE).filter(|&i| self.count[i] > 0));
        // Higher rank = rarer. Ranks are a total order; the index tie-break mirrors
        // lexicographic order for tables that would assign equal frequency.
        out.sort_unstable_by(|&a, &b| {
            freq.rank_of(b)
                .cmp(&freq.rank_of(a))
                .then(ALPHABET[a].cmp(&ALPHABET[b]))
        });
        out.truncate(k);
    }
}

pub fn select_features(v: &NormalizedValue, params: &XashParams) -> FeatureSet {
    let stats = CharStats::of(v.as_str());
    let mut picked = Vec::with_capacity(ALPHABET_SIZE);
    stats.rarest(&params.frequency, params.alpha - 1, &mut picked);
    FeatureSet {
        selected: picked
            .into_iter()
            .map(|i| (ALPHABET[i], Ratio::new(stats.sum[i], stats.count[i] as u64)))
            .collect(),
        value_length: stats.len,
    }
}

/// 1-based bit offset `ceil(λ·β / l_v)` within a character segment.
pub fn position_bit(location: Location, value_length: usize, beta: usize) -> Result<usize> {
    if value_length == 0 {
        return Err(Error::Param("position of a character in an empty value".into()));
    }
    if beta == 0 {
        return Err(Error::Param("segment width 0".into()));
    }
    let x = (location * Ratio::from_integer(beta as u64) / Ratio::from_integer(value_length as u64))
        .ceil()
        .to_integer() as usize;
    Ok(x.clamp(1, beta))
}

#[inline]
fn position_bit_raw(sum: u64, count: u64, len: usize, beta: usize) -> usize {
    // ceil(sum * beta / (count * len)) with integer arithmetic
    let num = sum * beta as u64;
    let den = count * len as u64;
    (num.div_ceil(den) as usize).clamp(1, beta)
}

/// Which XASH features are encoded. Non-full settings exist for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct XashComponents {
    pub length: bool,
    pub chars: bool,
    pub positions: bool,
    pub rotation: bool,
}

impl XashComponents {
    pub const FULL: XashComponents = XashComponents {
        length: true,
        chars: true,
        positions: true,
        rotation: true,
    };
    pub const LENGTH_ONLY: XashComponents = XashComponents {
        length: true,
        chars: false,
        positions: false,
        rotation: false,
    };
    pub const CHARS: XashComponents = XashComponents {
        length: false,
        chars: true,
        positions: false,
        rotation: false,
    };
    pub const CHARS_POSITIONS: XashComponents = XashComponents {
        length: false,
        chars: true,
        positions: true,
        rotation: false,
    };
    pub const CHARS_POSITIONS_LENGTH: XashComponents = XashComponents {
        length: true,
        chars: true,
        positions: true,
        rotation: false,
    };

    /// Ablation ladder, weakest first.
    pub const LADDER: [(&'static str, XashComponents); 5] = [
        ("length", Self::LENGTH_ONLY),
        ("chars", Self::CHARS),
        ("chars+positions", Self::CHARS_POSITIONS),
        ("chars+positions+length", Self::CHARS_POSITIONS_LENGTH),
        ("full", Self::FULL),
    ];

    pub fn to_bits(self) -> u8 {
        self.length as u8
            | (self.chars as u8) << 1
            | (self.positions as u8) << 2
            | (self.rotation as u8) << 3
    }

    pub fn from_bits(b: u8) -> XashComponents {
        XashComponents {
            length: b & 1 != 0,
            chars: b & 2 != 0,
            positions: b & 4 != 0,
            rotation: b & 8 != 0,
        }
    }

    pub fn label(self) -> String {
        if self == Self::FULL {
            return "full".into();
        }
        let mut parts = Vec::new();
        if self.chars {
            parts.push("chars");
        }
        if self.positions {
            parts.push("positions");
        }
        if self.length {
            parts.push("length");
        }
        if self.rotation {
            parts.push("rotation");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

pub fn xash(v: &NormalizedValue, params: &XashParams) -> BitArray {
    xash_str(v.as_str(), params, XashComponents::FULL)
}

/// XASH of an already-normalized string with a selectable feature set.
pub fn xash_str(text: &str, params: &XashParams, components: XashComponents) -> BitArray {
    let mut out = BitArray::zeros(params.bits);
    let stats = CharStats::of(text);
    let len = stats.len;
    if components.length {
        out.set(len % params.length_bits);
    }
    if !components.chars {
        return out;
    }
    let region = params.char_region_len();
    let shift = if components.rotation { len % region } else { 0 };
    let mut picked = Vec::with_capacity(ALPHABET_SIZE);
    stats.rarest(&params.frequency, params.alpha - 1, &mut picked);
    for idx in picked {
        let x = if components.positions {
            position_bit_raw(stats.sum[idx], stats.count[idx] as u64, len, params.beta)
        } else {
            1
        };
        let offset = idx * params.beta + x - 1;
        // left rotation moves region offset r to (r - shift) mod region
        let rotated = (offset + region - shift) % region;
        out.set(params.length_bits + rotated);
    }
    out
}
