//! Row filtering with super keys, using hand-picked 8-bit hashes.
//!
//! `cargo run --example super_key_masking`

use std::collections::HashMap;

use mate::discovery::mask_covers;
use mate::index::super_key;
use mate::{normalize_value, BitArray, RowValueHasher};

struct Fixed(HashMap<&'static str, &'static str>);

impl RowValueHasher for Fixed {
    fn name(&self) -> &str {
        "fixed"
    }
    fn bits(&self) -> usize {
        8
    }
    fn hash_str(&self, v: &str) -> BitArray {
        BitArray::from_bit_str(self.0.get(v).copied().unwrap_or("00000000")).expect("8 bits")
    }
}

fn main() -> mate::Result<()> {
    let hasher = Fixed(HashMap::from([
        ("muhammad", "01001000"),
        ("lee", "01100000"),
        ("us", "00010100"),
        ("ali", "00010001"),
        ("germany", "10001001"),
        ("dancer", "10000010"),
        ("boxer", "10000001"),
        ("birder", "00001001"),
    ]));
    let sk = |vals: &[&str]| super_key(&vals.iter().map(|v| normalize_value(v)).collect::<Vec<_>>(), &hasher);

    let query = sk(&["Muhammad", "Lee", "US"]);
    println!("query key        {query}");
    for row in [
        ["Muhammad", "Lee", "US", "Dancer"],
        ["Muhammad", "Ali", "US", "Boxer"],
        ["Muhammad", "Lee", "Germany", "Birder"],
    ] {
        let s = sk(&row);
        let verdict = if mask_covers(&query, &s)? { "candidate" } else { "filtered" };
        println!("{s}  {verdict:<9}  {row:?}");
    }
    Ok(())
}
