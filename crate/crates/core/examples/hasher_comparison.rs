//! One value under every hasher, and how full each hasher makes a wide row's super key.
//!
//! `cargo run --example hasher_comparison -- [bits]`

use mate::index::super_key;
use mate::{normalize_value, HasherKind, HasherSpec, RowValueHasher, XashParams};

fn main() -> mate::Result<()> {
    let bits: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let params = XashParams::compute(bits, 1_000_000)?;
    let row: Vec<_> = ["Muhammad", "Lee", "US", "Dancer", "1984", "Boston", "MA", "02134"]
        .iter()
        .map(|v| normalize_value(v))
        .collect();
    let avg_columns = row.len() as f64;
    println!("{:<10} {:>4} {:>12} {:>16}", "hasher", "H", "ones(value)", "ones(super key)");
    for kind in [HasherKind::Xash, HasherKind::Bloom, HasherKind::Lhbf, HasherKind::Ht, HasherKind::Uniform] {
        let h = HasherSpec::for_corpus(kind, params, avg_columns);
        let one = h.hash(&row[0]).count_ones();
        let sk = super_key(&row, &h).count_ones();
        println!("{:<10} {:>4} {:>12} {:>13}/{bits}", h.label(), h.hash_count, one, sk);
    }
    Ok(())
}
