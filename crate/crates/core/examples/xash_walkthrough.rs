//! How XASH lays out one value: selected characters, their segment bits,
//! the length bit, and the final rotation.
//!
//! `cargo run --example xash_walkthrough -- [value] [alpha]`

use mate::xash::{select_features, xash_str, XashComponents};
use mate::{normalize_value, XashParams};

fn show(label: &str, bits: &mate::BitArray) {
    let ones: Vec<usize> = bits.ones().collect();
    println!("{label:<24} ones at {ones:?}");
}

fn main() -> mate::Result<()> {
    let mut args = std::env::args().skip(1);
    let value = normalize_value(&args.next().unwrap_or_else(|| "Muhammad".into()));
    let alpha: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let params = XashParams::with_alpha(128, alpha)?;
    println!(
        "bits = {}, alpha = {}, beta = {}, length segment = {} bits",
        params.bits, params.alpha, params.beta, params.length_bits
    );

    let f = select_features(&value, &params);
    println!("value {:?}, length {}", value.as_str(), f.value_length);
    for (c, loc) in &f.selected {
        println!("  selected {c:?} at average position {loc}");
    }

    show("length only", &xash_str(value.as_str(), &params, XashComponents::LENGTH_ONLY));
    show("chars", &xash_str(value.as_str(), &params, XashComponents::CHARS));
    show("chars+positions", &xash_str(value.as_str(), &params, XashComponents::CHARS_POSITIONS));
    show("before rotation", &xash_str(value.as_str(), &params, XashComponents::CHARS_POSITIONS_LENGTH));
    let full = mate::xash(&value, &params);
    show("xash", &full);
    println!("{full}");
    Ok(())
}
