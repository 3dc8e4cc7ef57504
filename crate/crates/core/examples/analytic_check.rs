//! Exact two-word collision probabilities: less-hashing Bloom filter versus
//! XASH matching K rare characters.
//!
//! `cargo run --example analytic_check -- [bits]`

use mate::bench::analytic::{analytic_collision_check, threshold};

fn main() -> mate::Result<()> {
    let bits: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    println!("{:>2} {:>14} {:>22} {:>6} {:>22} {:>6}", "K", "lhbf", "xash", "holds", "xash+length", "holds");
    for k in 1..=6 {
        let c = analytic_collision_check(bits, k)?;
        println!(
            "{:>2} {:>14} {:>22} {:>6} {:>22} {:>6}",
            k, c.lhbf_side.to_string(), c.xash_side.to_string(), c.char_only_holds,
            c.xash_side_with_length.to_string(), c.with_length_holds
        );
    }
    println!("characters only: holds from K = {:?}", threshold(bits, false)?);
    println!("with length:     holds from K = {:?}", threshold(bits, true)?);
    Ok(())
}
