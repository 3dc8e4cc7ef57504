//! Precision of each XASH component configuration on synthetic corpora.
//!
//! `cargo run --release --example ablation -- [seeds] [bits]`

use mate::bench::{ablate_xash, SyntheticSpec, Workload};

fn main() -> mate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let bits: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);
    let k = 10;
    let workloads = (1..=n_seeds)
        .map(|seed| Workload::generate(&SyntheticSpec::default().with_seed(seed), k))
        .collect::<mate::Result<Vec<_>>>()?;
    println!("{:<26} {:>9} {:>9} {:>10}", "configuration", "precision", "std", "FP/seed");
    for row in ablate_xash(&workloads, bits, k)? {
        println!("{:<26} {:>9.4} {:>9.4} {:>10.1}", row.config, row.precision_mean, row.precision_std, row.fp_mean);
    }
    Ok(())
}
