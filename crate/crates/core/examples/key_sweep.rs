//! False positives and verified rows as the join key grows from 2 to 6 columns.
//!
//! `cargo run --release --example key_sweep -- [seeds]`

use mate::bench::{key_size_sweep, HasherConfig, KeySweep, SyntheticSpec};

fn main() -> mate::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let seeds: Vec<u64> = (1..=n_seeds).collect();
    let cfg: HasherConfig = "xash-128".parse()?;
    let rows = key_size_sweep(&SyntheticSpec::default(), &seeds, KeySweep::default(), cfg, 10)?;
    println!("{:>3} {:>9} {:>10} {:>13} {:>14}", "m", "precision", "FP", "rows checked", "rows verified");
    for r in rows {
        println!(
            "{:>3} {:>9.4} {:>10.1} {:>13.1} {:>14.1}",
            r.m, r.precision_mean, r.fp_mean, r.rows_checked_mean, r.rows_verified_mean
        );
    }
    Ok(())
}
