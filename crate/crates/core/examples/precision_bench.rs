//! Filter precision of XASH and the uniform-hash baselines on synthetic corpora.
//!
//! `cargo run --release --example precision_bench -- [seeds] [spec.json]`

use mate::bench::{run_matrix, BenchConfig};
use mate::discovery::Mode;

fn main() -> mate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut config = match args.next() {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path).expect("readable spec"))?,
        None => BenchConfig::default(),
    };
    config.seeds = (1..=n_seeds).collect();
    config.modes = vec!["mate".into()];

    let t = std::time::Instant::now();
    let report = run_matrix(&config)?;
    println!("{:<12} {:>9} {:>9} {:>10} {:>12}", "hasher", "precision", "std", "FP/seed", "rows/query");
    for c in report.cells.iter().filter(|c| c.mode == Mode::Mate.token()) {
        println!(
            "{:<12} {:>9.4} {:>9.4} {:>10.1} {:>12.1}",
            c.hasher, c.precision_mean, c.precision_std, c.fp_mean, c.rows_verified_mean
        );
    }
    eprintln!("{} seeds in {:.1?}", n_seeds, t.elapsed());
    Ok(())
}
