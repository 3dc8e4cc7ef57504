//! Generates a synthetic corpus with planted joins and writes it as CSV.
//!
//! `cargo run --release --example synthetic_corpus -- [out_dir] [seed]`

use std::path::PathBuf;

use mate::bench::{SyntheticSpec, Workload};
use mate::discovery::{brute_force_topk, DEFAULT_ORACLE_BUDGET};

fn main() -> mate::Result<()> {
    let mut args = std::env::args().skip(1);
    let out: PathBuf = args.next().map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("mate-synthetic"));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = SyntheticSpec::tiny(seed);
    let w = Workload::generate(&spec, 3)?;
    w.write(&out)?;
    println!(
        "{} tables, {} queries, {} unique values -> {}",
        w.catalog.len(),
        w.queries.len(),
        w.stats.unique_value_count,
        out.display()
    );
    let q = &w.queries[0];
    let oracle = brute_force_topk(q, &w.catalog, DEFAULT_ORACLE_BUDGET)?;
    println!("query 0 top-3 by exhaustive search: {:?}", oracle.results.iter().map(|m| (m.table_id, m.j)).collect::<Vec<_>>());
    Ok(())
}
