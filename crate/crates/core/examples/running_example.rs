//! Top-1 joinable table for a three-column key on the bundled toy corpus.
//!
//! `cargo run --example running_example`

use std::path::Path;

use mate::discovery::{discover_topk, DiscoveryOptions, QueryKey};
use mate::{Catalog, CsvOptions, HasherSpec, Index, XashParams};

fn main() -> mate::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/running_example");
    let mut catalog = Catalog::new();
    for h in catalog.ingest_dir(data.join("corpus"), CsvOptions::default())? {
        println!("table {} = {}", h.table_id, h.name);
    }
    let stats = catalog.stats();
    let hasher = HasherSpec::xash(XashParams::compute(128, stats.unique_value_count)?);
    let index = Index::build(catalog, hasher)?;

    let rows: Vec<u32> = index.lookup("muhammad").iter().filter(|l| l.table_id == 0).map(|l| l.row_id + 1).collect();
    println!("\"muhammad\" occurs in rows {rows:?} of t1 (1-based)");

    let query = QueryKey::from_csv(&data.join("query.csv"), CsvOptions::default(), &["F. Name", "L. Name", "Country"], 1)?;
    let run = discover_topk(&query, &index, None, &DiscoveryOptions::default())?;
    let t1 = index.catalog().table(0)?;
    for m in &run.results {
        let header = t1.header.as_ref().expect("t1 has a header");
        let cols: Vec<&str> = m.mapping.iter().map(|&c| header[c as usize].as_str()).collect();
        println!("table {} joins with j = {} via {:?}", m.table_id, m.j, cols);
    }
    println!("rows verified: {}, false positives: {}", run.rows_verified, run.fp);
    Ok(())
}
