//! Saves an index, reloads it, and checks that lookups and super keys survive.
//!
//! `cargo run --example persistence -- [dir]`

use std::path::{Path, PathBuf};

use mate::{Catalog, CsvOptions, HasherSpec, Index, XashParams};

fn main() -> mate::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/running_example/corpus");
    let dir: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("mate-example-index"));

    let mut catalog = Catalog::new();
    catalog.ingest_dir(&data, CsvOptions::default())?;
    let params = XashParams::compute(128, catalog.stats().unique_value_count)?;
    let index = Index::build(catalog, HasherSpec::xash(params))?;
    index.save(&dir)?;

    for entry in std::fs::read_dir(&dir).expect("index dir") {
        let entry = entry.expect("dir entry");
        println!("{:>8} bytes  {}", entry.metadata().expect("metadata").len(), entry.file_name().to_string_lossy());
    }

    let loaded = Index::load(&dir)?;
    match index.diff(&loaded) {
        None => println!("reloaded index is identical ({} terms, {} rows)", loaded.term_count(), loaded.row_count()),
        Some(d) => println!("reloaded index differs: {d}"),
    }
    Ok(())
}
