//! Applies edits to a live index and compares it with a rebuild from scratch.
//!
//! `cargo run --example index_updates`

use std::path::Path;

use mate::{Catalog, CsvOptions, Edit, HasherSpec, Index, XashParams};

fn main() -> mate::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/running_example");
    let mut catalog = Catalog::new();
    catalog.ingest_dir(data.join("corpus"), CsvOptions::default())?;
    let params = XashParams::compute(128, catalog.stats().unique_value_count)?;
    let mut index = Index::build(catalog, HasherSpec::xash(params))?;

    let text = std::fs::read_to_string(data.join("edits.jsonl")).expect("edits file");
    let edits: Vec<Edit> = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
    let extra = [
        Edit::InsertTable {
            name: "t4".into(),
            header: Some(vec!["first".into(), "last".into(), "land".into()]),
            rows: vec![vec!["Kim".into(), "Park".into(), "Korea".into()]],
        },
        Edit::DeleteRow { table_id: 0, row_id: 0 },
    ];
    for edit in edits.iter().chain(&extra) {
        let table = index.apply_edit(edit)?;
        println!("{:?} on table {table}: {} postings for \"muhammad\"", edit.kind(), index.lookup("muhammad").len());
    }

    let rebuilt = Index::build(index.catalog().clone(), *index.hasher())?;
    match index.diff(&rebuilt) {
        None => println!("edited index equals a fresh rebuild"),
        Some(d) => println!("edited index differs from rebuild: {d}"),
    }
    Ok(())
}
