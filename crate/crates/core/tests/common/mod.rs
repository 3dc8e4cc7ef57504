//! Random corpora, queries and edits shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use mate::discovery::QueryKey;
use mate::{Catalog, Edit, HasherKind, HasherSpec, Index, Table, XashParams};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

pub const WIDTHS: [usize; 3] = [128, 256, 512];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/running_example")
}

/// A small vocabulary so random tables overlap often. Includes values that
/// differ only by case or spacing, and values sharing rare characters.
pub fn vocabulary(rng: &mut impl RngCore, size: usize) -> Vec<String> {
    const STEMS: [&str; 12] = ["muhammad", "lee", "us", "qz", "x y", "zzq", "jaxon", "007", "q7", "ali", "kim", "a b c"];
    (0..size)
        .map(|i| match rng.random_range(0..4) {
            0 => STEMS[i % STEMS.len()].to_string(),
            1 => format!("{}{}", STEMS[rng.random_range(0..STEMS.len())], i),
            2 => rng.random_range(0..500u32).to_string(),
            _ => (0..rng.random_range(1..9)).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect(),
        })
        .collect()
}

pub fn random_table(rng: &mut impl RngCore, name: &str, vocab: &[String], max_rows: usize, max_cols: usize) -> Table {
    let n_cols = rng.random_range(1..=max_cols);
    let n_rows = rng.random_range(1..=max_rows);
    let rows: Vec<Vec<String>> = (0..n_rows)
        .map(|_| {
            (0..n_cols)
                .map(|_| if rng.random_bool(0.05) { String::new() } else { vocab.choose(rng).expect("vocab").clone() })
                .collect()
        })
        .collect();
    Table::from_raw_rows(name, None, &rows).expect("valid table")
}

pub fn random_catalog(rng: &mut impl RngCore, max_tables: usize, max_rows: usize, max_cols: usize, vocab: &[String]) -> Catalog {
    let mut cat = Catalog::new();
    for t in 0..rng.random_range(1..=max_tables) {
        cat.register(random_table(rng, &format!("t{t}"), vocab, max_rows, max_cols));
    }
    cat
}

/// Query table of `m` key columns plus one payload column. Most rows are
/// projections of corpus rows under a random column order, so exact joins exist.
pub fn random_query(rng: &mut impl RngCore, cat: &Catalog, vocab: &[String], m: usize, k: usize) -> QueryKey {
    let wide: Vec<&Table> = cat.tables().filter(|t| t.n_cols() >= m && t.live_row_count() > 0).collect();
    let n_rows = rng.random_range(1..=12);
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row: Vec<String> = match wide.choose(rng) {
            Some(t) if rng.random_bool(0.8) => {
                let live: Vec<u32> = t.rows().map(|(r, _)| r).collect();
                let r = t.row(*live.choose(rng).expect("live row")).expect("row");
                let mut cols: Vec<usize> = (0..t.n_cols()).collect();
                rand::seq::SliceRandom::shuffle(cols.as_mut_slice(), rng);
                cols[..m].iter().map(|&c| r[c].raw().to_string()).collect()
            }
            _ => (0..m).map(|_| vocab.choose(rng).expect("vocab").clone()).collect(),
        };
        row.push("payload".into());
        rows.push(row);
    }
    let table = Table::from_raw_rows("query", None, &rows).expect("query table");
    QueryKey::new(table, (0..m).collect(), k).expect("valid query")
}

pub fn random_hasher(rng: &mut impl RngCore, kind: HasherKind, cat: &Catalog) -> HasherSpec {
    let bits = *WIDTHS.choose(rng).expect("widths");
    let stats = cat.stats();
    let params = XashParams::compute(bits, stats.unique_value_count.max(1)).expect("params");
    HasherSpec::for_corpus(kind, params, stats.avg_columns)
}

/// True iff some injective assignment maps every tuple value onto a distinct
/// cell of `row`. Empty values never match.
pub fn row_joins(tuple: &[&str], row: &[&str]) -> bool {
    fn go(tuple: &[&str], row: &[&str], used: &mut Vec<bool>) -> bool {
        let Some((first, rest)) = tuple.split_first() else {
            return true;
        };
        for (i, cell) in row.iter().enumerate() {
            if !used[i] && !first.is_empty() && cell == first {
                used[i] = true;
                let ok = go(rest, row, used);
                used[i] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    go(tuple, row, &mut vec![false; row.len()])
}

/// A valid edit for the current state of `index`, of the requested variant (0..7).
pub fn random_edit(rng: &mut impl RngCore, index: &Index, vocab: &[String], variant: usize) -> Option<Edit> {
    let cat = index.catalog();
    let ids: Vec<u32> = cat.tables().map(|t| t.id()).collect();
    let value = |rng: &mut dyn RngCore| -> String {
        if rng.random_bool(0.05) { String::new() } else { vocab.choose(rng).expect("vocab").clone() }
    };
    if variant == 0 || ids.is_empty() {
        let t = random_table(rng, "new", vocab, 6, 4);
        let rows = t.rows().map(|(_, cells)| cells.iter().map(|c| c.raw().to_string()).collect()).collect();
        return Some(Edit::InsertTable { name: format!("t{}", cat.next_id()), header: None, rows });
    }
    let table_id = *ids.choose(rng).expect("ids");
    let t = cat.table(table_id).expect("table");
    let live: Vec<u32> = t.rows().map(|(r, _)| r).collect();
    Some(match variant {
        1 => Edit::InsertRow { table_id, values: (0..t.n_cols()).map(|_| value(rng)).collect() },
        2 => Edit::AddColumn { table_id, name: None, values: (0..t.n_row_slots()).map(|_| value(rng)).collect() },
        3 => {
            let row_id = *live.choose(rng)?;
            Edit::UpdateCell { table_id, row_id, column_id: rng.random_range(0..t.n_cols()) as u16, value: value(rng) }
        }
        4 => Edit::DeleteTable { table_id },
        5 => Edit::DeleteRow { table_id, row_id: *live.choose(rng)? },
        _ => {
            if t.n_cols() < 2 {
                return None;
            }
            Edit::DeleteColumn { table_id, column_id: rng.random_range(0..t.n_cols()) as u16 }
        }
    })
}
