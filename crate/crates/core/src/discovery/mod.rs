//! Top-k joinable table search for a composite query key.
//!
//! The initial query column's posting lists yield candidate rows; each row's
//! super key is checked against the query row's super key before any exact
//! verification. Two pruning rules bound the remaining work per table.

mod join;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

pub use join::{
    brute_force_table, joinability, mapping_count, ordered_mapping_count, TableScore,
    DEFAULT_ORACLE_BUDGET,
};

use crate::bitarray::BitArray;
use crate::corpus::{Catalog, CsvOptions, Table};
use crate::error::{Error, Result};
use crate::hashers::{HasherSpec, RowValueHasher};
use crate::index::Index;

/// Query table, key columns and result size.
#[derive(Debug, Clone)]
pub struct QueryKey {
    pub table: Table,
    pub columns: Vec<usize>,
    pub k: usize,
}

impl QueryKey {
    pub fn new(table: Table, columns: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        if columns.is_empty() {
            return Err(Error::Param("query key has no columns".into()));
        }
        let mut seen = HashSet::new();
        for &c in &columns {
            if c >= table.n_cols() {
                return Err(Error::NotFound(format!(
                    "column {c} of query table {} ({} columns)",
                    table.handle.name,
                    table.n_cols()
                )));
            }
            if !seen.insert(c) {
                return Err(Error::Param(format!("query column {c} listed twice")));
            }
        }
        Ok(QueryKey { table, columns, k })
    }

    /// Reads a query CSV and resolves key columns by header name or index.
    pub fn from_csv(path: &Path, opts: CsvOptions, keys: &[&str], k: usize) -> Result<Self> {
        let table = Table::from_csv(path, opts)?;
        let columns = keys
            .iter()
            .map(|key| table.resolve_column(key))
            .collect::<Result<Vec<_>>>()?;
        QueryKey::new(table, columns, k)
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    /// Distinct key tuples in first-seen order. Tuples with an empty value are
    /// dropped: an empty cell never joins.
    pub fn key_tuples(&self) -> Vec<Vec<Box<str>>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (_, row) in self.table.rows() {
            let tuple: Vec<Box<str>> = self.columns.iter().map(|&c| row[c].normalized().into()).collect();
            if tuple.iter().any(|v| v.is_empty()) {
                continue;
            }
            if seen.insert(tuple.clone()) {
                out.push(tuple);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Posting lists of the initial column plus super-key masking.
    Mate,
    /// Posting lists of the initial column, every candidate row verified.
    Scr,
    /// Posting lists of every key column, intersected by row.
    Mcr,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mate, Mode::Scr, Mode::Mcr];

    pub fn token(self) -> &'static str {
        match self {
            Mode::Mate => "mate",
            Mode::Scr => "scr",
            Mode::Mcr => "mcr",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| Error::Param(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    MinCardinality,
    ColumnOrder,
    LongestString,
    /// Column with the most posting items; needs the index.
    Worst,
    /// Column with the fewest posting items; needs the index.
    Best,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::MinCardinality,
        Strategy::ColumnOrder,
        Strategy::LongestString,
        Strategy::Worst,
        Strategy::Best,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Strategy::MinCardinality => "min_cardinality",
            Strategy::ColumnOrder => "column_order",
            Strategy::LongestString => "longest_string",
            Strategy::Worst => "worst",
            Strategy::Best => "best",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| Error::Param(format!("unknown strategy {s:?}")))
    }
}

fn distinct_values(query: &QueryKey, col: usize) -> Vec<&str> {
    let mut seen = HashSet::new();
    query
        .table
        .rows()
        .map(|(_, row)| row[col].normalized())
        .filter(|v| !v.is_empty() && seen.insert(*v))
        .collect()
}

/// Total posting items fetched when `col` is the initial column.
pub fn fetched_postings(query: &QueryKey, col: usize, index: &Index) -> usize {
    distinct_values(query, col).iter().map(|v| index.lookup(v).len()).sum()
}

/// Picks the initial column. Ties go to the earlier column of `Q`.
pub fn select_initial_column(query: &QueryKey, strategy: Strategy, index: Option<&Index>) -> Result<usize> {
    let cols = &query.columns;
    let pick_min = |score: &dyn Fn(usize) -> f64| {
        let mut best = cols[0];
        let mut best_score = score(best);
        for &c in &cols[1..] {
            let s = score(c);
            if s < best_score {
                best = c;
                best_score = s;
            }
        }
        best
    };
    let need_index = || {
        index.ok_or_else(|| Error::Param(format!("strategy {strategy} needs the index")))
    };
    Ok(match strategy {
        Strategy::ColumnOrder => cols[0],
        Strategy::MinCardinality => pick_min(&|c| distinct_values(query, c).len() as f64),
        Strategy::LongestString => pick_min(&|c| {
            let vals = distinct_values(query, c);
            let total: usize = vals.iter().map(|v| v.chars().count()).sum();
            -(total as f64 / vals.len().max(1) as f64)
        }),
        Strategy::Best => {
            let idx = need_index()?;
            pick_min(&|c| fetched_postings(query, c, idx) as f64)
        }
        Strategy::Worst => {
            let idx = need_index()?;
            pick_min(&|c| -(fetched_postings(query, c, idx) as f64))
        }
    })
}

/// One query row as seen by the filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEntry {
    pub query_row: u32,
    pub tuple_id: u32,
    pub super_key: BitArray,
}

/// Initial-column value -> query rows carrying it.
#[derive(Debug, Clone, Default)]
pub struct QuerySuperKeyMap {
    pub tuples: Vec<Vec<Box<str>>>,
    pub entries: BTreeMap<Box<str>, Vec<QueryEntry>>,
}

/// Groups query rows by their initial-column value. `initial` is a position
/// in `query.columns`. Rows with an empty key value are left out.
pub fn build_query_superkey_map<H: RowValueHasher + ?Sized>(
    query: &QueryKey,
    initial: usize,
    hasher: &H,
) -> QuerySuperKeyMap {
    let mut map = QuerySuperKeyMap::default();
    let mut tuple_ids: HashMap<Vec<Box<str>>, u32> = HashMap::new();
    for (row_id, row) in query.table.rows() {
        let tuple: Vec<Box<str>> = query.columns.iter().map(|&c| row[c].normalized().into()).collect();
        if tuple.iter().any(|v| v.is_empty()) {
            continue;
        }
        let mut sk = BitArray::zeros(hasher.bits());
        for v in &tuple {
            sk.or_assign_unchecked(&hasher.hash_str(v));
        }
        let next = map.tuples.len() as u32;
        let tuple_id = *tuple_ids.entry(tuple.clone()).or_insert_with(|| {
            map.tuples.push(tuple.clone());
            next
        });
        map.entries.entry(tuple[initial].clone()).or_default().push(QueryEntry {
            query_row: row_id,
            tuple_id,
            super_key: sk,
        });
    }
    map
}

/// True iff every bit of `query_sk` is set in `row_sk`.
pub fn mask_covers(query_sk: &BitArray, row_sk: &BitArray) -> Result<bool> {
    query_sk.is_covered_by(row_sk)
}

/// Bounded top-k of `(j, table_id)`, best first: higher j, then lower id.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    items: Vec<JoinMatch>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.k
    }

    /// Score of the worst kept table once the heap is full.
    pub fn j_k(&self) -> Option<u64> {
        self.is_full().then(|| self.items.last().map_or(0, |m| m.j))
    }

    /// Offers a result; zero scores are never kept.
    pub fn offer(&mut self, m: JoinMatch) {
        if m.j == 0 {
            return;
        }
        let pos = self.items.partition_point(|x| (x.j, std::cmp::Reverse(x.table_id)) > (m.j, std::cmp::Reverse(m.table_id)));
        if pos < self.k {
            self.items.insert(pos, m);
            self.items.truncate(self.k);
        }
    }

    pub fn into_vec(self) -> Vec<JoinMatch> {
        self.items
    }
}

/// Rule 1: once the heap is full, a table with at most `j_k` posting items
/// cannot enter it, nor can any later (smaller) table.
pub fn prune_table_rule1(l_t: u64, j_k: Option<u64>) -> bool {
    j_k.is_some_and(|jk| l_t <= jk)
}

/// Rule 2: the unchecked items plus the matching ones bound the table's score.
pub fn prune_table_rule2(l_t: u64, r_checked: u64, r_match: u64, j_k: Option<u64>) -> bool {
    j_k.is_some_and(|jk| l_t - r_checked + r_match <= jk)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinMatch {
    pub table_id: u32,
    pub j: u64,
    /// Candidate column for each query key column, in key order.
    pub mapping: Vec<u16>,
}

#[derive(Debug, Clone, Copy)]
pub struct DiscoveryOptions {
    pub mode: Mode,
    pub strategy: Strategy,
    pub pruning: bool,
    /// Score by matched row pairs instead of distinct key tuples. Disables pruning.
    pub count_row_pairs: bool,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        DiscoveryOptions {
            mode: Mode::Mate,
            strategy: Strategy::MinCardinality,
            pruning: true,
            count_row_pairs: false,
        }
    }
}

impl DiscoveryOptions {
    pub fn mode(mode: Mode) -> Self {
        DiscoveryOptions {
            mode,
            ..Default::default()
        }
    }
}

/// Per-run instrumentation record; also the machine output of a query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub mode: String,
    pub hasher: String,
    pub bits: usize,
    pub k: usize,
    pub initial_column: usize,
    pub tables_fetched: u64,
    pub tables_pruned_rule1: u64,
    pub tables_pruned_rule2: u64,
    /// Posting items inspected (MCR: rows left after intersection).
    pub rows_checked: u64,
    /// Distinct candidate rows sent to exact verification.
    pub rows_verified: u64,
    #[serde(rename = "TP")]
    pub tp: u64,
    #[serde(rename = "FP")]
    pub fp: u64,
    pub precision: f64,
    pub wall_time_ms: f64,
    pub results: Vec<JoinMatch>,
}

impl RunRecord {
    fn empty(mode: &str, index: &Index, k: usize) -> Self {
        RunRecord {
            mode: mode.to_string(),
            hasher: index.hasher().label(),
            bits: index.hasher().params.bits,
            k,
            initial_column: 0,
            tables_fetched: 0,
            tables_pruned_rule1: 0,
            tables_pruned_rule2: 0,
            rows_checked: 0,
            rows_verified: 0,
            tp: 0,
            fp: 0,
            precision: 1.0,
            wall_time_ms: 0.0,
            results: Vec::new(),
        }
    }

    pub fn j_values(&self) -> Vec<u64> {
        self.results.iter().map(|m| m.j).collect()
    }
}

/// TP / (TP + FP), and 1 when nothing passed the filter.
pub fn precision(tp: u64, fp: u64) -> f64 {
    if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

/// `(candidates, TP, FP, rows_verified)` of a finished run.
pub fn count_filter_stats(run: &RunRecord) -> (u64, u64, u64, u64) {
    (run.tp + run.fp, run.tp, run.fp, run.rows_verified)
}

/// Runs one top-k search. `query_hasher`, when given, must be compatible with
/// the index hasher.
pub fn discover_topk(
    query: &QueryKey,
    index: &Index,
    query_hasher: Option<&HasherSpec>,
    opts: &DiscoveryOptions,
) -> Result<RunRecord> {
    if let Some(h) = query_hasher {
        index.hasher().check_compatible(h)?;
    }
    let start = Instant::now();
    let mut rec = RunRecord::empty(opts.mode.token(), index, query.k);
    let initial_col = select_initial_column(query, opts.strategy, Some(index))?;
    rec.initial_column = initial_col;
    let initial = query.columns.iter().position(|&c| c == initial_col).expect("initial in Q");
    let pruning = opts.pruning && !opts.count_row_pairs;
    let map = build_query_superkey_map(query, initial, index.hasher());
    let mut topk = TopK::new(query.k);

    match opts.mode {
        Mode::Mate | Mode::Scr => {
            let masked = opts.mode == Mode::Mate;
            // table -> (row_id, value) items of the initial column's posting lists
            let mut by_table: HashMap<u32, Vec<(u32, &str)>> = HashMap::new();
            for value in map.entries.keys() {
                for loc in index.lookup(value) {
                    by_table.entry(loc.table_id).or_default().push((loc.row_id, value));
                }
            }
            let mut tables: Vec<(u32, Vec<(u32, &str)>)> = by_table.into_iter().collect();
            tables.sort_unstable_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));

            let mut n_left = tables.len() as u64;
            for (table_id, mut items) in tables {
                let l_t = items.len() as u64;
                if pruning && prune_table_rule1(l_t, topk.j_k()) {
                    rec.tables_pruned_rule1 += n_left;
                    break;
                }
                n_left -= 1;
                rec.tables_fetched += 1;
                items.sort_unstable();
                let (mut r_checked, mut r_match) = (0u64, 0u64);
                let mut pairs: Vec<(u32, u32)> = Vec::new();
                let mut skipped = false;
                for (row_id, value) in items {
                    if pruning && prune_table_rule2(l_t, r_checked, r_match, topk.j_k()) {
                        skipped = true;
                        break;
                    }
                    r_checked += 1;
                    let Some(row_sk) = index.super_key(table_id, row_id) else {
                        continue;
                    };
                    let before = pairs.len();
                    for e in &map.entries[value] {
                        if !masked || e.super_key.is_covered_by_unchecked(row_sk) {
                            pairs.push((e.tuple_id, row_id));
                        }
                    }
                    if pairs.len() > before {
                        r_match += 1;
                    }
                }
                rec.rows_checked += r_checked;
                let table = index.catalog().table(table_id)?;
                // a skipped table's pairs are still verified for the FP counts
                let mut sink = TopK::new(0);
                let heap = if skipped { &mut sink } else { &mut topk };
                if skipped {
                    rec.tables_pruned_rule2 += 1;
                }
                score_table(&mut rec, heap, &map.tuples, table, pairs, opts.count_row_pairs);
            }
        }
        Mode::Mcr => {
            // (table, row) sets per key column, intersected
            let mut survivors: Option<HashSet<(u32, u32)>> = None;
            for pos in 0..query.m() {
                let mut rows = HashSet::new();
                for tuple in &map.tuples {
                    for loc in index.lookup(&tuple[pos]) {
                        let key = (loc.table_id, loc.row_id);
                        if survivors.as_ref().is_none_or(|s| s.contains(&key)) {
                            rows.insert(key);
                        }
                    }
                }
                survivors = Some(rows);
            }
            let mut by_table: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for (t, r) in survivors.unwrap_or_default() {
                by_table.entry(t).or_default().push(r);
            }
            for (table_id, mut rows) in by_table {
                rows.sort_unstable();
                rec.tables_fetched += 1;
                rec.rows_checked += rows.len() as u64;
                let table = index.catalog().table(table_id)?;
                let mut pairs = Vec::new();
                for row_id in rows {
                    let Some(row) = table.row(row_id) else { continue };
                    let mut seen = HashSet::new();
                    for cell in row {
                        if let Some(es) = map.entries.get(cell.normalized()) {
                            for e in es {
                                if seen.insert(e.tuple_id) {
                                    pairs.push((e.tuple_id, row_id));
                                }
                            }
                        }
                    }
                }
                score_table(&mut rec, &mut topk, &map.tuples, table, pairs, opts.count_row_pairs);
            }
        }
    }
    rec.results = topk.into_vec();
    rec.precision = precision(rec.tp, rec.fp);
    rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

fn score_table(
    rec: &mut RunRecord,
    topk: &mut TopK,
    tuples: &[Vec<Box<str>>],
    table: &Table,
    mut pairs: Vec<(u32, u32)>,
    count_row_pairs: bool,
) {
    pairs.sort_unstable();
    pairs.dedup();
    let mut rows: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    rows.sort_unstable();
    rows.dedup();
    rec.rows_verified += rows.len() as u64;
    let s = joinability(tuples, table, &pairs, count_row_pairs);
    rec.tp += s.true_pairs;
    rec.fp += s.false_pairs;
    topk.offer(JoinMatch {
        table_id: table.id(),
        j: s.j,
        mapping: s.mapping,
    });
}

/// Exhaustive top-k over the catalog. Fails when the estimated work exceeds
/// `budget`.
pub fn brute_force_topk(query: &QueryKey, catalog: &Catalog, budget: u128) -> Result<RunRecord> {
    let start = Instant::now();
    let m = query.m();
    let tuples_owned = query.key_tuples();
    let tuples: HashSet<Vec<&str>> = tuples_owned
        .iter()
        .map(|t| t.iter().map(|v| &**v).collect())
        .collect();
    let needed = catalog
        .tables()
        .map(|t| ordered_mapping_count(t.n_cols(), m).saturating_mul(t.live_row_count() as u128 + 1))
        .fold(0u128, u128::saturating_add);
    join::check_budget(needed, budget)?;

    let mut topk = TopK::new(query.k);
    let mut rows_checked = 0u64;
    for table in catalog.tables() {
        rows_checked += table.live_row_count() as u64;
        let (j, mapping) = brute_force_table(&tuples, table, m);
        topk.offer(JoinMatch {
            table_id: table.id(),
            j,
            mapping,
        });
    }
    Ok(RunRecord {
        mode: "oracle".into(),
        hasher: "none".into(),
        bits: 0,
        k: query.k,
        initial_column: query.columns[0],
        tables_fetched: catalog.len() as u64,
        tables_pruned_rule1: 0,
        tables_pruned_rule2: 0,
        rows_checked,
        rows_verified: rows_checked,
        tp: 0,
        fp: 0,
        precision: 1.0,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        results: topk.into_vec(),
    })
}
