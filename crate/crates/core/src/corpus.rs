//! Table corpus: CSV ingestion, value normalization and the table catalog.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cell value after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedValue {
    text: String,
    len: usize,
}

impl NormalizedValue {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Character count of the normalized text.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

impl std::fmt::Display for NormalizedValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

/// Lowercases, trims, and collapses internal whitespace runs to a single space.
pub fn normalize_value(raw: &str) -> NormalizedValue {
    let lowered = raw.to_lowercase();
    let mut text = String::with_capacity(lowered.len());
    for (i, word) in lowered.split_whitespace().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        text.push_str(word);
    }
    let len = text.chars().count();
    NormalizedValue { text, len }
}

pub(crate) fn normalize_str(raw: &str) -> Box<str> {
    normalize_value(raw).text.into_boxed_str()
}

/// One stored cell. `raw` is kept only when it differs from the normalized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    norm: Box<str>,
    raw: Option<Box<str>>,
}

impl Cell {
    pub fn new(raw: &str) -> Self {
        let norm = normalize_str(raw);
        let raw = (raw != &*norm).then(|| raw.into());
        Cell { norm, raw }
    }

    pub fn normalized(&self) -> &str {
        &self.norm
    }

    pub fn raw(&self) -> &str {
        self.raw.as_deref().unwrap_or(&self.norm)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableHandle {
    pub table_id: u32,
    pub name: String,
    /// Row slots, including deleted rows (row ids are never reused).
    pub n_rows: usize,
    pub n_cols: usize,
    pub source_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellLocation {
    pub table_id: u32,
    pub column_id: u16,
    pub row_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub unique_value_count: u64,
    pub total_rows: u64,
    pub avg_columns: f64,
}

/// A table's contents. Deleted rows keep their slot as `None`.
#[derive(Debug, Clone)]
pub struct Table {
    pub handle: TableHandle,
    pub header: Option<Vec<String>>,
    rows: Vec<Option<Vec<Cell>>>,
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            delimiter: b',',
        }
    }
}

impl Table {
    /// Builds a table from raw string rows, padding ragged rows with empty cells.
    pub fn from_raw_rows<S: AsRef<str>>(
        name: impl Into<String>,
        header: Option<Vec<String>>,
        rows: &[Vec<S>],
    ) -> Result<Table> {
        let name = name.into();
        if rows.is_empty() {
            return Err(Error::EmptyTable(name));
        }
        let n_cols = rows
            .iter()
            .map(Vec::len)
            .chain(header.as_ref().map(Vec::len))
            .max()
            .unwrap_or(0)
            .max(1);
        if n_cols > u16::MAX as usize {
            return Err(Error::Param(format!("{name}: {n_cols} columns")));
        }
        let rows: Vec<Option<Vec<Cell>>> = rows
            .iter()
            .map(|r| {
                let mut cells: Vec<Cell> = r.iter().map(|v| Cell::new(v.as_ref())).collect();
                cells.resize_with(n_cols, || Cell::new(""));
                Some(cells)
            })
            .collect();
        Ok(Table {
            handle: TableHandle {
                table_id: 0,
                name,
                n_rows: rows.len(),
                n_cols,
                source_path: String::new(),
            },
            header,
            rows,
        })
    }

    /// Reads a CSV file (RFC 4180 quoting, UTF-8) without registering it anywhere.
    pub fn from_csv(path: &Path, opts: CsvOptions) -> Result<Table> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(opts.delimiter)
            .from_path(path)
            .map_err(csv_err)?;
        let mut records = reader.records();
        let header = if opts.has_header {
            match records.next() {
                Some(rec) => Some(rec.map_err(csv_err)?.iter().map(str::to_string).collect()),
                None => None,
            }
        } else {
            None
        };
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_err)?;
            rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut table = Table::from_raw_rows(name, header, &rows).map_err(|e| match e {
            Error::EmptyTable(_) => Error::EmptyTable(path.display().to_string()),
            other => other,
        })?;
        table.handle.source_path = path.display().to_string();
        Ok(table)
    }

    pub fn id(&self) -> u32 {
        self.handle.table_id
    }

    pub fn n_cols(&self) -> usize {
        self.handle.n_cols
    }

    /// Number of row slots, deleted rows included.
    pub fn n_row_slots(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, row_id: u32) -> Option<&[Cell]> {
        self.rows.get(row_id as usize)?.as_deref()
    }

    /// Live rows with their ids.
    pub fn rows(&self) -> impl Iterator<Item = (u32, &[Cell])> + '_ {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_deref().map(|cells| (i as u32, cells)))
    }

    pub fn live_row_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    /// Distinct normalized values in a column.
    pub fn column_cardinality(&self, column_id: usize) -> Result<usize> {
        if column_id >= self.n_cols() {
            return Err(Error::NotFound(format!(
                "column {column_id} of table {}",
                self.handle.table_id
            )));
        }
        let distinct: HashSet<&str> = self
            .rows()
            .map(|(_, cells)| cells[column_id].normalized())
            .collect();
        Ok(distinct.len())
    }

    /// Resolves a column by 0-based index or header name.
    pub fn resolve_column(&self, key: &str) -> Result<usize> {
        if let Some(header) = &self.header {
            if let Some(pos) = header.iter().position(|h| h == key) {
                return Ok(pos);
            }
            let wanted = normalize_str(key);
            if let Some(pos) = header.iter().position(|h| normalize_str(h) == wanted) {
                return Ok(pos);
            }
        }
        match key.trim().parse::<usize>() {
            Ok(i) if i < self.n_cols() => Ok(i),
            _ => Err(Error::NotFound(format!(
                "column {key:?} in table {}",
                self.handle.name
            ))),
        }
    }

    pub(crate) fn push_row(&mut self, raw: &[String]) -> Result<u32> {
        if raw.len() > self.n_cols() {
            return Err(Error::Param(format!(
                "row has {} values, table {} has {} columns",
                raw.len(),
                self.handle.table_id,
                self.n_cols()
            )));
        }
        let mut cells: Vec<Cell> = raw.iter().map(|v| Cell::new(v)).collect();
        cells.resize_with(self.n_cols(), || Cell::new(""));
        self.rows.push(Some(cells));
        self.handle.n_rows = self.rows.len();
        Ok(self.handle.n_rows as u32 - 1)
    }

    pub(crate) fn push_column(&mut self, name: Option<String>, values: &[String]) -> Result<u16> {
        if values.len() != self.rows.len() {
            return Err(Error::Param(format!(
                "new column has {} values, table {} has {} row slots",
                values.len(),
                self.handle.table_id,
                self.rows.len()
            )));
        }
        if self.n_cols() >= u16::MAX as usize {
            return Err(Error::Param("too many columns".into()));
        }
        for (row, v) in self.rows.iter_mut().zip(values) {
            if let Some(cells) = row {
                cells.push(Cell::new(v));
            }
        }
        if let Some(h) = &mut self.header {
            h.push(name.unwrap_or_default());
        }
        self.handle.n_cols += 1;
        Ok(self.handle.n_cols as u16 - 1)
    }

    pub(crate) fn set_cell(&mut self, row_id: u32, column_id: u16, raw: &str) -> Result<Cell> {
        let table_id = self.handle.table_id;
        let n_cols = self.n_cols();
        let cells = self
            .rows
            .get_mut(row_id as usize)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::NotFound(format!("row {row_id} of table {table_id}")))?;
        if column_id as usize >= n_cols {
            return Err(Error::NotFound(format!("column {column_id} of table {table_id}")));
        }
        Ok(std::mem::replace(&mut cells[column_id as usize], Cell::new(raw)))
    }

    pub(crate) fn remove_row(&mut self, row_id: u32) -> Result<Vec<Cell>> {
        let table_id = self.handle.table_id;
        self.rows
            .get_mut(row_id as usize)
            .and_then(Option::take)
            .ok_or_else(|| Error::NotFound(format!("row {row_id} of table {table_id}")))
    }

    pub(crate) fn remove_column(&mut self, column_id: u16) -> Result<()> {
        let c = column_id as usize;
        if c >= self.n_cols() {
            return Err(Error::NotFound(format!(
                "column {column_id} of table {}",
                self.handle.table_id
            )));
        }
        if self.n_cols() == 1 {
            return Err(Error::Param(format!(
                "cannot delete the only column of table {}",
                self.handle.table_id
            )));
        }
        for cells in self.rows.iter_mut().flatten() {
            cells.remove(c);
        }
        if let Some(h) = &mut self.header {
            if c < h.len() {
                h.remove(c);
            }
        }
        self.handle.n_cols -= 1;
        Ok(())
    }

    /// Rebuilds a table from normalized cells; used when loading a persisted index.
    pub(crate) fn from_normalized(handle: TableHandle, rows: Vec<Option<Vec<Cell>>>) -> Table {
        Table {
            handle,
            header: None,
            rows,
        }
    }
}

/// Registry of ingested tables. Ids are assigned monotonically and never reused.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: BTreeMap<u32, Table>,
    next_id: u32,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest_csv(&mut self, path: impl AsRef<Path>, opts: CsvOptions) -> Result<TableHandle> {
        let table = Table::from_csv(path.as_ref(), opts)?;
        Ok(self.register(table))
    }

    /// Ingests every `*.csv` file in a directory, in file-name order.
    pub fn ingest_dir(&mut self, dir: impl AsRef<Path>, opts: CsvOptions) -> Result<Vec<TableHandle>> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
            .collect();
        paths.sort();
        paths.iter().map(|p| self.ingest_csv(p, opts)).collect()
    }

    /// Registers a table under the next free id and returns its handle.
    pub fn register(&mut self, mut table: Table) -> TableHandle {
        table.handle.table_id = self.next_id;
        self.next_id += 1;
        let handle = table.handle.clone();
        self.tables.insert(handle.table_id, table);
        handle
    }

    pub(crate) fn insert_with_id(&mut self, table: Table) {
        let id = table.handle.table_id;
        self.next_id = self.next_id.max(id + 1);
        self.tables.insert(id, table);
    }

    pub(crate) fn set_next_id(&mut self, next_id: u32) {
        self.next_id = self.next_id.max(next_id);
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn table(&self, table_id: u32) -> Result<&Table> {
        self.tables
            .get(&table_id)
            .ok_or_else(|| Error::NotFound(format!("table {table_id}")))
    }

    pub(crate) fn table_mut(&mut self, table_id: u32) -> Result<&mut Table> {
        self.tables
            .get_mut(&table_id)
            .ok_or_else(|| Error::NotFound(format!("table {table_id}")))
    }

    pub(crate) fn remove(&mut self, table_id: u32) -> Result<Table> {
        self.tables
            .remove(&table_id)
            .ok_or_else(|| Error::NotFound(format!("table {table_id}")))
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> + '_ {
        self.tables.values()
    }

    pub fn handles(&self) -> Vec<TableHandle> {
        self.tables.values().map(|t| t.handle.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn get_row(&self, table_id: u32, row_id: u32) -> Result<Vec<NormalizedValue>> {
        let table = self.table(table_id)?;
        let cells = table
            .row(row_id)
            .ok_or_else(|| Error::NotFound(format!("row {row_id} of table {table_id}")))?;
        Ok(cells.iter().map(|c| normalize_value(c.normalized())).collect())
    }

    pub fn column_cardinality(&self, table_id: u32, column_id: usize) -> Result<usize> {
        self.table(table_id)?.column_cardinality(column_id)
    }

    pub fn stats(&self) -> CorpusStats {
        let mut values: HashSet<&str> = HashSet::new();
        let mut total_rows = 0u64;
        let mut col_sum = 0u64;
        for t in self.tables.values() {
            col_sum += t.n_cols() as u64;
            for (_, cells) in t.rows() {
                total_rows += 1;
                values.extend(cells.iter().map(Cell::normalized));
            }
        }
        let avg_columns = if self.tables.is_empty() {
            1.0
        } else {
            (col_sum as f64 / self.tables.len() as f64).max(1.0)
        };
        CorpusStats {
            unique_value_count: values.len() as u64,
            total_rows,
            avg_columns,
        }
    }

    /// Writes `catalog.jsonl`, one handle per line in id order.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for t in self.tables.values() {
            serde_json::to_writer(&mut out, &t.handle)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<TableHandle>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut handles = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            handles.push(serde_json::from_str(&line)?);
        }
        Ok(handles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_csv(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn normalization_examples() {
        let v = normalize_value("Muhammad");
        assert_eq!(v.as_str(), "muhammad");
        assert_eq!(v.len(), 8);
        assert_eq!(normalize_value("").len(), 0);
        assert_eq!(normalize_value("  US ").as_str(), "us");
        assert_eq!(normalize_value("New \t  York").as_str(), "new york");
        // out-of-alphabet characters are kept and counted
        assert_eq!(normalize_value("Zürich-2").len(), 8);
    }

    #[test]
    fn ingest_counts_and_ids() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "t.csv", "a,b\n1,2\n3,4\n5,6\n");
        let mut cat = Catalog::new();
        let h1 = cat.ingest_csv(&p, CsvOptions::default()).unwrap();
        assert_eq!((h1.n_rows, h1.n_cols), (3, 2));
        let h2 = cat.ingest_csv(&p, CsvOptions::default()).unwrap();
        assert_ne!(h1.table_id, h2.table_id);
        assert_eq!(cat.stats().total_rows, 6);
    }

    #[test]
    fn ragged_rows_are_padded() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "r.csv", "x,y\nx,y,z\nu,v\n");
        let mut cat = Catalog::new();
        let opts = CsvOptions {
            has_header: false,
            ..Default::default()
        };
        let h = cat.ingest_csv(&p, opts).unwrap();
        assert_eq!(h.n_cols, 3);
        let row0 = cat.get_row(h.table_id, 0).unwrap();
        assert_eq!(row0.iter().map(|v| v.as_str()).collect::<Vec<_>>(), ["x", "y", ""]);
        let row2 = cat.get_row(h.table_id, 2).unwrap();
        assert_eq!(row2.iter().map(|v| v.as_str()).collect::<Vec<_>>(), ["u", "v", ""]);
    }

    #[test]
    fn empty_and_missing_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "e.csv", "only,header\n");
        let mut cat = Catalog::new();
        assert!(matches!(
            cat.ingest_csv(&p, CsvOptions::default()),
            Err(Error::EmptyTable(_))
        ));
        assert!(cat
            .ingest_csv(dir.path().join("nope.csv"), CsvOptions::default())
            .is_err());
        assert!(cat.is_empty());
    }

    #[test]
    fn quoting_and_delimiter() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "q.tsv", "\"Lee, Jr\"\t\"say \"\"hi\"\"\"\n");
        let t = Table::from_csv(
            &p,
            CsvOptions {
                has_header: false,
                delimiter: b'\t',
            },
        )
        .unwrap();
        let row = t.row(0).unwrap();
        assert_eq!(row[0].normalized(), "lee, jr");
        assert_eq!(row[0].raw(), "Lee, Jr");
        assert_eq!(row[1].normalized(), "say \"hi\"");
    }

    #[test]
    fn get_row_and_not_found() {
        let mut cat = Catalog::new();
        let h = cat.register(Table::from_raw_rows("one", None, &[vec!["x"]]).unwrap());
        let row = cat.get_row(h.table_id, 0).unwrap();
        assert_eq!(row, vec![normalize_value("x")]);
        assert!(matches!(cat.get_row(h.table_id, 1), Err(Error::NotFound(_))));
        assert!(matches!(cat.get_row(99, 0), Err(Error::NotFound(_))));
    }

    #[test]
    fn cardinality() {
        let mut cat = Catalog::new();
        let rows = vec![vec!["a", "A"], vec!["a", "a"], vec!["b", " a"]];
        let h = cat.register(Table::from_raw_rows("c", None, &rows).unwrap());
        assert_eq!(cat.column_cardinality(h.table_id, 0).unwrap(), 2);
        assert_eq!(cat.column_cardinality(h.table_id, 1).unwrap(), 1);
        assert!(cat.column_cardinality(h.table_id, 2).is_err());
    }

    #[test]
    fn unique_count_matches_brute_force() {
        let mut cat = Catalog::new();
        cat.register(Table::from_raw_rows("a", None, &[vec!["x", "Y"], vec!["y", "z"]]).unwrap());
        cat.register(Table::from_raw_rows("b", None, &[vec!["z ", "w"]]).unwrap());
        let stats = cat.stats();
        assert_eq!(stats.unique_value_count, 4);
        assert_eq!(stats.total_rows, 3);
        assert!((stats.avg_columns - 2.0).abs() < 1e-12);
    }

    #[test]
    fn catalog_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cat = Catalog::new();
        cat.register(Table::from_raw_rows("a", None, &[vec!["1", "2"]]).unwrap());
        cat.register(Table::from_raw_rows("b", None, &[vec!["3"]]).unwrap());
        let p = dir.path().join("catalog.jsonl");
        cat.write_jsonl(&p).unwrap();
        assert_eq!(Catalog::read_jsonl(&p).unwrap(), cat.handles());
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(r#"{"table_id":0,"name":"a","n_rows":1,"n_cols":2,"source_path":""}"#));
    }

    proptest! {
        #[test]
        fn normalize_idempotent(s in "\\PC{0,24}") {
            let once = normalize_value(&s);
            let twice = normalize_value(once.as_str());
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.len(), once.as_str().chars().count());
        }
    }
}
