//! Extended inverted index: value -> posting list, plus one super key per row.
//!
//! The super key of a row is the bitwise OR of the hashes of all its cells. It
//! is stored once per `(table_id, row_id)` and joined to posting items by row.

mod edit;
mod persist;

use std::collections::HashMap;

pub use edit::{Edit, EditKind};
pub use persist::{FORMAT_VERSION, MAGIC};

use crate::bitarray::BitArray;
use crate::corpus::{Catalog, Cell, CellLocation, NormalizedValue, Table};
use crate::error::{Error, Result};
use crate::hashers::{HasherSpec, RowValueHasher};
use crate::xash::SUPPORTED_WIDTHS;

/// OR of the hasher outputs over a row's values.
pub fn super_key<H: RowValueHasher + ?Sized>(values: &[NormalizedValue], hasher: &H) -> BitArray {
    let mut agg = BitArray::zeros(hasher.bits());
    for v in values {
        agg.or_assign_unchecked(&hasher.hash(v));
    }
    agg
}

pub(crate) fn super_key_of_cells<H: RowValueHasher + ?Sized>(cells: &[Cell], hasher: &H) -> BitArray {
    let mut agg = BitArray::zeros(hasher.bits());
    for c in cells {
        agg.or_assign_unchecked(&hasher.hash_str(c.normalized()));
    }
    agg
}

/// Sort key of posting items: `(table_id, row_id, column_id)`.
#[inline]
pub fn posting_order(loc: &CellLocation) -> (u32, u32, u16) {
    (loc.table_id, loc.row_id, loc.column_id)
}

#[derive(Debug, Clone)]
pub struct Index {
    catalog: Catalog,
    hasher: HasherSpec,
    postings: HashMap<Box<str>, Vec<CellLocation>>,
    super_keys: HashMap<(u32, u32), BitArray>,
}

impl Index {
    /// Indexes every non-empty cell and computes every row's super key.
    pub fn build(catalog: Catalog, hasher: HasherSpec) -> Result<Index> {
        validate_hasher(&hasher)?;
        let mut index = Index {
            catalog,
            hasher,
            postings: HashMap::new(),
            super_keys: HashMap::new(),
        };
        let ids: Vec<u32> = index.catalog.tables().map(Table::id).collect();
        for id in ids {
            index.index_table(id)?;
        }
        Ok(index)
    }

    /// Appends postings and super keys for a table whose id is larger than all
    /// indexed ones, or for a table with no postings yet.
    fn index_table(&mut self, table_id: u32) -> Result<()> {
        let table = self.catalog.table(table_id)?;
        let hasher = &self.hasher;
        for (row_id, cells) in table.rows() {
            self.super_keys
                .insert((table_id, row_id), super_key_of_cells(cells, hasher));
            for (col, cell) in cells.iter().enumerate() {
                let value = cell.normalized();
                if value.is_empty() {
                    continue;
                }
                let loc = CellLocation {
                    table_id,
                    column_id: col as u16,
                    row_id,
                };
                insert_sorted(self.postings.entry(value.into()).or_default(), loc);
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        catalog: Catalog,
        hasher: HasherSpec,
        postings: HashMap<Box<str>, Vec<CellLocation>>,
        super_keys: HashMap<(u32, u32), BitArray>,
    ) -> Index {
        Index {
            catalog,
            hasher,
            postings,
            super_keys,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn hasher(&self) -> &HasherSpec {
        &self.hasher
    }

    /// Posting list of an already-normalized value; empty when absent.
    pub fn lookup(&self, normalized: &str) -> &[CellLocation] {
        self.postings.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lookup_value(&self, v: &NormalizedValue) -> &[CellLocation] {
        self.lookup(v.as_str())
    }

    pub fn super_key(&self, table_id: u32, row_id: u32) -> Option<&BitArray> {
        self.super_keys.get(&(table_id, row_id))
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn posting_count(&self) -> usize {
        self.postings.values().map(Vec::len).sum()
    }

    pub fn row_count(&self) -> usize {
        self.super_keys.len()
    }

    /// Terms in byte order with their postings.
    pub fn terms_sorted(&self) -> Vec<(&str, &[CellLocation])> {
        let mut terms: Vec<(&str, &[CellLocation])> = self
            .postings
            .iter()
            .map(|(k, v)| (&**k, v.as_slice()))
            .collect();
        terms.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
        terms
    }

    pub fn super_keys_sorted(&self) -> Vec<((u32, u32), BitArray)> {
        let mut keys: Vec<_> = self.super_keys.iter().map(|(k, v)| (*k, *v)).collect();
        keys.sort_unstable_by_key(|(k, _)| *k);
        keys
    }

    /// Describes the first difference in postings or super keys, if any.
    pub fn diff(&self, other: &Index) -> Option<String> {
        if self.postings.len() != other.postings.len() {
            return Some(format!(
                "term count {} vs {}",
                self.postings.len(),
                other.postings.len()
            ));
        }
        for (term, list) in self.terms_sorted() {
            let theirs = other.lookup(term);
            if list != theirs {
                return Some(format!("postings of {term:?}: {list:?} vs {theirs:?}"));
            }
        }
        if self.super_keys.len() != other.super_keys.len() {
            return Some(format!(
                "super key count {} vs {}",
                self.super_keys.len(),
                other.super_keys.len()
            ));
        }
        for (key, sk) in self.super_keys_sorted() {
            match other.super_keys.get(&key) {
                Some(o) if *o == sk => {}
                o => return Some(format!("super key of {key:?}: {sk} vs {o:?}")),
            }
        }
        None
    }

    fn add_posting(&mut self, value: &str, loc: CellLocation) {
        if value.is_empty() {
            return;
        }
        insert_sorted(self.postings.entry(value.into()).or_default(), loc);
    }

    fn remove_posting(&mut self, value: &str, loc: CellLocation) {
        if value.is_empty() {
            return;
        }
        if let Some(list) = self.postings.get_mut(value) {
            if let Ok(pos) = list.binary_search_by_key(&posting_order(&loc), posting_order) {
                list.remove(pos);
            }
            if list.is_empty() {
                self.postings.remove(value);
            }
        }
    }

    fn remove_table_postings(&mut self, table_id: u32) -> Result<()> {
        let table = self.catalog.table(table_id)?;
        let mut values: Vec<Box<str>> = table
            .rows()
            .flat_map(|(_, cells)| cells.iter().map(|c| Box::<str>::from(c.normalized())))
            .filter(|v| !v.is_empty())
            .collect();
        values.sort_unstable();
        values.dedup();
        for v in values {
            if let Some(list) = self.postings.get_mut(&v) {
                list.retain(|l| l.table_id != table_id);
                if list.is_empty() {
                    self.postings.remove(&v);
                }
            }
        }
        self.super_keys.retain(|(t, _), _| *t != table_id);
        Ok(())
    }

    fn rehash_row(&mut self, table_id: u32, row_id: u32) -> Result<()> {
        let cells = self
            .catalog
            .table(table_id)?
            .row(row_id)
            .ok_or_else(|| Error::NotFound(format!("row {row_id} of table {table_id}")))?;
        let sk = super_key_of_cells(cells, &self.hasher);
        self.super_keys.insert((table_id, row_id), sk);
        Ok(())
    }
}

fn insert_sorted(list: &mut Vec<CellLocation>, loc: CellLocation) {
    let key = posting_order(&loc);
    match list.last() {
        Some(last) if posting_order(last) < key => list.push(loc),
        None => list.push(loc),
        _ => {
            if let Err(pos) = list.binary_search_by_key(&key, posting_order) {
                list.insert(pos, loc);
            }
        }
    }
}

fn validate_hasher(hasher: &HasherSpec) -> Result<()> {
    let p = &hasher.params;
    if !SUPPORTED_WIDTHS.contains(&p.bits) {
        return Err(Error::Param(format!("hash width {}", p.bits)));
    }
    if hasher.hash_str("").width() != p.bits {
        return Err(Error::WidthMismatch {
            left: hasher.hash_str("").width(),
            right: p.bits,
        });
    }
    Ok(())
}
