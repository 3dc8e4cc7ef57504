use serde::{Deserialize, Serialize};

use super::{super_key_of_cells, Index};
use crate::corpus::{CellLocation, Table};
use crate::error::{Error, Result};
use crate::hashers::RowValueHasher;

/// A corpus edit, applied to the catalog and the index together.
///
/// Serialized as one JSON object per line, tagged by `op`:
/// `{"op":"update_cell","table_id":0,"row_id":3,"column_id":1,"value":"x"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    InsertTable {
        name: String,
        #[serde(default)]
        header: Option<Vec<String>>,
        rows: Vec<Vec<String>>,
    },
    InsertRow {
        table_id: u32,
        values: Vec<String>,
    },
    AddColumn {
        table_id: u32,
        #[serde(default)]
        name: Option<String>,
        /// One value per row slot; values for deleted rows are ignored.
        values: Vec<String>,
    },
    UpdateCell {
        table_id: u32,
        row_id: u32,
        column_id: u16,
        value: String,
    },
    DeleteTable {
        table_id: u32,
    },
    DeleteRow {
        table_id: u32,
        row_id: u32,
    },
    DeleteColumn {
        table_id: u32,
        column_id: u16,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    InsertTable,
    InsertRow,
    AddColumn,
    UpdateCell,
    DeleteTable,
    DeleteRow,
    DeleteColumn,
}

impl Edit {
    pub fn kind(&self) -> EditKind {
        match self {
            Edit::InsertTable { .. } => EditKind::InsertTable,
            Edit::InsertRow { .. } => EditKind::InsertRow,
            Edit::AddColumn { .. } => EditKind::AddColumn,
            Edit::UpdateCell { .. } => EditKind::UpdateCell,
            Edit::DeleteTable { .. } => EditKind::DeleteTable,
            Edit::DeleteRow { .. } => EditKind::DeleteRow,
            Edit::DeleteColumn { .. } => EditKind::DeleteColumn,
        }
    }
}

impl Index {
    /// Applies one edit. The resulting postings and super keys equal those of a
    /// fresh build over the edited corpus with the same hasher.
    ///
    /// Returns the affected table id. On error the index is unchanged.
    pub fn apply_edit(&mut self, edit: &Edit) -> Result<u32> {
        match edit {
            Edit::InsertTable { name, header, rows } => {
                let table = Table::from_raw_rows(name.clone(), header.clone(), rows)?;
                let handle = self.catalog.register(table);
                self.index_table(handle.table_id)?;
                Ok(handle.table_id)
            }
            Edit::InsertRow { table_id, values } => {
                let row_id = self.catalog.table_mut(*table_id)?.push_row(values)?;
                let cells = self.catalog.table(*table_id)?.row(row_id).expect("just pushed").to_vec();
                for (col, cell) in cells.iter().enumerate() {
                    self.add_posting(cell.normalized(), loc(*table_id, col, row_id));
                }
                self.super_keys
                    .insert((*table_id, row_id), super_key_of_cells(&cells, &self.hasher));
                Ok(*table_id)
            }
            Edit::AddColumn {
                table_id,
                name,
                values,
            } => {
                let col = self.catalog.table_mut(*table_id)?.push_column(name.clone(), values)?;
                let table = self.catalog.table(*table_id)?;
                let added: Vec<(u32, String)> = table
                    .rows()
                    .map(|(r, cells)| (r, cells[col as usize].normalized().to_string()))
                    .collect();
                for (row_id, value) in added {
                    self.add_posting(&value, loc(*table_id, col as usize, row_id));
                    let h = self.hasher.hash_str(&value);
                    if let Some(sk) = self.super_keys.get_mut(&(*table_id, row_id)) {
                        sk.or_assign_unchecked(&h);
                    }
                }
                Ok(*table_id)
            }
            Edit::UpdateCell {
                table_id,
                row_id,
                column_id,
                value,
            } => {
                let old = self
                    .catalog
                    .table_mut(*table_id)?
                    .set_cell(*row_id, *column_id, value)?;
                let at = loc(*table_id, *column_id as usize, *row_id);
                self.remove_posting(old.normalized(), at);
                let new = self.catalog.table(*table_id)?.row(*row_id).expect("row exists")
                    [*column_id as usize]
                    .normalized()
                    .to_string();
                self.add_posting(&new, at);
                self.rehash_row(*table_id, *row_id)?;
                Ok(*table_id)
            }
            Edit::DeleteTable { table_id } => {
                self.remove_table_postings(*table_id)?;
                self.catalog.remove(*table_id)?;
                Ok(*table_id)
            }
            Edit::DeleteRow { table_id, row_id } => {
                let cells = self.catalog.table_mut(*table_id)?.remove_row(*row_id)?;
                for (col, cell) in cells.iter().enumerate() {
                    self.remove_posting(cell.normalized(), loc(*table_id, col, *row_id));
                }
                self.super_keys.remove(&(*table_id, *row_id));
                Ok(*table_id)
            }
            Edit::DeleteColumn {
                table_id,
                column_id,
            } => {
                {
                    // validate before touching the index
                    let t = self.catalog.table(*table_id)?;
                    if *column_id as usize >= t.n_cols() {
                        return Err(Error::NotFound(format!(
                            "column {column_id} of table {table_id}"
                        )));
                    }
                    if t.n_cols() == 1 {
                        return Err(Error::Param(format!(
                            "cannot delete the only column of table {table_id}"
                        )));
                    }
                }
                // column ids right of the deleted one shift, so the table is re-indexed
                self.remove_table_postings(*table_id)?;
                self.catalog.table_mut(*table_id)?.remove_column(*column_id)?;
                self.index_table(*table_id)?;
                Ok(*table_id)
            }
        }
    }
}

fn loc(table_id: u32, col: usize, row_id: u32) -> CellLocation {
    CellLocation {
        table_id,
        column_id: col as u16,
        row_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Catalog;
    use crate::hashers::HasherSpec;
    use crate::xash::XashParams;

    fn setup() -> Index {
        let mut cat = Catalog::new();
        cat.register(Table::from_raw_rows("t", None, &[vec!["Muhammad", "Lee"], vec!["Ali", "US"]]).unwrap());
        Index::build(cat, HasherSpec::xash(XashParams::with_alpha(128, 4).unwrap())).unwrap()
    }

    fn rebuilt(idx: &Index) -> Index {
        Index::build(idx.catalog().clone(), *idx.hasher()).unwrap()
    }

    #[test]
    fn add_column_ors_new_hash() {
        let mut idx = setup();
        let before = *idx.super_key(0, 0).unwrap();
        idx.apply_edit(&Edit::AddColumn {
            table_id: 0,
            name: None,
            values: vec!["Dancer".into(), "Boxer".into()],
        })
        .unwrap();
        let expected = before.or(&idx.hasher().hash_str("dancer")).unwrap();
        assert_eq!(idx.super_key(0, 0), Some(&expected));
        assert!(before.is_covered_by(&expected).unwrap());
        assert_eq!(idx.diff(&rebuilt(&idx)), None);
    }

    #[test]
    fn update_cell_rehashes_row() {
        let mut idx = setup();
        idx.apply_edit(&Edit::UpdateCell {
            table_id: 0,
            row_id: 0,
            column_id: 1,
            value: "Khan".into(),
        })
        .unwrap();
        assert!(idx.lookup("lee").is_empty());
        assert_eq!(idx.lookup("khan").len(), 1);
        let h = idx.hasher();
        let expected = h.hash_str("muhammad").or(&h.hash_str("khan")).unwrap();
        assert_eq!(idx.super_key(0, 0), Some(&expected));
        assert_eq!(idx.diff(&rebuilt(&idx)), None);
    }

    #[test]
    fn delete_row_keeps_other_rows() {
        let mut idx = setup();
        let other = *idx.super_key(0, 1).unwrap();
        idx.apply_edit(&Edit::DeleteRow { table_id: 0, row_id: 0 }).unwrap();
        assert!(idx.lookup("muhammad").is_empty());
        assert!(idx.super_key(0, 0).is_none());
        assert_eq!(idx.super_key(0, 1), Some(&other));
        assert!(idx.catalog().get_row(0, 0).is_err());
        assert_eq!(idx.diff(&rebuilt(&idx)), None);
    }

    #[test]
    fn delete_column_shifts_ids() {
        let mut idx = setup();
        idx.apply_edit(&Edit::DeleteColumn { table_id: 0, column_id: 0 }).unwrap();
        assert!(idx.lookup("muhammad").is_empty());
        assert_eq!(idx.lookup("lee")[0].column_id, 0);
        assert_eq!(idx.diff(&rebuilt(&idx)), None);
        let err = idx.apply_edit(&Edit::DeleteColumn { table_id: 0, column_id: 0 });
        assert!(err.is_err());
    }

    #[test]
    fn insert_and_delete_tables() {
        let mut idx = setup();
        let id = idx
            .apply_edit(&Edit::InsertTable {
                name: "n".into(),
                header: None,
                rows: vec![vec!["lee".into()]],
            })
            .unwrap();
        assert_eq!(id, 1);
        assert_eq!(idx.lookup("lee").len(), 2);
        idx.apply_edit(&Edit::InsertRow { table_id: 1, values: vec!["x".into()] }).unwrap();
        assert_eq!(idx.lookup("x")[0].row_id, 1);
        idx.apply_edit(&Edit::DeleteTable { table_id: 0 }).unwrap();
        assert_eq!(idx.lookup("lee").len(), 1);
        assert!(idx.super_key(0, 1).is_none());
        assert_eq!(idx.diff(&rebuilt(&idx)), None);
    }

    #[test]
    fn missing_entities_are_not_found() {
        let mut idx = setup();
        for e in [
            Edit::DeleteTable { table_id: 9 },
            Edit::DeleteRow { table_id: 0, row_id: 9 },
            Edit::UpdateCell { table_id: 0, row_id: 0, column_id: 7, value: "v".into() },
            Edit::InsertRow { table_id: 3, values: vec![] },
        ] {
            assert!(matches!(idx.apply_edit(&e), Err(Error::NotFound(_))), "{e:?}");
        }
        assert!(matches!(
            idx.apply_edit(&Edit::InsertRow { table_id: 0, values: vec!["a".into(); 3] }),
            Err(Error::Param(_))
        ));
        assert_eq!(idx.diff(&setup()), None);
    }

    #[test]
    fn edit_json_shape() {
        let e: Edit = serde_json::from_str(r#"{"op":"delete_row","table_id":1,"row_id":2}"#).unwrap();
        assert_eq!(e, Edit::DeleteRow { table_id: 1, row_id: 2 });
        assert_eq!(e.kind(), EditKind::DeleteRow);
        let s = serde_json::to_string(&Edit::AddColumn { table_id: 0, name: None, values: vec![] }).unwrap();
        assert_eq!(s, r#"{"op":"add_column","table_id":0,"name":null,"values":[]}"#);
    }
}
