//! Composite-key joinable table discovery.
//!
//! Tables are indexed value by value into posting lists. Each row additionally
//! carries a super key, the OR of its cells' hashes, which lets most candidate
//! rows be rejected without fetching them.

pub mod bench;
pub mod bitarray;
pub mod cli;
pub mod corpus;
pub mod discovery;
pub mod error;
pub mod hashers;
pub mod index;
pub mod xash;

pub use bitarray::BitArray;
pub use corpus::{normalize_value, Catalog, CellLocation, CsvOptions, NormalizedValue, Table, TableHandle};
pub use error::{Error, Result};
pub use hashers::{HasherKind, HasherSpec, RowValueHasher};
pub use index::{Edit, Index};
pub use xash::{xash, FrequencyTable, XashComponents, XashParams};
