//! Binary index directory.
//!
//! Every binary file is `header | body | xxh64(header | body)` with all integers
//! little-endian. Header: magic, version u16, hasher token (u8 length + bytes),
//! component flags u8, bits/alpha/beta/length_bits u16 each, hash count u16,
//! seed u64, frequency-table digest u64.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use super::Index;
use crate::bitarray::BitArray;
use crate::corpus::{Catalog, Cell, CellLocation, Table};
use crate::error::{Error, Result};
use crate::hashers::{HasherKind, HasherSpec};
use crate::xash::{FrequencyTable, XashComponents, XashParams};

pub const MAGIC: &[u8; 8] = b"MATEIDX1";
pub const FORMAT_VERSION: u16 = 1;

pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const TERMS_FILE: &str = "terms.bin";
pub const POSTINGS_FILE: &str = "postings.bin";
pub const SUPERKEYS_FILE: &str = "superkeys.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u16,
    next_table_id: u32,
}

fn header(h: &HasherSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let token = h.kind.token().as_bytes();
    out.push(token.len() as u8);
    out.extend_from_slice(token);
    out.push(h.components.to_bits());
    let p = &h.params;
    for v in [p.bits, p.alpha, p.beta, p.length_bits, h.hash_count] {
        out.extend_from_slice(&(v as u16).to_le_bytes());
    }
    out.extend_from_slice(&h.seed.to_le_bytes());
    out.extend_from_slice(&p.frequency.digest().to_le_bytes());
    out
}

fn seal(mut bytes: Vec<u8>) -> Vec<u8> {
    let sum = XxHash64::oneshot(0, &bytes);
    bytes.extend_from_slice(&sum.to_le_bytes());
    bytes
}

fn write_file(dir: &Path, name: &str, bytes: Vec<u8>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, seal(bytes)).map_err(|e| Error::io(path, e))
}

impl Index {
    /// Writes the index into `dir`, creating it if needed. Output is a pure
    /// function of the index contents.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.catalog.write_jsonl(&dir.join(CATALOG_FILE))?;

        let head = header(&self.hasher);
        let terms_sorted = self.terms_sorted();

        let mut terms = head.clone();
        let mut postings = head.clone();
        terms.extend_from_slice(&(terms_sorted.len() as u64).to_le_bytes());
        postings.extend_from_slice(&(self.posting_count() as u64).to_le_bytes());
        let mut offset = 0u64;
        for (term, list) in &terms_sorted {
            terms.extend_from_slice(&(term.len() as u32).to_le_bytes());
            terms.extend_from_slice(term.as_bytes());
            terms.extend_from_slice(&offset.to_le_bytes());
            terms.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for loc in *list {
                postings.extend_from_slice(&loc.table_id.to_le_bytes());
                postings.extend_from_slice(&loc.column_id.to_le_bytes());
                postings.extend_from_slice(&loc.row_id.to_le_bytes());
            }
            offset += list.len() as u64;
        }

        let mut keys = head;
        let sorted = self.super_keys_sorted();
        keys.extend_from_slice(&(sorted.len() as u64).to_le_bytes());
        for ((t, r), sk) in sorted {
            keys.extend_from_slice(&t.to_le_bytes());
            keys.extend_from_slice(&r.to_le_bytes());
            keys.extend_from_slice(&sk.to_bytes());
        }

        write_file(dir, TERMS_FILE, terms)?;
        write_file(dir, POSTINGS_FILE, postings)?;
        write_file(dir, SUPERKEYS_FILE, keys)?;

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            next_table_id: self.catalog.next_id(),
        };
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string(&manifest)? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads an index built with the default frequency table.
    pub fn load(dir: impl AsRef<Path>) -> Result<Index> {
        Self::load_with_frequency(dir, FrequencyTable::default())
    }

    /// Loads an index, failing with a compatibility error when it was built
    /// with a different frequency table.
    pub fn load_with_frequency(dir: impl AsRef<Path>, frequency: FrequencyTable) -> Result<Index> {
        let dir = dir.as_ref();
        let (hasher, terms_body) = read_file(dir, TERMS_FILE, frequency)?;
        let (h2, postings_body) = read_file(dir, POSTINGS_FILE, frequency)?;
        let (h3, keys_body) = read_file(dir, SUPERKEYS_FILE, frequency)?;
        if h2 != hasher || h3 != hasher {
            return Err(Error::format(POSTINGS_FILE, "headers of index files disagree"));
        }

        let mut r = Reader::new(POSTINGS_FILE, &postings_body);
        let n_postings = r.u64()? as usize;
        let mut flat = Vec::with_capacity(n_postings.min(postings_body.len() / 10));
        for _ in 0..n_postings {
            let table_id = r.u32()?;
            let column_id = r.u16()?;
            let row_id = r.u32()?;
            flat.push(CellLocation {
                table_id,
                column_id,
                row_id,
            });
        }
        r.finish()?;

        let mut r = Reader::new(TERMS_FILE, &terms_body);
        let n_terms = r.u64()? as usize;
        let mut postings: HashMap<Box<str>, Vec<CellLocation>> = HashMap::with_capacity(n_terms);
        for _ in 0..n_terms {
            let len = r.u32()? as usize;
            let bytes = r.take(len)?;
            let term = std::str::from_utf8(bytes)
                .map_err(|_| Error::format(TERMS_FILE, "term is not UTF-8"))?;
            let offset = r.u64()? as usize;
            let count = r.u32()? as usize;
            let list = offset
                .checked_add(count)
                .and_then(|end| flat.get(offset..end))
                .ok_or_else(|| Error::format(TERMS_FILE, "posting range out of bounds"))?;
            postings.insert(term.into(), list.to_vec());
        }
        r.finish()?;

        let mut r = Reader::new(SUPERKEYS_FILE, &keys_body);
        let n_keys = r.u64()? as usize;
        let width = hasher.params.bits;
        let mut super_keys = HashMap::with_capacity(n_keys);
        for _ in 0..n_keys {
            let t = r.u32()?;
            let row = r.u32()?;
            let sk = BitArray::from_bytes(width, r.take(width / 8)?)
                .map_err(|e| Error::format(SUPERKEYS_FILE, e.to_string()))?;
            super_keys.insert((t, row), sk);
        }
        r.finish()?;

        let catalog = rebuild_catalog(dir, &postings, &super_keys)?;
        Ok(Index::from_parts(catalog, hasher, postings, super_keys))
    }
}

/// Reconstructs normalized table contents: live rows are those with a super
/// key, and unindexed cells are empty.
fn rebuild_catalog(
    dir: &Path,
    postings: &HashMap<Box<str>, Vec<CellLocation>>,
    super_keys: &HashMap<(u32, u32), BitArray>,
) -> Result<Catalog> {
    let handles = Catalog::read_jsonl(&dir.join(CATALOG_FILE))?;
    let mut rows: HashMap<u32, Vec<Option<Vec<Cell>>>> = HashMap::new();
    let mut n_cols: HashMap<u32, usize> = HashMap::new();
    for h in &handles {
        let slots = (0..h.n_rows as u32)
            .map(|r| {
                super_keys
                    .contains_key(&(h.table_id, r))
                    .then(|| vec![Cell::new(""); h.n_cols])
            })
            .collect();
        rows.insert(h.table_id, slots);
        n_cols.insert(h.table_id, h.n_cols);
    }
    for &(t, r) in super_keys.keys() {
        let live = rows
            .get(&t)
            .and_then(|slots| slots.get(r as usize))
            .is_some_and(Option::is_some);
        if !live {
            return Err(Error::format(SUPERKEYS_FILE, format!("row ({t}, {r}) not in catalog")));
        }
    }
    for (term, list) in postings {
        let cell = Cell::new(term);
        if cell.normalized() != &**term {
            return Err(Error::format(TERMS_FILE, format!("term {term:?} is not normalized")));
        }
        for loc in list {
            let slot = rows
                .get_mut(&loc.table_id)
                .and_then(|slots| slots.get_mut(loc.row_id as usize))
                .and_then(Option::as_mut)
                .and_then(|cells| cells.get_mut(loc.column_id as usize))
                .ok_or_else(|| Error::format(POSTINGS_FILE, format!("dangling posting {loc:?}")))?;
            *slot = cell.clone();
        }
    }
    let mut catalog = Catalog::new();
    for h in handles {
        let slots = rows.remove(&h.table_id).unwrap_or_default();
        catalog.insert_with_id(Table::from_normalized(h, slots));
    }
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.exists() {
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        catalog.set_next_id(m.next_table_id);
    }
    Ok(catalog)
}

/// Reads one sealed file and returns its hasher and body.
fn read_file(dir: &Path, name: &str, frequency: FrequencyTable) -> Result<(HasherSpec, Vec<u8>)> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() < MAGIC.len() + 2 + 8 {
        return Err(Error::format(name, "truncated"));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(name, "bad magic"));
    }
    let (sealed, sum) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(sum.try_into().expect("8 bytes"));
    if XxHash64::oneshot(0, sealed) != stored {
        return Err(Error::Checksum(name.to_string()));
    }

    let mut r = Reader::new(name, &sealed[MAGIC.len()..]);
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(name, format!("unsupported version {version}")));
    }
    let token_len = r.u8()? as usize;
    let token = std::str::from_utf8(r.take(token_len)?)
        .map_err(|_| Error::format(name, "hasher token is not UTF-8"))?;
    let kind: HasherKind = token
        .parse()
        .map_err(|_| Error::format(name, format!("unknown hasher {token:?}")))?;
    let components = XashComponents::from_bits(r.u8()?);
    let bits = r.u16()? as usize;
    let alpha = r.u16()? as usize;
    let beta = r.u16()? as usize;
    let length_bits = r.u16()? as usize;
    let hash_count = r.u16()? as usize;
    let seed = r.u64()?;
    let digest = r.u64()?;
    if digest != frequency.digest() {
        return Err(Error::Compatibility(format!(
            "index was built with frequency table {digest:016x}, got {:016x}",
            frequency.digest()
        )));
    }
    let expected = XashParams::compute_with(bits, 1, frequency)
        .map_err(|e| Error::format(name, e.to_string()))?;
    if expected.beta != beta || expected.length_bits != length_bits || alpha < 2 || alpha > bits {
        return Err(Error::format(name, "inconsistent layout parameters"));
    }
    let params = XashParams {
        bits,
        alpha,
        beta,
        length_bits,
        frequency,
    };
    let hasher = HasherSpec {
        kind,
        params,
        hash_count,
        seed,
        components,
    };
    let body = r.rest().to_vec();
    Ok((hasher, body))
}

struct Reader<'a> {
    file: &'a str,
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(file: &'a str, buf: &'a [u8]) -> Self {
        Reader { file, buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::format(self.file, "truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn rest(&self) -> &'a [u8] {
        self.buf
    }

    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::format(self.file, "trailing bytes"))
        }
    }
}
