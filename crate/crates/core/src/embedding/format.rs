//! The BLME embedding file.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "BLME"
//! 4       2           version (u16, little-endian) = 1
//! 6       4           dim (u32)
//! 10      8           count (u64)
//! 18      16 * count  index: (id-hash u64, byte offset u64) per entry
//! ...     4*dim*count payload: f32 little-endian vectors
//! ```
//!
//! Offsets are absolute from the start of the file. The writer emits entries
//! in ascending id order, so equal tables produce identical bytes.

use std::collections::HashSet;
use std::path::Path;

use super::table::EmbeddingTable;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::generator::SentenceId;

pub const MAGIC: &[u8; 4] = b"BLME";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;
const INDEX_ENTRY_LEN: usize = 16;

pub fn payload_len(count: usize, dim: usize) -> usize {
    count * dim * 4
}

pub fn encode(table: &EmbeddingTable) -> Vec<u8> {
    let count = table.len();
    let dim = table.dim();
    let payload_start = HEADER_LEN + INDEX_ENTRY_LEN * count;
    let mut out = Vec::with_capacity(payload_start + payload_len(count, dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(count as u64).to_le_bytes());
    for (i, (id, _)) in table.iter().enumerate() {
        out.extend_from_slice(&id.0.to_le_bytes());
        out.extend_from_slice(&((payload_start + i * dim * 4) as u64).to_le_bytes());
    }
    for (_, v) in table.iter() {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(b[at..at + 2].try_into().unwrap())
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingTable> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(format!(
            "truncated header ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format("bad magic (not a BLME file)"));
    }
    let version = read_u16(bytes, 4);
    if version != VERSION {
        return Err(Error::format(format!("unsupported version {version}")));
    }
    let dim = read_u32(bytes, 6) as usize;
    let count =
        usize::try_from(read_u64(bytes, 10)).map_err(|_| Error::format("count overflows"))?;
    let payload_start = count
        .checked_mul(INDEX_ENTRY_LEN)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format("count overflows"))?;
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(payload_start))
        .ok_or_else(|| Error::format("size overflows"))?;
    if bytes.len() < expected {
        return Err(Error::format(format!(
            "truncated blob: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::format(format!(
            "trailing data: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut table = EmbeddingTable::new(dim)?;
    let mut seen = HashSet::with_capacity(count);
    for i in 0..count {
        let at = HEADER_LEN + i * INDEX_ENTRY_LEN;
        let id = SentenceId(read_u64(bytes, at));
        let offset = usize::try_from(read_u64(bytes, at + 8))
            .map_err(|_| Error::format("offset overflows"))?;
        if offset < payload_start
            || offset + dim * 4 > bytes.len()
            || (offset - payload_start) % 4 != 0
        {
            return Err(Error::format(format!(
                "entry {i} has out-of-range offset {offset}"
            )));
        }
        if !seen.insert(id) {
            return Err(Error::format(format!("duplicate id {id}")));
        }
        let v = bytes[offset..offset + dim * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        table.insert(id, v)?;
    }
    Ok(table)
}

pub fn write_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    write_atomic(path, &encode(table))
}

pub fn read_table(path: &Path) -> Result<EmbeddingTable> {
    decode(&std::fs::read(path)?)
}

/// Reads a table and insists on a given width.
pub fn read_table_with_dim(path: &Path, dim: usize) -> Result<EmbeddingTable> {
    let table = read_table(path)?;
    if table.dim() != dim {
        return Err(Error::format(format!(
            "dim mismatch: file has {}, expected {dim}",
            table.dim()
        )));
    }
    Ok(table)
}

/// Debug sidecar: one `id<TAB>text` line per sentence, sorted by id.
pub fn write_sidecar<'a>(
    path: &Path,
    sentences: impl IntoIterator<Item = (SentenceId, &'a str)>,
) -> Result<()> {
    let mut rows: Vec<(SentenceId, &str)> = sentences.into_iter().collect();
    rows.sort();
    rows.dedup_by_key(|r| r.0);
    let mut out = String::new();
    for (id, text) in rows {
        out.push_str(&format!("{id}\t{text}\n"));
    }
    write_atomic(path, out.as_bytes())
}
