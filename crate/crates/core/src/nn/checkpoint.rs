//! Model checkpoints.
//!
//! ```text
//! "BLMC" | u16 version | u32 len + kind (utf-8) | u32 len + spec (json)
//! | u32 tensor count | per tensor: u32 ndim, u64 dims..., f64 LE values
//! ```
//!
//! Everything little-endian. The spec JSON is whatever the model needs to
//! rebuild its layers; tensors are stored in the model's parameter order.

use std::path::Path;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BLMC";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RawCheckpoint {
    pub kind: String,
    pub spec_json: String,
    pub tensors: Vec<Tensor>,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_checkpoint(kind: &str, spec_json: &str, tensors: &[&Tensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_str(&mut out, kind);
    put_str(&mut out, spec_json);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("truncated checkpoint at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::format("checkpoint string is not utf-8"))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<RawCheckpoint> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format("bad magic (not a checkpoint)"));
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let kind = r.string()?;
    let spec_json = r.string()?;
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let ndim = r.u32()? as usize;
        if ndim == 0 || ndim > 8 {
            return Err(Error::format(format!("tensor with {ndim} dims")));
        }
        let shape = (0..ndim)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("tensor size overflows"))?;
        let raw = r.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::format("tensor size overflows"))?,
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor::from_vec(&shape, data)?);
    }
    if r.at != bytes.len() {
        return Err(Error::format("trailing data after checkpoint"));
    }
    Ok(RawCheckpoint {
        kind,
        spec_json,
        tensors,
    })
}

pub fn write_checkpoint(
    path: &Path,
    kind: &str,
    spec_json: &str,
    tensors: &[&Tensor],
) -> Result<()> {
    write_atomic(path, &encode_checkpoint(kind, spec_json, tensors))
}

pub fn read_checkpoint(path: &Path) -> Result<RawCheckpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}
