//! Binary dataset cache.
//!
//! ```text
//! "XCDS"              magic
//! u32                 format version
//! u64 n, u32 d_in, u32 d_out
//! f32 × n·d_in        inputs, row-major
//! f32 × n·d_out       targets, row-major
//! u64 len, len bytes  manifest: UTF-8 JSON object of string pairs
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use xai_chest_core::neural::Dataset;

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"XCDS";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode(data: &Dataset) -> Vec<u8> {
    let manifest = serde_json::to_vec(&data.meta).expect("string map serialises");
    let mut out = Vec::with_capacity(28 + 4 * (data.inputs.len() + data.targets.len()) + manifest.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    out.extend_from_slice(&(data.d_in as u32).to_le_bytes());
    out.extend_from_slice(&(data.d_out as u32).to_le_bytes());
    for v in data.inputs.iter().chain(&data.targets) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            format!("truncated: need {n} bytes at offset {}, file has {}", self.pos, self.bytes.len())
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> std::result::Result<Vec<f32>, String> {
        let bytes = self.take(n.checked_mul(4).ok_or("payload size overflows")?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Dataset, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not an XCDS dataset (bad magic)".into());
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version} (this build reads {FORMAT_VERSION})"));
    }
    let n = r.u64()? as usize;
    let d_in = r.u32()? as usize;
    let d_out = r.u32()? as usize;
    let inputs = r.f32s(n.checked_mul(d_in).ok_or("dims overflow")?)?;
    let targets = r.f32s(n.checked_mul(d_out).ok_or("dims overflow")?)?;
    let len = r.u64()? as usize;
    let meta: BTreeMap<String, String> = serde_json::from_slice(r.take(len)?).map_err(|e| format!("manifest block: {e}"))?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes after manifest", bytes.len() - r.pos));
    }
    let mut data = Dataset::from_rows(inputs, targets, d_in, d_out).map_err(|e| e.to_string())?;
    data.meta = meta;
    Ok(data)
}

pub fn save(data: &Dataset, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, &encode(data))
}

pub fn load(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes).map_err(|msg| HarnessError::format(path, msg))
}
