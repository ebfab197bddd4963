//! Grid file formats.
//!
//! Binary `GHK1` layout, all little-endian:
//!
//! ```text
//! b"GHK1" | u32 dim | u32 extents[dim] | f64 spacing | i64 origin[dim] | f64 values[Π extents]
//! ```
//!
//! The JSON form carries the same fields. Values are either a plain number
//! list (`"values"`) or the little-endian f64 bytes in standard base64
//! (`"values_base64"`). Both formats round-trip bit-exactly.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{GhkError, Result};
use crate::grid::GridFunction;

pub const MAGIC: &[u8; 4] = b"GHK1";

pub fn to_ghk1(f: &GridFunction) -> Vec<u8> {
    let d = f.dim();
    let mut out = Vec::with_capacity(4 + 4 + 12 * d + 8 + 8 * f.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for &e in f.extents() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    out.extend_from_slice(&f.spacing().to_le_bytes());
    for &o in f.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for &v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(GhkError::Format(format!("truncated while reading {what}")));
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }
}

pub fn from_ghk1(bytes: &[u8]) -> Result<GridFunction> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if &r.take::<4>("magic")? != MAGIC {
        return Err(GhkError::Format("missing GHK1 magic".into()));
    }
    let dim = u32::from_le_bytes(r.take("dim")?) as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(GhkError::Format(format!("dimension {dim} not in 1..=3")));
    }
    let mut extents = Vec::with_capacity(dim);
    for _ in 0..dim {
        extents.push(u32::from_le_bytes(r.take("extent")?) as usize);
    }
    let spacing = f64::from_le_bytes(r.take("spacing")?);
    let mut origin = Vec::with_capacity(dim);
    for _ in 0..dim {
        origin.push(i64::from_le_bytes(r.take("origin")?));
    }
    let cells: u128 = extents.iter().map(|&e| e as u128).product();
    crate::budget::check_cells("from_ghk1", cells)?;
    let remaining = (bytes.len() - r.pos) as u128;
    if remaining != 8 * cells {
        return Err(GhkError::Format(format!("expected {} value bytes, found {remaining}", 8 * cells)));
    }
    let values = bytes[r.pos..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    GridFunction::new(spacing, &origin, &extents, values)
}

#[derive(Debug, Serialize, Deserialize)]
struct GridJson {
    dim: usize,
    extents: Vec<usize>,
    spacing: f64,
    origin: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values_base64: Option<String>,
}

/// JSON encoding. `base64 = true` stores values as packed little-endian bytes.
pub fn to_json(f: &GridFunction, base64: bool) -> String {
    let (values, values_base64) = if base64 {
        let bytes: Vec<u8> = f.values().iter().flat_map(|v| v.to_le_bytes()).collect();
        (None, Some(B64.encode(bytes)))
    } else {
        (Some(f.values().to_vec()), None)
    };
    let doc = GridJson {
        dim: f.dim(),
        extents: f.extents().to_vec(),
        spacing: f.spacing(),
        origin: f.origin().to_vec(),
        values,
        values_base64,
    };
    serde_json::to_string(&doc).expect("grid json serialization")
}

pub fn from_json(text: &str) -> Result<GridFunction> {
    let doc: GridJson = serde_json::from_str(text)?;
    if doc.extents.len() != doc.dim || doc.origin.len() != doc.dim {
        return Err(GhkError::Format("extents/origin length differs from dim".into()));
    }
    let values = match (doc.values, doc.values_base64) {
        (Some(v), None) => v,
        (None, Some(b)) => {
            let bytes = B64.decode(b.as_bytes()).map_err(|e| GhkError::Format(format!("base64: {e}")))?;
            if bytes.len() % 8 != 0 {
                return Err(GhkError::Format("base64 payload not a multiple of 8 bytes".into()));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect()
        }
        _ => return Err(GhkError::Format("exactly one of values / values_base64 required".into())),
    };
    GridFunction::new(doc.spacing, &doc.origin, &doc.extents, values)
}

/// Parses either format, sniffing the magic bytes.
pub fn decode(bytes: &[u8]) -> Result<GridFunction> {
    if bytes.starts_with(MAGIC) {
        from_ghk1(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| GhkError::Format("neither GHK1 nor UTF-8 JSON".into()))?;
        from_json(text)
    }
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridFunction> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| GhkError::Io { path: path.to_path_buf(), source })?;
    decode(&bytes)
}

/// Writes JSON when the extension is `.json`, GHK1 otherwise.
pub fn write_grid(path: impl AsRef<Path>, f: &GridFunction) -> Result<()> {
    let path = path.as_ref();
    let bytes = if path.extension().is_some_and(|e| e == "json") {
        to_json(f, false).into_bytes()
    } else {
        to_ghk1(f)
    };
    fs::write(path, bytes).map_err(|source| GhkError::Io { path: path.to_path_buf(), source })
}
