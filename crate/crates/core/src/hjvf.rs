//! `HJVF` binary field files and their JSON metadata sidecars.
//!
//! Layout (little-endian): magic `HJVF`, `u32` version (1), `u32` ndim, then
//! per axis `u64` count, `f64` min, `f64` max, then the row-major payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, ScalarField};

pub const MAGIC: &[u8; 4] = b"HJVF";
pub const VERSION: u32 = 1;

const CHUNK: usize = 1 << 16;

/// Sidecar metadata written next to every field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub dynamics: String,
    pub parameter_hash: String,
    pub horizon: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change per second over the last iteration.
    #[serde(default)]
    pub final_rate: Option<f64>,
    #[serde(default)]
    pub cfl: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Hashes of upstream artifacts this field was computed from.
    #[serde(default)]
    pub inputs: Vec<String>,
    /// Wall-clock cost; the only field allowed to differ between reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

pub fn meta_path(field_path: &Path) -> PathBuf {
    field_path.with_extension("meta.json")
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let spec = field.spec();
    w.write_all(&(spec.ndim() as u32).to_le_bytes())?;
    for a in spec.axes() {
        w.write_all(&(a.count as u64).to_le_bytes())?;
        w.write_all(&a.min.to_le_bytes())?;
        w.write_all(&a.max.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(CHUNK * 8);
    for chunk in field.values().chunks(CHUNK) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_array<const N: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| bad(path, format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_array::<4>(&mut r, path)? != MAGIC {
        return Err(bad(path, "missing HJVF magic"));
    }
    let version = u32::from_le_bytes(read_array(&mut r, path)?);
    if version != VERSION {
        return Err(bad(path, format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(read_array(&mut r, path)?) as usize;
    let mut axes = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let count = u64::from_le_bytes(read_array(&mut r, path)?) as usize;
        let min = f64::from_le_bytes(read_array(&mut r, path)?);
        let max = f64::from_le_bytes(read_array(&mut r, path)?);
        axes.push(Axis::new(count, min, max));
    }
    let spec = GridSpec::new(axes).map_err(|e| bad(path, e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    let mut buf = vec![0u8; CHUNK * 8];
    let mut remaining = spec.len();
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        r.read_exact(&mut buf[..n * 8])
            .map_err(|e| bad(path, format!("truncated payload: {e}")))?;
        values.extend(
            buf[..n * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))),
        );
        remaining -= n;
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(bad(path, "trailing bytes after payload"));
    }
    ScalarField::new(spec, values)
}

pub fn write_meta(field_path: &Path, meta: &FieldMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(meta)?;
    std::fs::write(meta_path(field_path), text + "\n")?;
    Ok(())
}

pub fn read_meta(field_path: &Path) -> Result<FieldMeta> {
    let text = std::fs::read_to_string(meta_path(field_path))?;
    Ok(serde_json::from_str(&text)?)
}
