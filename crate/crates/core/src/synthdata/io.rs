//! Raster files and dataset manifests.
//!
//! A raster file is one JSON header line, e.g.
//! `{"height":64,"width":64,"bands":8,"dtype":"f32","order":"HWC","has_mask":1}`,
//! followed by `height·width·bands` little-endian f32 values and, when
//! `has_mask` is 1, `height·width` mask bytes each 0 or 1.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RasterHeader {
    height: usize,
    width: usize,
    bands: usize,
    dtype: String,
    order: String,
    has_mask: u8,
}

pub fn encode_raster(raster: &Raster) -> Vec<u8> {
    let header = RasterHeader {
        height: raster.height(),
        width: raster.width(),
        bands: raster.bands(),
        dtype: "f32".into(),
        order: "HWC".into(),
        has_mask: raster.mask().is_some() as u8,
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(raster.data().len() * 4 + raster.pixels());
    for v in raster.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(m) = raster.mask() {
        out.extend_from_slice(m);
    }
    out
}

pub fn decode_raster(bytes: &[u8], path: &Path) -> Result<Raster> {
    let format = |reason: String| Error::Format { kind: "raster", path: path.to_path_buf(), reason };
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| format("missing header line".into()))?;
    let header: RasterHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| format(format!("bad header: {e}")))?;
    if header.dtype != "f32" || header.order != "HWC" {
        return Err(format(format!("unsupported dtype/order {}/{}", header.dtype, header.order)));
    }
    if header.has_mask > 1 {
        return Err(format(format!("has_mask must be 0 or 1, got {}", header.has_mask)));
    }
    let pixels = header.height.checked_mul(header.width).ok_or_else(|| format("dimension overflow".into()))?;
    let values = pixels.checked_mul(header.bands).ok_or_else(|| format("dimension overflow".into()))?;
    let expected = values
        .checked_mul(4)
        .and_then(|v| v.checked_add(if header.has_mask == 1 { pixels } else { 0 }))
        .ok_or_else(|| format("dimension overflow".into()))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != expected {
        return Err(Error::PayloadLength {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: payload.len() as u64,
        });
    }
    let (floats, mask_bytes) = payload.split_at(values * 4);
    let data: Vec<f32> = floats.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let mask = if header.has_mask == 1 {
        if mask_bytes.iter().any(|&b| b > 1) {
            return Err(format("mask bytes must be 0 or 1".into()));
        }
        Some(mask_bytes.to_vec())
    } else {
        None
    };
    Raster::new(header.height, header.width, header.bands, data, mask).map_err(|e| format(e.to_string()))
}

pub fn save_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_raster(raster)).map_err(|e| Error::io(path, e))
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raster(&bytes, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub role: Role,
    pub path: PathBuf,
}

/// One `role<TAB>path` line per raster; `#` starts a comment line.
pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("# role\tpath\n");
    for e in entries {
        text.push_str(e.role.as_str());
        text.push('\t');
        text.push_str(&e.path.to_string_lossy());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Relative raster paths are resolved against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (role, file) =
            line.split_once(['\t', ' ']).map(|(r, f)| (r.trim(), f.trim())).ok_or_else(|| Error::Format {
                kind: "manifest",
                path: path.to_path_buf(),
                reason: format!("line {}: expected `role<TAB>path`", lineno + 1),
            })?;
        let role = match role {
            "train" => Role::Train,
            "test" => Role::Test,
            other => {
                return Err(Error::Format {
                    kind: "manifest",
                    path: path.to_path_buf(),
                    reason: format!("line {}: unknown role {other:?}", lineno + 1),
                })
            }
        };
        let p = PathBuf::from(file);
        entries.push(ManifestEntry { role, path: if p.is_absolute() { p } else { base.join(p) } });
    }
    Ok(entries)
}
