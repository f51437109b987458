//! Model checkpoints.
//!
//! Layout: a `BANDSEL-CHECKPOINT 1` line, a one-line JSON manifest naming
//! every tensor with its shape, element offset and length, then a single
//! blob of little-endian f32 values. Normalisation statistics travel as
//! the tensors `norm.mean` and `norm.std`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::UNetConfig;
use super::unet::UNetModel;
use crate::error::{Error, Result};
use crate::mask::BandMask;
use crate::synthdata::NormStats;

const MAGIC: &str = "BANDSEL-CHECKPOINT 1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the blob.
    offset: usize,
    /// Byte length.
    bytes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    config: UNetConfig,
    band_mask: Option<String>,
    tensors: Vec<TensorEntry>,
    blob_bytes: usize,
}

pub fn encode_checkpoint(model: &UNetModel) -> Vec<u8> {
    let mut tensors = Vec::new();
    let mut blob = Vec::new();
    let mut push = |name: &str, shape: Vec<usize>, values: &[f32], tensors: &mut Vec<TensorEntry>| {
        tensors.push(TensorEntry { name: name.to_string(), shape, offset: blob.len(), bytes: values.len() * 4 });
        for v in values {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    };
    for (spec, values) in model.param_specs().iter().zip(model.params()) {
        push(&spec.name, spec.shape.clone(), values, &mut tensors);
    }
    if let Some(stats) = &model.input_stats {
        push("norm.mean", vec![stats.mean.len()], &stats.mean, &mut tensors);
        push("norm.std", vec![stats.std.len()], &stats.std, &mut tensors);
    }
    let manifest = Manifest {
        config: model.config().clone(),
        band_mask: model.band_mask.as_ref().map(|m| m.to_string()),
        tensors,
        blob_bytes: blob.len(),
    };
    let mut out = format!("{MAGIC}\n").into_bytes();
    out.extend(serde_json::to_vec(&manifest).expect("manifest serializes"));
    out.push(b'\n');
    out.extend(blob);
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<UNetModel> {
    let format = |reason: String| Error::Format { kind: "checkpoint", path: path.to_path_buf(), reason };
    let magic_end = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| format("missing magic line".into()))?;
    if &bytes[..magic_end] != MAGIC.as_bytes() {
        return Err(format("bad magic line".into()));
    }
    let rest = &bytes[magic_end + 1..];
    let manifest_end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| format("missing manifest line".into()))?;
    let manifest: Manifest =
        serde_json::from_slice(&rest[..manifest_end]).map_err(|e| format(format!("bad manifest: {e}")))?;
    let blob = &rest[manifest_end + 1..];
    if blob.len() != manifest.blob_bytes {
        return Err(Error::PayloadLength {
            path: path.to_path_buf(),
            expected: manifest.blob_bytes as u64,
            actual: blob.len() as u64,
        });
    }
    let read = |e: &TensorEntry| -> Result<Vec<f32>> {
        let end = e
            .offset
            .checked_add(e.bytes)
            .filter(|&end| end <= blob.len() && e.bytes % 4 == 0)
            .ok_or_else(|| format(format!("tensor {} lies outside the blob", e.name)))?;
        if e.shape.iter().product::<usize>() * 4 != e.bytes {
            return Err(format(format!("tensor {} shape {:?} disagrees with its length", e.name, e.shape)));
        }
        Ok(blob[e.offset..end].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    };

    let specs = UNetModel::<f32>::specs_for(&manifest.config).map_err(|e| format(e.to_string()))?;
    let mut params = Vec::with_capacity(specs.len());
    for spec in &specs {
        let entry = manifest
            .tensors
            .iter()
            .find(|t| t.name == spec.name)
            .ok_or_else(|| format(format!("missing tensor {}", spec.name)))?;
        if entry.shape != spec.shape {
            return Err(format(format!(
                "tensor {} has shape {:?}, config implies {:?}",
                spec.name, entry.shape, spec.shape
            )));
        }
        params.push(read(entry)?);
    }
    let mut model = UNetModel::from_params(manifest.config, params).map_err(|e| format(e.to_string()))?;
    let find = |name: &str| manifest.tensors.iter().find(|t| t.name == name);
    model.input_stats = match (find("norm.mean"), find("norm.std")) {
        (Some(m), Some(s)) => Some(NormStats { mean: read(m)?, std: read(s)? }),
        (None, None) => None,
        _ => return Err(format("norm.mean and norm.std must appear together".into())),
    };
    model.band_mask =
        manifest.band_mask.map(|s| s.parse::<BandMask>()).transpose().map_err(|e| format(e.to_string()))?;
    Ok(model)
}

pub fn save_checkpoint(model: &UNetModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<UNetModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
