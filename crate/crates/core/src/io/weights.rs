//! Single-file weight container.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "WKWD"
//! 4       4           format_version (u32 LE, currently 1)
//! 8       4           header_len (u32 LE)
//! 12      header_len  header: compact JSON {schema_version, config, tensors}
//! ...     rest        payload: f32 LE tensors, row-major, in descriptor order
//! ```
//!
//! Each descriptor is `{name, shape, offset}` with `offset` in bytes from
//! the start of the payload. Descriptors must be contiguous and cover the
//! payload exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arch::{ModelConfig, CONFIG_SCHEMA_VERSION};
use crate::error::{Error, Result, WeightFileError};
use crate::model::{Model, NamedTensor, WeightSet};

pub const MAGIC: [u8; 4] = *b"WKWD";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorDescriptor {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

impl TensorDescriptor {
    pub fn byte_len(&self) -> u64 {
        4 * self.shape.iter().product::<usize>() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
    config: ModelConfig,
    tensors: Vec<TensorDescriptor>,
}

/// Encodes a config and tensor list. The config is not validated, so
/// degenerate containers (no tensors at all) can be written.
pub fn encode_container(config: &ModelConfig, tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    let mut offset = 0u64;
    let mut descriptors = Vec::with_capacity(tensors.len());
    for t in tensors {
        if t.data.len() != t.shape.iter().product::<usize>() {
            return Err(Error::shape(format!("tensor `{}` data does not match its shape", t.name)));
        }
        descriptors.push(TensorDescriptor { name: t.name.clone(), shape: t.shape.clone(), offset });
        offset += 4 * t.data.len() as u64;
    }
    let header = serde_json::to_vec(&Header {
        schema_version: CONFIG_SCHEMA_VERSION,
        config: config.clone(),
        tensors: descriptors,
    })?;
    let header_len = u32::try_from(header.len()).map_err(|_| Error::shape("header exceeds 4 GiB"))?;
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + offset as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    for t in tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32, WeightFileError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| WeightFileError::Truncated(what.into()))
}

/// Decodes a container without binding it to a model.
pub fn decode_container(bytes: &[u8]) -> Result<(ModelConfig, Vec<NamedTensor>), WeightFileError> {
    let magic: [u8; 4] = bytes
        .get(..4)
        .ok_or_else(|| WeightFileError::Truncated("magic".into()))?
        .try_into()
        .expect("4 bytes");
    if magic != MAGIC {
        return Err(WeightFileError::BadMagic(magic));
    }
    let version = read_u32(bytes, 4, "format version")?;
    if version != FORMAT_VERSION {
        return Err(WeightFileError::BadVersion(version));
    }
    let header_len = read_u32(bytes, 8, "header length")? as usize;
    let header_bytes = bytes
        .get(PREAMBLE..PREAMBLE.saturating_add(header_len))
        .ok_or_else(|| WeightFileError::Truncated("header".into()))?;
    // the writer emits compact JSON, so the header must end exactly at its closing brace
    if header_bytes.last() != Some(&b'}') {
        return Err(WeightFileError::Header("header does not end with `}`".into()));
    }
    let header: Header =
        serde_json::from_slice(header_bytes).map_err(|e| WeightFileError::Header(e.to_string()))?;
    if header.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(WeightFileError::Header(format!("unsupported schema version {}", header.schema_version)));
    }
    let payload = &bytes[PREAMBLE + header_len..];
    let mut expected = 0u64;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for d in header.tensors {
        if d.offset != expected {
            return Err(WeightFileError::Offset { name: d.name, offset: d.offset, expected });
        }
        let end = expected + d.byte_len();
        let raw = usize::try_from(end)
            .ok()
            .and_then(|end| payload.get(expected as usize..end))
            .ok_or_else(|| WeightFileError::Truncated(format!("tensor `{}`", d.name)))?;
        let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
        tensors.push(NamedTensor { name: d.name, shape: d.shape, data });
        expected = end;
    }
    if payload.len() as u64 != expected {
        return Err(WeightFileError::PayloadSize { declared: expected, actual: payload.len() as u64 });
    }
    Ok((header.config, tensors))
}

pub fn encode_weights(config: &ModelConfig, weights: &WeightSet) -> Result<Vec<u8>> {
    encode_container(config, &weights.tensors(config)?)
}

pub fn decode_weights(bytes: &[u8]) -> Result<(ModelConfig, WeightSet)> {
    let (config, tensors) = decode_container(bytes)?;
    config.validate()?;
    let weights = WeightSet::from_tensors(&config, tensors)?;
    Ok((config, weights))
}

pub fn save_weights(config: &ModelConfig, weights: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_weights(config, weights)?;
    std::fs::write(path, bytes).map_err(|e| Error::from(e).at(path))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<(ModelConfig, WeightSet)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    decode_weights(&bytes).map_err(|e| e.at(path))
}

/// Loads a weight file straight into a [`Model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let (config, weights) = load_weights(path)?;
    Model::new(config, weights).map_err(|e| e.at(path))
}
