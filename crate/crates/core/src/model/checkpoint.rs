//! Binary checkpoint format.
//!
//! Layout (little-endian): magic `SMLCCKPT`, version `u32`, field count
//! `u32`, then per config field a `u16` name length, the name, a `u8` type
//! tag (0 = `u64`, 1 = `f64`) and 8 value bytes. A `u32` tensor count
//! follows, then per tensor a `u16` name length, the name, a `u32` rank,
//! the dims as `u32`, and the values as `f32`, in canonical tensor order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::config::{InputNorm, ModelConfig};
use super::params::ModelParameters;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SMLCCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const TAG_U64: u8 = 0;
const TAG_F64: u8 = 1;

fn put_name(out: &mut Vec<u8>, name: &str) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
}

pub fn write_checkpoint<S: Scalar>(params: &ModelParameters<S>) -> Vec<u8> {
    let cfg = &params.config;
    let mut out = Vec::with_capacity(64 + params.num_parameters() * 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let ints = cfg.integer_fields();
    out.extend_from_slice(&(ints.len() as u32 + 1).to_le_bytes());
    for (name, v) in ints {
        put_name(&mut out, name);
        out.push(TAG_U64);
        out.extend_from_slice(&v.to_le_bytes());
    }
    put_name(&mut out, "dropout");
    out.push(TAG_F64);
    out.extend_from_slice(&cfg.dropout.to_le_bytes());

    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        put_name(&mut out, &name);
        out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.iter() {
            out.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
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

    fn name(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("non-UTF-8 name".into()))
    }
}

fn read_config(r: &mut Reader<'_>) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    let mut seen = Vec::new();
    for _ in 0..r.u32()? {
        let name = r.name()?;
        let tag = r.u8()?;
        let raw = r.u64()?;
        let int = || -> Result<usize> {
            if tag != TAG_U64 {
                return Err(Error::Format(format!("config field `{name}` should be an integer")));
            }
            usize::try_from(raw).map_err(|_| Error::Format(format!("config field `{name}` too large")))
        };
        match name.as_str() {
            "d_model" => cfg.d_model = int()?,
            "n_layers" => cfg.n_layers = int()?,
            "n_heads" => cfg.n_heads = int()?,
            "n_labels" => cfg.n_labels = int()?,
            "input_dim" => cfg.input_dim = int()?,
            "ffn_dim" => cfg.ffn_dim = int()?,
            "target_frames" => cfg.target_frames = int()?,
            "input_norm" => cfg.input_norm = InputNorm::from_code(int()? as u64)?,
            "dropout" if tag == TAG_F64 => cfg.dropout = f64::from_bits(raw),
            other => return Err(Error::Format(format!("unknown config field `{other}`"))),
        }
        seen.push(name);
    }
    for (field, _) in cfg.integer_fields() {
        if !seen.iter().any(|s| s == field) {
            return Err(Error::Format(format!("config field `{field}` missing")));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_checkpoint<S: Scalar>(bytes: &[u8]) -> Result<ModelParameters<S>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).map_err(|_| Error::Format("not a checkpoint".into()))? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let cfg = read_config(&mut r)?;
    let mut params = ModelParameters::<S>::zeros(&cfg);
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {count} tensors, configuration implies {}",
            expected.len()
        )));
    }
    for ((name, shape), mut dst) in expected.into_iter().zip(params.tensors_mut()) {
        let got = r.name()?;
        if got != name {
            return Err(Error::Format(format!("expected tensor `{name}`, found `{got}`")));
        }
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != shape {
            return Err(Error::Format(format!("tensor `{name}` has shape {dims:?}, expected {shape:?}")));
        }
        let raw = r.take(dst.len() * 4)?;
        for (d, c) in dst.iter_mut().zip(raw.chunks_exact(4)) {
            *d = S::of_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after last tensor".into()));
    }
    Ok(params)
}

pub fn save_checkpoint<S: Scalar>(params: &ModelParameters<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_checkpoint(params)).map_err(|e| Error::io(path, e))
}

/// Loads parameters and the configuration embedded with them.
pub fn load_checkpoint<S: Scalar>(path: impl AsRef<Path>) -> Result<(ModelParameters<S>, ModelConfig)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let params = read_checkpoint(&bytes)?;
    let cfg = params.config.clone();
    Ok((params, cfg))
}
