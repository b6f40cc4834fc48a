use std::fs;
use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

pub const FEATURE_MAGIC: &[u8; 8] = b"SMLCFEAT";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 4 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// 80-channel log-mel computed by this crate.
    Mel80,
    /// Produced elsewhere, e.g. an intermediate layer of a speech backbone.
    External,
}

impl FeatureKind {
    fn code(self) -> u8 {
        match self {
            FeatureKind::Mel80 => 0,
            FeatureKind::External => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(FeatureKind::Mel80),
            1 => Ok(FeatureKind::External),
            other => Err(Error::Format(format!("unknown feature kind {other}"))),
        }
    }
}

/// A `T x D` matrix of acoustic frames plus the hop between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<S> {
    frames: Array2<S>,
    hop_us: u32,
    kind: FeatureKind,
}

impl<S: Scalar> FeatureSequence<S> {
    pub fn new(frames: Array2<S>, hop_us: u32, kind: FeatureKind) -> Result<Self> {
        let (t, d) = frames.dim();
        if t == 0 || d == 0 {
            return Err(Error::EmptyInput(format!("feature matrix is {t}x{d}")));
        }
        if kind == FeatureKind::Mel80 && d != 80 {
            return Err(Error::Validation(format!("mel80 features must have 80 channels, got {d}")));
        }
        if hop_us == 0 {
            return Err(Error::Validation("frame hop must be positive".into()));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite feature value".into()));
        }
        Ok(Self {
            frames: frames.as_standard_layout().into_owned(),
            hop_us,
            kind,
        })
    }

    pub fn frames(&self) -> &Array2<S> {
        &self.frames
    }

    pub fn into_frames(self) -> Array2<S> {
        self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn hop_us(&self) -> u32 {
        self.hop_us
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.hop_us as f64 / 1e6
    }

    pub fn duration_s(&self) -> f64 {
        self.num_frames() as f64 * self.frame_hop_s()
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    /// Same shape and metadata with different frame values.
    pub fn with_frames(&self, frames: Array2<S>) -> Result<Self> {
        Self::new(frames, self.hop_us, self.kind)
    }

    pub fn cast<T: Scalar>(&self) -> FeatureSequence<T> {
        FeatureSequence {
            frames: self.frames.mapv(|v| T::lit(v.as_f64())),
            hop_us: self.hop_us,
            kind: self.kind,
        }
    }
}

/// Where a too-long sequence is cut.
pub enum Crop<'a> {
    /// Window starting at frame 0 (evaluation).
    Head,
    /// Uniformly random start (training).
    Random(&'a mut Rng),
}

/// Crops or zero-pads to exactly `target_frames` frames.
pub fn crop_or_pad<S: Scalar>(
    f: &FeatureSequence<S>,
    target_frames: usize,
    crop: Crop<'_>,
) -> Result<FeatureSequence<S>> {
    if target_frames == 0 {
        return Err(Error::Parameter("target_frames must be at least 1".into()));
    }
    let t = f.num_frames();
    let frames = if t == target_frames {
        f.frames.clone()
    } else if t > target_frames {
        let start = match crop {
            Crop::Head => 0,
            Crop::Random(rng) => rng.random_range(0..=t - target_frames),
        };
        f.frames.slice(s![start..start + target_frames, ..]).to_owned()
    } else {
        let mut out = Array2::zeros((target_frames, f.dim()));
        out.slice_mut(s![..t, ..]).assign(&f.frames);
        out
    };
    Ok(FeatureSequence {
        frames,
        hop_us: f.hop_us,
        kind: f.kind,
    })
}

/// Standardizes a whole utterance with one scalar mean and deviation.
///
/// Relative structure across channels and time is preserved; only the
/// overall level and spread are removed.
pub fn normalize_utterance<S: Scalar>(f: &FeatureSequence<S>) -> FeatureSequence<S> {
    let n = f.frames.len() as f64;
    let mean = f.frames.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let var = f.frames.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var.sqrt() + 1e-5);
    FeatureSequence {
        frames: f.frames.mapv(|v| S::lit((v.as_f64() - mean) * inv)),
        hop_us: f.hop_us,
        kind: f.kind,
    }
}

/// Serializes to the binary feature format (values stored as `f32`).
pub fn write_feature_file<S: Scalar>(f: &FeatureSequence<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + f.frames.len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(f.num_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(f.dim() as u32).to_le_bytes());
    out.extend_from_slice(&f.hop_us.to_le_bytes());
    out.push(f.kind.code());
    for v in f.frames.iter() {
        out.extend_from_slice(&v.as_f32().to_le_bytes());
    }
    out
}

pub fn read_feature_file(bytes: &[u8]) -> Result<FeatureSequence<f32>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("feature file shorter than its header".into()));
    }
    if &bytes[..8] != FEATURE_MAGIC {
        return Err(Error::Format("bad feature file magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!("unsupported feature file version {version}")));
    }
    let (t, d, hop_us) = (word(12) as usize, word(16) as usize, word(20));
    let kind = FeatureKind::from_code(bytes[24])?;
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header declares {t}x{d} ({expected} bytes)",
            payload.len()
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let frames = Array2::from_shape_vec((t, d), values)
        .map_err(|e| Error::Format(format!("bad shape: {e}")))?;
    FeatureSequence::new(frames, hop_us, kind).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_feature_file<S: Scalar>(path: impl AsRef<Path>, f: &FeatureSequence<S>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_feature_file(f)).map_err(|e| Error::io(path, e))
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureSequence<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_feature_file(&bytes)
}
