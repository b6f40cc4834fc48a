use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mono audio with amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<S> {
    samples: Vec<S>,
    sample_rate: u32,
}

impl<S: Scalar> Waveform<S> {
    pub fn new(samples: Vec<S>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn cast<T: Scalar>(&self) -> Waveform<T> {
        Waveform {
            samples: self.samples.iter().map(|s| T::lit(s.as_f64())).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes an in-memory RIFF/WAVE file (PCM 16-bit mono).
pub fn read_wav<S: Scalar>(bytes: &[u8]) -> Result<Waveform<S>> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "chunk {:?} overruns file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk too short".into()));
                }
                fmt = Some((
                    u16_at(bytes, body),
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                ));
            }
            b"data" => {
                let (format_tag, channels, sample_rate, bits) =
                    fmt.ok_or_else(|| Error::Format("data chunk before fmt chunk".into()))?;
                if format_tag != 1 {
                    return Err(Error::UnsupportedFormat(format!(
                        "format tag {format_tag}, only PCM (1) is supported"
                    )));
                }
                if channels != 1 {
                    return Err(Error::UnsupportedFormat(format!(
                        "{channels} channels, only mono is supported"
                    )));
                }
                if bits != 16 {
                    return Err(Error::UnsupportedFormat(format!(
                        "{bits}-bit samples, only 16-bit is supported"
                    )));
                }
                if size % 2 != 0 {
                    return Err(Error::Format("odd-sized 16-bit data chunk".into()));
                }
                let scale = S::lit(1.0 / 32768.0);
                let samples = bytes[body..end]
                    .chunks_exact(2)
                    .map(|c| S::lit(i16::from_le_bytes([c[0], c[1]]) as f64) * scale)
                    .collect();
                return Waveform::new(samples, sample_rate);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }
    Err(Error::Format("no data chunk".into()))
}

pub fn load_wav<S: Scalar>(path: impl AsRef<Path>) -> Result<Waveform<S>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_wav(&bytes)
}

/// Writes 16-bit PCM mono. Samples are scaled by 32768, rounded and clamped.
pub fn write_wav<S: Scalar>(path: impl AsRef<Path>, w: &Waveform<S>) -> Result<()> {
    let path = path.as_ref();
    let data_len = (w.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &w.samples {
        let q = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(channels: u16, bits: u16, format_tag: u16, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&format_tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&16000u32.to_le_bytes());
        out.extend_from_slice(&(16000u32 * channels as u32 * bits as u32 / 8).to_le_bytes());
        out.extend_from_slice(&(channels * bits / 8).to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn one_second_of_silence() {
        let bytes = header(1, 16, 1, &vec![0u8; 32000]);
        let w: Waveform<f32> = read_wav(&bytes).unwrap();
        assert_eq!(w.len(), 16000);
        assert_eq!(w.sample_rate(), 16000);
        assert!(w.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn full_scale_positive_word() {
        let mut data = 32767i16.to_le_bytes().to_vec();
        data.extend_from_slice(&(-32768i16).to_le_bytes());
        let w: Waveform<f64> = read_wav(&header(1, 16, 1, &data)).unwrap();
        assert_eq!(w.samples()[0], 32767.0 / 32768.0);
        assert_eq!(w.samples()[1], -1.0);
    }

    #[test]
    fn stereo_is_unsupported() {
        let err = read_wav::<f32>(&header(2, 16, 1, &[0u8; 8])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)), "{err}");
    }

    #[test]
    fn non_pcm16_is_unsupported() {
        let err = read_wav::<f32>(&header(1, 24, 1, &[0u8; 6])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
        let err = read_wav::<f32>(&header(1, 16, 3, &[0u8; 4])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(read_wav::<f32>(b"RIFX"), Err(Error::Format(_))));
        let mut bytes = header(1, 16, 1, &[0u8; 8]);
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(read_wav::<f32>(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let mut bytes = header(1, 16, 1, &[1, 0]);
        // splice a LIST chunk (odd length, padded) between fmt and data
        let list = [b"LIST".as_slice(), &3u32.to_le_bytes(), b"abc", &[0u8]].concat();
        bytes.splice(36..36, list);
        let w: Waveform<f32> = read_wav(&bytes).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let w = Waveform::new(vec![0.0f32, 0.25, -0.5, 32767.0 / 32768.0], 16000).unwrap();
        write_wav(&p, &w).unwrap();
        let r: Waveform<f32> = load_wav(&p).unwrap();
        assert_eq!(r, w);
    }
}
