use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::features::{FeatureKind, FeatureSequence};
use super::wav::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to mel energies before taking the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: crate::SAMPLE_RATE,
            n_fft: 512,
            n_mels: 80,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
        }
    }
}

/// Analysis window and hop, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_size_s: f64,
    pub frame_hop_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_size_s: 0.025,
            frame_hop_s: 0.010,
        }
    }
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn logstep() -> f64 {
    6.4f64.ln() / 27.0
}

pub(crate) fn hz_to_mel(hz: f64) -> f64 {
    if hz < MIN_LOG_HZ {
        hz / F_SP
    } else {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / logstep()
    }
}

pub(crate) fn mel_to_hz(mel: f64) -> f64 {
    if mel < MIN_LOG_MEL {
        mel * F_SP
    } else {
        MIN_LOG_HZ * (logstep() * (mel - MIN_LOG_MEL)).exp()
    }
}

/// Triangular mel filters with Slaney area normalization.
#[derive(Debug, Clone)]
pub struct MelFilterbank<S> {
    weights: Array2<S>,
    sample_rate: u32,
    n_fft: usize,
    centers_hz: Vec<f64>,
}

impl<S: Scalar> MelFilterbank<S> {
    pub fn new(cfg: &MelConfig) -> Result<Self> {
        if cfg.sample_rate == 0 || cfg.n_fft < 2 || cfg.n_mels == 0 {
            return Err(Error::config("mel", "sample_rate, n_fft and n_mels must be positive"));
        }
        let nyquist = cfg.sample_rate as f64 / 2.0;
        if !(0.0 <= cfg.fmin_hz && cfg.fmin_hz < cfg.fmax_hz && cfg.fmax_hz <= nyquist) {
            return Err(Error::config("mel", "need 0 <= fmin < fmax <= nyquist"));
        }
        let n_bins = cfg.n_fft / 2 + 1;
        let (lo, hi) = (hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz));
        let edges: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
            .collect();
        let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
        let mut weights = Array2::zeros((cfg.n_mels, n_bins));
        for m in 0..cfg.n_mels {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (right - left);
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let rise = (f - left) / (center - left);
                let fall = (right - f) / (right - center);
                let w = rise.min(fall).max(0.0);
                weights[[m, k]] = S::lit(w * norm);
            }
            if weights.row(m).iter().all(|w| *w <= S::zero()) {
                return Err(Error::config(
                    "mel",
                    format!("filter {m} covers no FFT bin; use fewer mels or a larger n_fft"),
                ));
            }
        }
        Ok(Self {
            weights,
            sample_rate: cfg.sample_rate,
            n_fft: cfg.n_fft,
            centers_hz: edges[1..=cfg.n_mels].to_vec(),
        })
    }

    pub fn weights(&self) -> &Array2<S> {
        &self.weights
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn center_frequencies(&self) -> &[f64] {
        &self.centers_hz
    }
}

/// Pre-log mel energies, one row per frame.
///
/// Frames are not centered: frame `t` covers samples `[t*hop, t*hop+win)`,
/// weighted by a periodic Hann window and zero-padded to `n_fft`.
pub fn mel_power<S: Scalar>(
    w: &Waveform<S>,
    fb: &MelFilterbank<S>,
    frames: &FrameConfig,
) -> Result<Array2<S>> {
    if w.sample_rate() != fb.sample_rate {
        return Err(Error::UnsupportedFormat(format!(
            "waveform sample rate {} Hz, filterbank expects {} Hz",
            w.sample_rate(),
            fb.sample_rate
        )));
    }
    let sr = fb.sample_rate as f64;
    let win = (frames.frame_size_s * sr).round() as usize;
    let hop = (frames.frame_hop_s * sr).round() as usize;
    if win == 0 || hop == 0 || win > fb.n_fft {
        return Err(Error::config(
            "frames",
            format!("window {win} and hop {hop} samples must be positive and window <= n_fft"),
        ));
    }
    if w.len() < win {
        return Err(Error::EmptyInput(format!(
            "{} samples is shorter than one {win}-sample frame",
            w.len()
        )));
    }
    let n_frames = (w.len() - win) / hop + 1;
    let n_bins = fb.n_fft / 2 + 1;
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / win as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fb.n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); fb.n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut power = vec![0.0f64; n_bins];
    let samples = w.samples();
    let mut out = Array2::zeros((n_frames, fb.n_mels()));
    for t in 0..n_frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < win {
                Complex::new(samples[start + i].as_f64() * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, c) in power.iter_mut().zip(&buf[..n_bins]) {
            *p = c.norm_sqr();
        }
        for (m, filt) in fb.weights.outer_iter().enumerate() {
            let e: f64 = filt
                .iter()
                .zip(&power)
                .map(|(w, p)| w.as_f64() * p)
                .sum();
            out[[t, m]] = S::lit(e);
        }
    }
    Ok(out)
}

/// Log-mel features: `ln(max(1e-10, mel energy))` per frame and channel.
pub fn log_mel<S: Scalar>(
    w: &Waveform<S>,
    fb: &MelFilterbank<S>,
    frames: &FrameConfig,
) -> Result<FeatureSequence<S>> {
    let power = mel_power(w, fb, frames)?;
    let floor = S::lit(LOG_FLOOR);
    let logged = power.mapv(|e| e.max(floor).ln());
    let hop_us = (frames.frame_hop_s * 1e6).round() as u32;
    FeatureSequence::new(logged, hop_us, FeatureKind::Mel80)
}
