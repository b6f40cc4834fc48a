//! Procedural speech-like corpus whose acoustics encode the style labels.
//!
//! Each sample is a harmonic source. Gender sets the fundamental band, age
//! the amplitude-modulation rate, tone the spectral tilt, and texture adds
//! pitch jitter plus broadband noise. Every property survives log-mel
//! analysis, so a classifier trained on the corpus can be held to an
//! objective accuracy bar.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::audio::{write_wav, Waveform};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::DEFAULT_ANNOTATORS;

use super::labels::{Label, LabelVector};
use super::manifest::{write_manifest, ManifestEntry, Split};

pub const SYNTH_SAMPLE_RATE: u32 = crate::SAMPLE_RATE;

const FEMALE_F0: (f64, f64) = (200.0, 260.0);
const MALE_F0: (f64, f64) = (100.0, 140.0);
const ADULT_AM_HZ: f64 = 3.0;
const TEEN_AM_HZ: f64 = 6.0;
const AM_DEPTH: f64 = 0.5;
const DARK_TILT_DB: f64 = -9.0;
const BRIGHT_TILT_DB: f64 = -3.0;
const JITTER: f64 = 0.02;
const ROUGH_SNR_DB: f64 = 10.0;
const TARGET_RMS: f64 = 0.1;
const MAX_HARMONIC_HZ: f64 = 7600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Age {
    Adult,
    Teenager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tone {
    Dark,
    Bright,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Texture {
    Rough,
    Smooth,
}

/// One choice on each of the four label axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StyleSpec {
    pub gender: Gender,
    pub age: Age,
    pub tone: Tone,
    pub texture: Texture,
}

impl StyleSpec {
    pub const COMBINATIONS: usize = 16;

    /// Combination `i` in `0..16`; bit 3 picks gender, bit 0 texture.
    pub fn from_index(i: usize) -> StyleSpec {
        assert!(i < Self::COMBINATIONS, "combination index {i} out of range");
        StyleSpec {
            gender: if i & 8 == 0 { Gender::Female } else { Gender::Male },
            age: if i & 4 == 0 { Age::Adult } else { Age::Teenager },
            tone: if i & 2 == 0 { Tone::Dark } else { Tone::Bright },
            texture: if i & 1 == 0 { Texture::Rough } else { Texture::Smooth },
        }
    }

    pub fn all() -> impl Iterator<Item = StyleSpec> {
        (0..Self::COMBINATIONS).map(Self::from_index)
    }

    pub fn index(&self) -> usize {
        (matches!(self.gender, Gender::Male) as usize) << 3
            | (matches!(self.age, Age::Teenager) as usize) << 2
            | (matches!(self.tone, Tone::Bright) as usize) << 1
            | matches!(self.texture, Texture::Smooth) as usize
    }

    pub fn labels(&self) -> [Label; 4] {
        [
            match self.gender {
                Gender::Female => Label::Female,
                Gender::Male => Label::Male,
            },
            match self.age {
                Age::Adult => Label::Adult,
                Age::Teenager => Label::Teenager,
            },
            match self.tone {
                Tone::Dark => Label::Dark,
                Tone::Bright => Label::Bright,
            },
            match self.texture {
                Texture::Rough => Label::Rough,
                Texture::Smooth => Label::Smooth,
            },
        ]
    }

    pub fn label_vector(&self, n_annotators: u32) -> LabelVector {
        LabelVector::unanimous(&self.labels(), n_annotators)
    }

    pub fn f0_band(&self) -> (f64, f64) {
        match self.gender {
            Gender::Female => FEMALE_F0,
            Gender::Male => MALE_F0,
        }
    }
}

/// Renders one sample. Deterministic in `(spec, seed)`.
pub fn synth_sample<S: Scalar>(
    spec: &StyleSpec,
    duration_s: f64,
    seed: u64,
) -> Result<(Waveform<S>, LabelVector)> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Parameter(format!("duration must be positive, got {duration_s}")));
    }
    let sr = SYNTH_SAMPLE_RATE as f64;
    let mut rng = crate::rng::substream(seed, "synth-sample", &[spec.index() as u64]);
    let (lo, hi) = spec.f0_band();
    let f0 = rng.random_range(lo..=hi);
    let am_hz = match spec.age {
        Age::Adult => ADULT_AM_HZ,
        Age::Teenager => TEEN_AM_HZ,
    };
    let tilt_db = match spec.tone {
        Tone::Dark => DARK_TILT_DB,
        Tone::Bright => BRIGHT_TILT_DB,
    };
    let rough = spec.texture == Texture::Rough;

    // harmonic h has amplitude h^(tilt/6.02), i.e. `tilt` dB per octave
    let n_harm = (MAX_HARMONIC_HZ / (f0 * (1.0 + 3.0 * JITTER))).floor().max(1.0) as usize;
    let coeffs: Vec<(f64, f64)> = (1..=n_harm)
        .map(|h| {
            let amp = 10f64.powf(tilt_db * (h as f64).log2() / 20.0);
            let theta = rng.random_range(0.0..2.0 * PI);
            (amp * theta.cos(), amp * theta.sin())
        })
        .collect();

    let n = (duration_s * sr).round() as usize;
    let mut x = vec![0.0f64; n];
    let mut cycles = 0.0f64;
    let mut factor = 1.0;
    for (i, xi) in x.iter_mut().enumerate() {
        // sum_h Im(c_h * z^h) with z = exp(2*pi*i*cycles)
        let (zr, zi) = ((2.0 * PI * cycles).cos(), (2.0 * PI * cycles).sin());
        let (mut pr, mut pi) = (zr, zi);
        let mut acc = 0.0;
        for &(cr, ci) in &coeffs {
            acc += cr * pi + ci * pr;
            (pr, pi) = (pr * zr - pi * zi, pr * zi + pi * zr);
        }
        let t = i as f64 / sr;
        *xi = acc * (1.0 + AM_DEPTH * (2.0 * PI * am_hz * t).sin());
        let before = cycles.floor();
        cycles += f0 * factor / sr;
        if rough && cycles.floor() != before {
            let j: f64 = rng.sample(StandardNormal);
            factor = 1.0 + (JITTER * j).clamp(-3.0 * JITTER, 3.0 * JITTER);
        }
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    let gain = if rms > 0.0 { TARGET_RMS / rms } else { 0.0 };
    let noise_sd = TARGET_RMS / 10f64.powf(ROUGH_SNR_DB / 20.0);
    let samples = x
        .into_iter()
        .map(|v| {
            let mut y = v * gain;
            if rough {
                let e: f64 = rng.sample(StandardNormal);
                y += noise_sd * e;
            }
            S::lit(y.clamp(-1.0, 1.0))
        })
        .collect();
    Ok((
        Waveform::new(samples, SYNTH_SAMPLE_RATE)?,
        spec.label_vector(DEFAULT_ANNOTATORS),
    ))
}

/// Per-label keep fractions that thin out the training split.
///
/// A combination's sample count is multiplied by the fraction of every
/// label it carries, then rounded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImbalanceProfile {
    pub keep: Vec<(Label, f64)>,
}

impl ImbalanceProfile {
    pub fn scale(label: Label, fraction: f64) -> Self {
        Self {
            keep: vec![(label, fraction)],
        }
    }

    pub fn count(&self, spec: &StyleSpec, n: usize) -> usize {
        let f: f64 = self
            .keep
            .iter()
            .filter(|(l, _)| spec.labels().contains(l))
            .map(|(_, f)| f)
            .product();
        (n as f64 * f).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub n_per_combination: usize,
    /// Held-out samples per combination (never thinned by the imbalance profile).
    pub eval_per_combination: usize,
    pub duration_s: f64,
    pub seed: u64,
    pub imbalance: ImbalanceProfile,
    pub utterances_per_speaker: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n_per_combination: 10,
            eval_per_combination: 0,
            duration_s: 5.0,
            seed: 0,
            imbalance: ImbalanceProfile::default(),
            utterances_per_speaker: 4,
        }
    }
}

struct Item {
    entry: ManifestEntry,
    spec: StyleSpec,
    seed: u64,
}

fn plan_items(opts: &SynthOptions) -> Vec<Item> {
    let mut items = Vec::new();
    for (split, per_combo) in [
        (Split::Train, opts.n_per_combination),
        (Split::Eval, opts.eval_per_combination),
    ] {
        for spec in StyleSpec::all() {
            let c = spec.index();
            let count = match split {
                Split::Train => opts.imbalance.count(&spec, per_combo),
                Split::Eval => per_combo,
            };
            for i in 0..count {
                let id = format!("{split}_c{c:02}_{i:04}");
                items.push(Item {
                    entry: ManifestEntry {
                        source: format!("wav/{id}.wav"),
                        speaker_id: format!(
                            "{split}_c{c:02}_s{:03}",
                            i / opts.utterances_per_speaker.max(1)
                        ),
                        id,
                        split,
                        label: spec.label_vector(DEFAULT_ANNOTATORS),
                        excluded: false,
                        augmented: false,
                    },
                    spec,
                    seed: derive_seed(opts.seed, "synth", &[split as u64, c as u64, i as u64]),
                });
            }
        }
    }
    items
}

/// Writes the corpus under `out_dir` (`wav/*.wav` plus `manifest.tsv`) and
/// returns the manifest path.
pub fn synth_corpus(opts: &SynthOptions, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    if opts.n_per_combination == 0 {
        return Err(Error::Parameter("n_per_combination must be at least 1".into()));
    }
    let out_dir = out_dir.as_ref();
    let wav_dir = out_dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let items = plan_items(opts);
    items.par_iter().try_for_each(|item| {
        let (w, _) = synth_sample::<f32>(&item.spec, opts.duration_s, item.seed)?;
        write_wav(out_dir.join(&item.entry.source), &w)
    })?;
    let entries: Vec<ManifestEntry> = items.into_iter().map(|i| i.entry).collect();
    let manifest = out_dir.join("manifest.tsv");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}
