use ndarray::{concatenate, s, Array2, Axis};

use crate::error::{Error, Result};
use crate::Features;

/// Frames of one target speaker, searched during conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePool {
    pub frames: Array2<f32>,
    pub speaker_id: String,
    /// Audio duration the frames cover.
    pub seconds: f64,
    pub hop_us: u32,
}

impl FramePool {
    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }
}

/// Concatenates the speaker's frames in order until `cap_s` seconds are
/// covered.
pub fn build_pool(speaker_id: &str, seqs: &[Features], cap_s: f64) -> Result<FramePool> {
    let Some(first) = seqs.first() else {
        return Err(Error::EmptyInput(format!("no features for speaker {speaker_id}")));
    };
    if !(cap_s > 0.0) {
        return Err(Error::Parameter(format!("pool cap must be positive, got {cap_s}")));
    }
    let (dim, hop_us) = (first.dim(), first.hop_us());
    if let Some(bad) = seqs.iter().find(|f| f.dim() != dim || f.hop_us() != hop_us) {
        return Err(Error::Validation(format!(
            "speaker {speaker_id} mixes feature shapes: {}-dim/{} us vs {}-dim/{} us",
            dim,
            hop_us,
            bad.dim(),
            bad.hop_us()
        )));
    }
    let cap_frames = (cap_s * 1e6 / hop_us as f64 + 1e-9).floor() as usize;
    let mut parts = Vec::new();
    let mut taken = 0;
    for f in seqs {
        if taken >= cap_frames {
            break;
        }
        let n = f.num_frames().min(cap_frames - taken);
        parts.push(f.frames().slice(s![..n, ..]));
        taken += n;
    }
    if taken == 0 {
        return Err(Error::EmptyInput(format!("pool cap {cap_s} s is shorter than one frame")));
    }
    let frames = concatenate(Axis(0), &parts).expect("shapes checked above");
    Ok(FramePool {
        seconds: taken as f64 * hop_us as f64 * 1e-6,
        frames,
        speaker_id: speaker_id.to_string(),
        hop_us,
    })
}
