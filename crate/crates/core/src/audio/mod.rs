//! Audio front end: WAV I/O, log-mel features and feature files.

mod features;
mod mel;
mod wav;

pub use features::{
    crop_or_pad, load_feature_file, normalize_utterance, read_feature_file, save_feature_file,
    write_feature_file, Crop, FeatureKind, FeatureSequence, FEATURE_MAGIC, FEATURE_VERSION,
};
pub use mel::{log_mel, mel_power, FrameConfig, MelConfig, MelFilterbank, LOG_FLOOR};
pub use wav::{load_wav, read_wav, write_wav, Waveform};

/// Frames covering `seconds` of audio at the given hop.
pub fn frames_for_duration(seconds: f64, hop_s: f64) -> usize {
    (seconds / hop_s).round().max(1.0) as usize
}
