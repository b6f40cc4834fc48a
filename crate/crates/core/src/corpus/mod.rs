//! Labels, manifests, annotation rules and the synthetic corpus.

mod labels;
mod manifest;
mod synth;

pub use labels::{normalize_labels, Label, LabelVector, RawEntry};
pub use manifest::{
    agreement_ratio, filter_by_agreement, format_manifest, parse_manifest, parse_manifest_str,
    resolve_source, write_manifest, ManifestEntry, Split, MANIFEST_HEADER,
};
pub use synth::{
    synth_corpus, synth_sample, Age, Gender, ImbalanceProfile, SynthOptions, StyleSpec, Texture,
    Tone, SYNTH_SAMPLE_RATE,
};
