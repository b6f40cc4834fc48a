use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{DEFAULT_ANNOTATORS, NUM_LABELS};

use super::labels::{Label, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Eval,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Eval => "eval",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            other => Err(Error::Validation(format!("unknown split `{other}`"))),
        }
    }
}

/// One dataset record.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    /// Audio (`.wav`) or feature file path, relative to the manifest's directory
    /// unless absolute.
    pub source: String,
    pub speaker_id: String,
    pub split: Split,
    pub label: LabelVector,
    /// Kept in the manifest but skipped by training and evaluation.
    pub excluded: bool,
    /// Produced by feature-space conversion rather than recorded.
    pub augmented: bool,
}

/// Header naming the columns; the label columns give the canonical order.
pub const MANIFEST_HEADER: &str = "#id\tsource\tsplit\tspeaker_id\
\tFemale\tMale\tAdult\tTeenager\tDark\tBright\tRough\tSmooth\
\tvotes:Female\tvotes:Male\tvotes:Adult\tvotes:Teenager\tvotes:Dark\tvotes:Bright\tvotes:Rough\tvotes:Smooth\
\texcluded\taugmented";

const BASE_FIELDS: usize = 4 + 2 * NUM_LABELS + 1;

fn flag(s: &str) -> std::result::Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, got `{other}`")),
    }
}

fn parse_line(line: &str, n_annotators: u32) -> std::result::Result<ManifestEntry, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != BASE_FIELDS && fields.len() != BASE_FIELDS + 1 {
        return Err(format!(
            "expected {BASE_FIELDS} or {} tab-separated fields, found {}",
            BASE_FIELDS + 1,
            fields.len()
        ));
    }
    let (id, source) = (fields[0], fields[1]);
    if id.is_empty() {
        return Err("empty id".into());
    }
    if source.is_empty() {
        return Err(format!("entry `{id}` has an empty source"));
    }
    let split = fields[2].parse::<Split>().map_err(|e| e.to_string())?;
    let mut labels = [false; NUM_LABELS];
    let mut votes = [0u32; NUM_LABELS];
    for k in 0..NUM_LABELS {
        labels[k] = flag(fields[4 + k]).map_err(|e| format!("label {}: {e}", Label::ALL[k]))?;
        votes[k] = fields[4 + NUM_LABELS + k]
            .parse()
            .map_err(|_| format!("votes for {}: bad count `{}`", Label::ALL[k], fields[4 + NUM_LABELS + k]))?;
    }
    let excluded = flag(fields[4 + 2 * NUM_LABELS]).map_err(|e| format!("excluded: {e}"))?;
    let augmented = match fields.get(BASE_FIELDS) {
        Some(f) => flag(f).map_err(|e| format!("augmented: {e}"))?,
        None => false,
    };
    Ok(ManifestEntry {
        id: id.to_string(),
        source: source.to_string(),
        speaker_id: fields[3].to_string(),
        split,
        label: LabelVector::new(labels, votes, n_annotators).map_err(|e| e.to_string())?,
        excluded,
        augmented,
    })
}

/// Parses manifest text. Lines starting with `#` are comments; a comment of
/// the form `# annotators: N` sets the annotator count (default 8).
pub fn parse_manifest_str(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut n_annotators = DEFAULT_ANNOTATORS;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("annotators:") {
                n_annotators = n.trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad annotator count `{}`", n.trim()),
                })?;
            }
            continue;
        }
        let entry = parse_line(line, n_annotators).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        if !seen.insert(entry.id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate id `{}` at line {}",
                entry.id,
                i + 1
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_str(&text)
}

pub fn format_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    if let Some(n) = entries.first().map(|e| e.label.n_annotators()) {
        if n != DEFAULT_ANNOTATORS {
            out.push_str(&format!("# annotators: {n}\n"));
        }
    }
    for e in entries {
        let bits = e.label.labels().map(|b| if b { "1" } else { "0" }).join("\t");
        let votes = e.label.votes().map(|v| v.to_string()).join("\t");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{bits}\t{votes}\t{}\t{}\n",
            e.id,
            e.source,
            e.split,
            e.speaker_id,
            e.excluded as u8,
            e.augmented as u8
        ));
    }
    out
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_manifest(entries)).map_err(|e| Error::io(path, e))
}

/// Resolves an entry's source against the directory holding the manifest.
pub fn resolve_source(manifest_dir: &Path, entry: &ManifestEntry) -> PathBuf {
    let p = Path::new(&entry.source);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    }
}

/// Keeps entries whose every positive label has at least `min_votes` votes.
pub fn filter_by_agreement(entries: &[ManifestEntry], min_votes: u32) -> Vec<ManifestEntry> {
    entries
        .iter()
        .filter(|e| e.label.positives().all(|l| e.label.votes_for(l) >= min_votes))
        .cloned()
        .collect()
}

/// Among entries positive for `label`, the fraction with at least
/// `min_votes` votes for it.
pub fn agreement_ratio(entries: &[ManifestEntry], label: Label, min_votes: u32) -> Result<f64> {
    let positive: Vec<u32> = entries
        .iter()
        .filter(|e| e.label.has(label))
        .map(|e| e.label.votes_for(label))
        .collect();
    if positive.is_empty() {
        return Err(Error::UndefinedRatio(format!("no entries positive for {label}")));
    }
    let agreed = positive.iter().filter(|&&v| v >= min_votes).count();
    Ok(agreed as f64 / positive.len() as f64)
}
