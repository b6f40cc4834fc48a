use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{DEFAULT_ANNOTATORS, NUM_LABELS};

use super::manifest::{ManifestEntry, Split};

/// The eight style labels in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Female,
    Male,
    Adult,
    Teenager,
    Dark,
    Bright,
    Rough,
    Smooth,
}

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::Female,
        Label::Male,
        Label::Adult,
        Label::Teenager,
        Label::Dark,
        Label::Bright,
        Label::Rough,
        Label::Smooth,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Female => "Female",
            Label::Male => "Male",
            Label::Adult => "Adult",
            Label::Teenager => "Teenager",
            Label::Dark => "Dark",
            Label::Bright => "Bright",
            Label::Rough => "Rough",
            Label::Smooth => "Smooth",
        }
    }

    /// The other label on the same two-valued axis.
    pub fn opposite(self) -> Label {
        Self::ALL[self.index() ^ 1]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Validation(format!("unknown label `{s}`")))
    }
}

/// Multi-hot targets plus the annotator vote count behind each label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelVector {
    labels: [bool; NUM_LABELS],
    votes: [u32; NUM_LABELS],
    n_annotators: u32,
}

impl LabelVector {
    pub fn new(labels: [bool; NUM_LABELS], votes: [u32; NUM_LABELS], n_annotators: u32) -> Result<Self> {
        if let Some(k) = (0..NUM_LABELS).find(|&k| votes[k] > n_annotators) {
            return Err(Error::Validation(format!(
                "{} has {} votes but only {n_annotators} annotators",
                Label::ALL[k],
                votes[k]
            )));
        }
        Ok(Self {
            labels,
            votes,
            n_annotators,
        })
    }

    /// Labels switched on with unanimous votes; everything else off with none.
    pub fn unanimous(positive: &[Label], n_annotators: u32) -> Self {
        let mut labels = [false; NUM_LABELS];
        let mut votes = [0; NUM_LABELS];
        for l in positive {
            labels[l.index()] = true;
            votes[l.index()] = n_annotators;
        }
        Self {
            labels,
            votes,
            n_annotators,
        }
    }

    pub fn labels(&self) -> &[bool; NUM_LABELS] {
        &self.labels
    }

    pub fn votes(&self) -> &[u32; NUM_LABELS] {
        &self.votes
    }

    pub fn n_annotators(&self) -> u32 {
        self.n_annotators
    }

    pub fn has(&self, l: Label) -> bool {
        self.labels[l.index()]
    }

    pub fn votes_for(&self, l: Label) -> u32 {
        self.votes[l.index()]
    }

    /// Annotators agreeing with the assigned bit: the votes for a positive
    /// label, the abstentions for a negative one.
    pub fn agreement(&self, k: usize) -> u32 {
        if self.labels[k] {
            self.votes[k]
        } else {
            self.n_annotators - self.votes[k]
        }
    }

    pub fn positives(&self) -> impl Iterator<Item = Label> + '_ {
        Label::ALL.into_iter().filter(|l| self.has(*l))
    }

    pub fn targets<S: crate::Scalar>(&self) -> [S; NUM_LABELS] {
        self.labels.map(|b| if b { S::one() } else { S::zero() })
    }
}

/// An annotation record before the label rules are applied.
///
/// `categories` lists every category annotators assigned, with vote counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEntry {
    pub id: String,
    pub source: String,
    pub speaker_id: String,
    pub split: Split,
    pub categories: Vec<(String, u32)>,
    pub n_annotators: u32,
}

impl RawEntry {
    pub fn new(id: &str, categories: &[(&str, u32)]) -> Self {
        Self {
            id: id.to_string(),
            source: format!("{id}.wav"),
            speaker_id: id.to_string(),
            split: Split::Train,
            categories: categories.iter().map(|(c, v)| (c.to_string(), *v)).collect(),
            n_annotators: DEFAULT_ANNOTATORS,
        }
    }
}

impl From<&ManifestEntry> for RawEntry {
    fn from(e: &ManifestEntry) -> Self {
        let mut categories: Vec<(String, u32)> = e
            .label
            .positives()
            .map(|l| (l.name().to_ascii_lowercase(), e.label.votes_for(l)))
            .collect();
        if e.excluded {
            categories.push(("ambiguous".into(), e.label.n_annotators()));
        }
        Self {
            id: e.id.clone(),
            source: e.source.clone(),
            speaker_id: e.speaker_id.clone(),
            split: e.split,
            categories,
            n_annotators: e.label.n_annotators(),
        }
    }
}

/// Maps raw categories onto the eight labels.
///
/// `senior` is folded into `Adult` (votes added, capped at the annotator
/// count), and an `ambiguous` gender flags the entry as excluded.
pub fn normalize_labels(raw: &RawEntry) -> Result<ManifestEntry> {
    let mut labels = [false; NUM_LABELS];
    let mut votes = [0u32; NUM_LABELS];
    let mut excluded = false;
    for (name, v) in &raw.categories {
        let target = match name.trim().to_ascii_lowercase().as_str() {
            "ambiguous" => {
                excluded = true;
                continue;
            }
            "senior" => Label::Adult,
            other => other.parse::<Label>().map_err(|_| {
                Error::Validation(format!("entry `{}`: unknown category `{name}`", raw.id))
            })?,
        };
        let k = target.index();
        labels[k] = true;
        votes[k] = (votes[k] + v).min(raw.n_annotators);
    }
    Ok(ManifestEntry {
        id: raw.id.clone(),
        source: raw.source.clone(),
        speaker_id: raw.speaker_id.clone(),
        split: raw.split,
        label: LabelVector::new(labels, votes, raw.n_annotators)?,
        excluded,
        augmented: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let names: Vec<_> = Label::ALL.iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            ["Female", "Male", "Adult", "Teenager", "Dark", "Bright", "Rough", "Smooth"]
        );
        assert_eq!(Label::Rough.opposite(), Label::Smooth);
        assert_eq!(Label::Teenager.opposite(), Label::Adult);
    }

    #[test]
    fn senior_merges_into_adult() {
        let e = normalize_labels(&RawEntry::new("a", &[("senior", 6)])).unwrap();
        assert!(e.label.has(Label::Adult));
        assert!(!e.label.has(Label::Teenager));
        assert_eq!(e.label.votes_for(Label::Adult), 6);
    }

    #[test]
    fn merged_votes_are_capped() {
        let e = normalize_labels(&RawEntry::new("a", &[("adult", 5), ("senior", 6)])).unwrap();
        assert_eq!(e.label.votes_for(Label::Adult), 8);
    }

    #[test]
    fn ambiguous_gender_is_flagged_not_dropped() {
        let e = normalize_labels(&RawEntry::new("a", &[("ambiguous", 8), ("adult", 8)])).unwrap();
        assert!(e.excluded);
        assert!(!e.label.has(Label::Female) && !e.label.has(Label::Male));
    }

    #[test]
    fn plain_categories_pass_through() {
        let raw = RawEntry::new("a", &[("female", 8), ("adult", 7), ("bright", 6), ("smooth", 5)]);
        let e = normalize_labels(&raw).unwrap();
        let pos: Vec<_> = e.label.positives().collect();
        assert_eq!(pos, [Label::Female, Label::Adult, Label::Bright, Label::Smooth]);
        assert_eq!(e.label.votes(), &[8, 0, 7, 0, 0, 6, 0, 5]);
        assert!(!e.excluded);
    }

    #[test]
    fn unknown_category_is_rejected() {
        let err = normalize_labels(&RawEntry::new("a", &[("husky", 3)])).unwrap_err();
        assert!(err.to_string().contains("husky"));
    }

    #[test]
    fn normalization_is_idempotent() {
        for cats in [
            vec![("senior", 4), ("adult", 2), ("male", 8)],
            vec![("ambiguous", 8), ("dark", 3), ("rough", 1)],
            vec![("female", 8), ("teenager", 5), ("bright", 8), ("smooth", 2)],
        ] {
            let once = normalize_labels(&RawEntry::new("x", &cats)).unwrap();
            let twice = normalize_labels(&RawEntry::from(&once)).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn votes_above_annotator_count_are_invalid() {
        assert!(LabelVector::new([false; 8], [9, 0, 0, 0, 0, 0, 0, 0], 8).is_err());
    }

    #[test]
    fn agreement_counts_abstentions_for_negatives() {
        let v = LabelVector::new([true, false, false, false, false, false, false, false], [6, 2, 0, 0, 0, 0, 0, 0], 8)
            .unwrap();
        assert_eq!(v.agreement(0), 6);
        assert_eq!(v.agreement(1), 6);
        assert_eq!(v.agreement(2), 8);
    }
}
