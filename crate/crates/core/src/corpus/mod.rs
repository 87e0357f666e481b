//! Requirements corpora: data model, CSV/JSONL ingestion, label auditing and
//! a seeded synthetic-corpus generator.

mod audit;
mod io;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use audit::{audit_labels, AuditFlag, FlagReason, DEFAULT_AUDIT_STEMS};
pub use io::{load_corpus, meta_path, save_corpus, CorpusFormat};
pub use synth::{default_styles, synthesize_corpus, Style, SynthConfig};

/// Binary class of a requirement. Security-related requirements are the
/// positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_digit(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Requirement {
    pub spec_id: String,
    pub req_id: String,
    /// Raw, unprocessed text.
    pub text: String,
    /// `None` means unlabeled.
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpecType {
    #[serde(rename = "SRS")]
    Srs,
    #[serde(rename = "RFP")]
    Rfp,
    #[serde(rename = "BL")]
    Bl,
    #[serde(rename = "OTHER")]
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectType {
    Student,
    Commercial,
    Research,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prelabeled {
    Yes,
    Partially,
    No,
}

macro_rules! text_enum {
    ($ty:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $(
                    if s.trim().eq_ignore_ascii_case($text) {
                        return Ok($ty::$variant);
                    }
                )+
                Err(Error::InvalidArgument(format!("unknown {} {:?}", $what, s)))
            }
        }
    };
}

text_enum!(SpecType, "specification type", {
    Srs => "SRS", Rfp => "RFP", Bl => "BL", Other => "OTHER",
});
text_enum!(ProjectType, "project type", {
    Student => "student", Commercial => "commercial", Research => "research", Other => "other",
});
text_enum!(Prelabeled, "pre-labelled value", {
    Yes => "yes", Partially => "partially", No => "no",
});

/// Per-specification metadata, mirroring the columns of a project table:
/// specification type, project type and whether it came pre-labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecMeta {
    pub spec_id: String,
    pub spec_type: SpecType,
    pub project_type: ProjectType,
    pub prelabeled: Prelabeled,
}

impl SpecMeta {
    /// Metadata used when a corpus comes without a sidecar file.
    pub fn unknown(spec_id: impl Into<String>) -> Self {
        SpecMeta {
            spec_id: spec_id.into(),
            spec_type: SpecType::Other,
            project_type: ProjectType::Other,
            prelabeled: Prelabeled::No,
        }
    }
}

/// An ordered collection of requirements grouped by specification.
///
/// Construction validates every invariant, so a `Corpus` value is always
/// well formed and can be shared freely between workers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    requirements: Vec<Requirement>,
    specs: Vec<SpecMeta>,
}

impl Corpus {
    pub fn new(requirements: Vec<Requirement>, specs: Vec<SpecMeta>) -> Result<Self> {
        let mut spec_ids = HashSet::new();
        for meta in &specs {
            if !spec_ids.insert(meta.spec_id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "specification {} listed twice in metadata",
                    meta.spec_id
                )));
            }
        }
        let mut keys = HashSet::new();
        let mut used = HashSet::new();
        for req in &requirements {
            if req.text.trim().is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "requirement ({}, {}) has empty text",
                    req.spec_id, req.req_id
                )));
            }
            if !keys.insert((req.spec_id.as_str(), req.req_id.as_str())) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate requirement key ({}, {})",
                    req.spec_id, req.req_id
                )));
            }
            if !spec_ids.contains(req.spec_id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "requirement ({}, {}) refers to unknown specification",
                    req.spec_id, req.req_id
                )));
            }
            used.insert(req.spec_id.as_str());
        }
        if let Some(orphan) = specs.iter().find(|m| !used.contains(m.spec_id.as_str())) {
            return Err(Error::InvalidCorpus(format!(
                "specification {} has no requirements",
                orphan.spec_id
            )));
        }
        Ok(Corpus {
            requirements,
            specs,
        })
    }

    /// Builds a corpus whose specification metadata is unknown; specs are
    /// listed in order of first appearance.
    pub fn with_default_specs(requirements: Vec<Requirement>) -> Result<Self> {
        let mut seen = HashSet::new();
        let specs = requirements
            .iter()
            .filter(|r| seen.insert(r.spec_id.clone()))
            .map(|r| SpecMeta::unknown(r.spec_id.clone()))
            .collect();
        Corpus::new(requirements, specs)
    }

    pub fn requirements(&self) -> &[Requirement] {
        &self.requirements
    }

    pub fn specs(&self) -> &[SpecMeta] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    pub fn spec(&self, spec_id: &str) -> Option<&SpecMeta> {
        self.specs.iter().find(|m| m.spec_id == spec_id)
    }

    pub fn positive_count(&self) -> usize {
        self.count_label(Some(Label::Positive))
    }

    pub fn negative_count(&self) -> usize {
        self.count_label(Some(Label::Negative))
    }

    pub fn unlabeled_count(&self) -> usize {
        self.count_label(None)
    }

    fn count_label(&self, label: Option<Label>) -> usize {
        self.requirements.iter().filter(|r| r.label == label).count()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.requirements.iter().all(|r| r.label.is_some())
    }

    /// Restricts the corpus to specifications of one type.
    pub fn filter_spec_type(&self, spec_type: SpecType) -> Corpus {
        let specs: Vec<SpecMeta> = self
            .specs
            .iter()
            .filter(|m| m.spec_type == spec_type)
            .cloned()
            .collect();
        let keep: HashSet<&str> = specs.iter().map(|m| m.spec_id.as_str()).collect();
        let requirements = self
            .requirements
            .iter()
            .filter(|r| keep.contains(r.spec_id.as_str()))
            .cloned()
            .collect();
        Corpus {
            requirements,
            specs,
        }
    }

    /// Per-specification counts in metadata order.
    pub fn summary(&self) -> Vec<SpecSummary> {
        self.specs
            .iter()
            .map(|meta| {
                let mut row = SpecSummary {
                    meta: meta.clone(),
                    total: 0,
                    positives: 0,
                    negatives: 0,
                    unlabeled: 0,
                };
                for req in self.requirements.iter().filter(|r| r.spec_id == meta.spec_id) {
                    row.total += 1;
                    match req.label {
                        Some(Label::Positive) => row.positives += 1,
                        Some(Label::Negative) => row.negatives += 1,
                        None => row.unlabeled += 1,
                    }
                }
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecSummary {
    #[serde(flatten)]
    pub meta: SpecMeta,
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
    pub unlabeled: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(spec: &str, id: &str, text: &str, label: Option<Label>) -> Requirement {
        Requirement {
            spec_id: spec.into(),
            req_id: id.into(),
            text: text.into(),
            label,
        }
    }

    #[test]
    fn counts_partition_the_corpus() {
        let c = Corpus::with_default_specs(vec![
            req("S1", "R1", "encrypt data", Some(Label::Positive)),
            req("S1", "R2", "print invoices", Some(Label::Negative)),
            req("S2", "R1", "show a report", None),
        ])
        .unwrap();
        assert_eq!(c.positive_count(), 1);
        assert_eq!(c.negative_count(), 1);
        assert_eq!(c.unlabeled_count(), 1);
        assert_eq!(c.specs().len(), 2);
        assert!(!c.is_fully_labeled());
    }

    #[test]
    fn rejects_duplicates_blank_text_and_orphans() {
        let dup = Corpus::with_default_specs(vec![
            req("S1", "R1", "a b", None),
            req("S1", "R1", "c d", None),
        ]);
        assert!(matches!(dup, Err(Error::InvalidCorpus(_))));

        let blank = Corpus::with_default_specs(vec![req("S1", "R1", "   ", None)]);
        assert!(matches!(blank, Err(Error::InvalidCorpus(_))));

        let orphan = Corpus::new(
            vec![req("S1", "R1", "a b", None)],
            vec![SpecMeta::unknown("S1"), SpecMeta::unknown("S2")],
        );
        assert!(matches!(orphan, Err(Error::InvalidCorpus(_))));

        let unknown = Corpus::new(vec![req("S9", "R1", "a b", None)], vec![]);
        assert!(matches!(unknown, Err(Error::InvalidCorpus(_))));
    }

    #[test]
    fn filter_by_spec_type() {
        let reqs = vec![
            req("S1", "R1", "a b", Some(Label::Positive)),
            req("S2", "R1", "c d", Some(Label::Negative)),
        ];
        let mut s1 = SpecMeta::unknown("S1");
        s1.spec_type = SpecType::Rfp;
        let c = Corpus::new(reqs, vec![s1, SpecMeta::unknown("S2")]).unwrap();
        let rfp = c.filter_spec_type(SpecType::Rfp);
        assert_eq!(rfp.len(), 1);
        assert_eq!(rfp.specs()[0].spec_id, "S1");
    }

    #[test]
    fn enum_text_round_trip() {
        for t in [SpecType::Srs, SpecType::Rfp, SpecType::Bl, SpecType::Other] {
            assert_eq!(t.as_str().parse::<SpecType>().unwrap(), t);
        }
        assert_eq!("rfp".parse::<SpecType>().unwrap(), SpecType::Rfp);
        assert_eq!("Partially".parse::<Prelabeled>().unwrap(), Prelabeled::Partially);
        assert!("x".parse::<ProjectType>().is_err());
    }
}
