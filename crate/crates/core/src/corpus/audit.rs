use std::collections::BTreeSet;

use serde::Serialize;

use super::{Corpus, Label, Requirement};
use crate::textproc::{preprocess, StopWordSet};

/// Security-bearing stems used when no keyword list is supplied.
pub const DEFAULT_AUDIT_STEMS: [&str; 13] = [
    "secur", "author", "authent", "access", "encrypt", "password", "login", "audit", "log",
    "vulner", "protect", "role", "polici",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum FlagReason {
    /// Labelled negative but mentions these security stems.
    SuspiciousNegative { matched: Vec<String> },
    /// Labelled positive but mentions none of the stems.
    SuspiciousPositive,
}

impl FlagReason {
    pub fn describe(&self) -> String {
        match self {
            FlagReason::SuspiciousNegative { matched } => {
                format!("suspicious-negative ({})", matched.join(" "))
            }
            FlagReason::SuspiciousPositive => "suspicious-positive".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFlag {
    pub requirement: Requirement,
    pub reason: FlagReason,
}

/// Flags labels that disagree with a keyword heuristic, for human review.
///
/// Negatives whose stemmed text contains a keyword stem and positives that
/// contain none are reported, sorted by `(spec_id, req_id)`. Unlabelled
/// rows are skipped and the corpus is left untouched.
pub fn audit_labels<S: AsRef<str>>(corpus: &Corpus, keyword_stems: &[S]) -> Vec<AuditFlag> {
    let stems: BTreeSet<&str> = keyword_stems.iter().map(AsRef::as_ref).collect();
    let stops = StopWordSet::base();
    let mut flags: Vec<AuditFlag> = corpus
        .requirements()
        .iter()
        .filter_map(|req| {
            let label = req.label?;
            let stream = preprocess(&req.text, &stops);
            let matched: BTreeSet<&str> = stream.iter().filter(|t| stems.contains(t)).collect();
            let reason = match label {
                Label::Negative if !matched.is_empty() => FlagReason::SuspiciousNegative {
                    matched: matched.into_iter().map(str::to_owned).collect(),
                },
                Label::Positive if matched.is_empty() => FlagReason::SuspiciousPositive,
                _ => return None,
            };
            Some(AuditFlag {
                requirement: req.clone(),
                reason,
            })
        })
        .collect();
    flags.sort_by(|a, b| {
        (&a.requirement.spec_id, &a.requirement.req_id)
            .cmp(&(&b.requirement.spec_id, &b.requirement.req_id))
    });
    flags
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
    fn flags_keyword_bearing_negative() {
        let c = Corpus::with_default_specs(vec![
            req("S7", "R1", "only authorized users may reissue a payment", Some(Label::Negative)),
            req("S7", "R2", "the vendor shall encrypt all data", Some(Label::Positive)),
        ])
        .unwrap();
        let flags = audit_labels(&c, &DEFAULT_AUDIT_STEMS);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].requirement.req_id, "R1");
        assert_eq!(
            flags[0].reason,
            FlagReason::SuspiciousNegative {
                matched: vec!["author".into()]
            }
        );
    }

    #[test]
    fn flags_positive_without_keywords_and_skips_unlabeled() {
        let c = Corpus::with_default_specs(vec![
            req("S2", "R9", "print the monthly invoice", Some(Label::Positive)),
            req("S1", "R3", "passwords are hashed", None),
        ])
        .unwrap();
        let flags = audit_labels(&c, &["password"]);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].reason, FlagReason::SuspiciousPositive);
    }

    #[test]
    fn unlabeled_corpus_yields_nothing() {
        let c = Corpus::with_default_specs(vec![req("S1", "R1", "encrypt", None)]).unwrap();
        assert!(audit_labels(&c, &DEFAULT_AUDIT_STEMS).is_empty());
    }

    #[test]
    fn output_is_sorted_and_corpus_untouched() {
        let c = Corpus::with_default_specs(vec![
            req("S2", "R1", "log in with a password", Some(Label::Negative)),
            req("S1", "R2", "access control lists", Some(Label::Negative)),
            req("S1", "R1", "role based access", Some(Label::Negative)),
        ])
        .unwrap();
        let before = c.clone();
        let flags = audit_labels(&c, &DEFAULT_AUDIT_STEMS);
        let keys: Vec<_> = flags
            .iter()
            .map(|f| (f.requirement.spec_id.as_str(), f.requirement.req_id.as_str()))
            .collect();
        assert_eq!(keys, [("S1", "R1"), ("S1", "R2"), ("S2", "R1")]);
        assert_eq!(c, before);
    }
}
