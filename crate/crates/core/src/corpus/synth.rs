//! Seeded generator for desk-scale corpora with a controllable security
//! signal. Positives are drawn from a security phrase pool, negatives from
//! per-domain functional phrases, and both share filler vocabulary
//! ("provide the ability", "user", domain objects). A small share of rows
//! is written as the other class, imitating annotator disagreement, so
//! that the corpus is not perfectly separable.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Label, Prelabeled, ProjectType, Requirement, SpecMeta, SpecType};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Style {
    /// "As a <role> I would like to ..."
    UserStory,
    /// "The system shall ..."
    SystemShall,
    /// "The Vendor shall ..."
    VendorInstruction,
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::UserStory => "user-story",
            Style::SystemShall => "system-shall",
            Style::VendorInstruction => "vendor-instruction",
        }
    }

    fn spec_type(self) -> SpecType {
        match self {
            Style::UserStory => SpecType::Bl,
            Style::SystemShall => SpecType::Srs,
            Style::VendorInstruction => SpecType::Rfp,
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Style::UserStory, Style::SystemShall, Style::VendorInstruction]
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown style {s:?}")))
    }
}

// Specification mix of a ten-document study: types, project kinds and
// labelling state, cycled when more specs are requested.
const TYPE_CYCLE: [Style; 10] = [
    Style::SystemShall,
    Style::SystemShall,
    Style::VendorInstruction,
    Style::SystemShall,
    Style::UserStory,
    Style::VendorInstruction,
    Style::VendorInstruction,
    Style::VendorInstruction,
    Style::UserStory,
    Style::VendorInstruction,
];
const PROJECT_CYCLE: [ProjectType; 10] = [
    ProjectType::Student,
    ProjectType::Student,
    ProjectType::Commercial,
    ProjectType::Commercial,
    ProjectType::Research,
    ProjectType::Commercial,
    ProjectType::Commercial,
    ProjectType::Commercial,
    ProjectType::Commercial,
    ProjectType::Commercial,
];
const PRELABEL_CYCLE: [Prelabeled; 10] = [
    Prelabeled::Yes,
    Prelabeled::Yes,
    Prelabeled::Partially,
    Prelabeled::Partially,
    Prelabeled::Partially,
    Prelabeled::No,
    Prelabeled::Partially,
    Prelabeled::Yes,
    Prelabeled::No,
    Prelabeled::Yes,
];

/// Styles for `n` specs: three-quarters RFP-like vendor instructions and
/// system-shall specs, the rest user-story backlogs.
pub fn default_styles(n: usize) -> Vec<Style> {
    (0..n).map(|i| TYPE_CYCLE[i % TYPE_CYCLE.len()]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_specs: usize,
    pub reqs_per_spec: usize,
    pub positive_rate: f64,
    /// Style of spec `i` (`S{i+1}`); must have `n_specs` entries.
    pub styles: Vec<Style>,
    /// Share of positives whose text carries no security signal.
    pub quiet_positive_rate: f64,
    /// Share of negatives whose text reads like a security requirement.
    pub noisy_negative_rate: f64,
}

impl SynthConfig {
    pub fn new(seed: u64, n_specs: usize, reqs_per_spec: usize, positive_rate: f64) -> Self {
        SynthConfig {
            seed,
            n_specs,
            reqs_per_spec,
            positive_rate,
            styles: default_styles(n_specs),
            quiet_positive_rate: 0.08,
            noisy_negative_rate: 0.015,
        }
    }
}

struct Domain {
    objects: &'static [&'static str],
    areas: &'static [&'static str],
    verbs: &'static [&'static str],
}

const DOMAINS: [Domain; 6] = [
    Domain {
        objects: &["invoices", "payments", "accounts payable", "purchase orders", "budget lines", "vendor payments", "ledger entries"],
        areas: &["the accounts payable module", "the general ledger", "the budgeting screen"],
        verbs: &["reconcile", "approve", "calculate", "reissue", "age and analyze", "export"],
    },
    Domain {
        objects: &["employee records", "payroll runs", "leave requests", "training plans", "job applications", "timesheets"],
        areas: &["the personnel file", "the payroll module", "the recruitment portal"],
        verbs: &["schedule", "approve", "update", "track", "print", "submit"],
    },
    Domain {
        objects: &["stock levels", "equipment loans", "asset tags", "supplier lists", "delivery notes", "storage locations"],
        areas: &["the inventory dashboard", "the warehouse view", "the lab equipment list"],
        verbs: &["register", "track", "count", "reorder", "label", "move"],
    },
    Domain {
        objects: &["customer contacts", "sales leads", "marketing campaigns", "support tickets", "quotes", "call notes"],
        areas: &["the customer portal", "the sales pipeline", "the service desk"],
        verbs: &["assign", "merge", "follow up", "forecast", "email", "tag"],
    },
    Domain {
        objects: &["menus", "table reservations", "food orders", "delivery routes", "daily specials", "loyalty points"],
        areas: &["the mobile app", "the kitchen display", "the booking page"],
        verbs: &["browse", "book", "cancel", "rate", "order", "customize"],
    },
    Domain {
        objects: &["documents", "templates", "folders", "document versions", "metadata fields", "scanned letters"],
        areas: &["the document repository", "the archive", "the workflow engine"],
        verbs: &["upload", "index", "retrieve", "archive", "annotate", "share"],
    },
];

const ROLES: [&str; 6] = [
    "user",
    "developer",
    "project manager",
    "data analyst",
    "platform operator",
    "end user",
];

const FUNCTIONAL_TAILS: [&str; 12] = [
    "on a monthly basis",
    "according to configurable business rules",
    "in PDF and spreadsheet format",
    "for each department",
    "within two seconds",
    "from the main dashboard",
    "via a single unified API",
    "at the end of each month",
    "with supervisor approval",
    "in a sortable list",
    "using drag and drop",
    "grouped by category",
];

const BENEFITS: [&str; 6] = [
    "I can save time",
    "my team stays informed",
    "reporting is easier",
    "I do not have to repeat work",
    "the process is faster",
    "I can plan ahead",
];

// `{o}` = domain object, `{a}` = domain area, `{v}` = domain verb.
const SECURITY_PHRASES: [&str; 22] = [
    "encrypt {o} at rest and in transit",
    "authenticate every user before granting access to {a}",
    "require a strong password for every account",
    "restrict access to {a} based on user roles",
    "keep an audit trail of all changes to {o}",
    "log failed login attempts and alert the administrator",
    "lock the account after repeated failed login attempts",
    "enforce role based permissions on {o}",
    "protect {o} against unauthorized modification",
    "allow only authorized users to {v} {o}",
    "comply with the information security policy",
    "scan uploaded {o} for viruses and malware",
    "expire idle sessions after a configurable timeout and require a new login",
    "mask confidential fields when displaying {o}",
    "verify the integrity of {o} with cryptographic checksums",
    "apply security patches for known vulnerabilities within thirty days",
    "use certificates to secure connections to {a}",
    "record user actions on {o} in a tamper proof security log",
    "support two factor authentication for administrators",
    "prevent unauthorized access to {a}",
    "reset passwords only after verifying the identity of the user",
    "grant administrators the right to revoke access to {o}",
];

// Terse security requirements whose vocabulary rarely recurs across specs.
const IMPLICIT_SECURITY: [&str; 10] = [
    "support LDAPv3",
    "support Kerberos",
    "possess an ISO 27002 certificate of conformance",
    "comply with HIPAA for patient {o}",
    "have a fraud detection function for {o}",
    "keep {o} confidential",
    "back up {o} nightly to an offsite location",
    "remain available during scheduled maintenance of {a}",
    "hide {o} from people outside the department",
    "sign outgoing {o} digitally",
];

// Functional requirements that borrow security-sounding words.
const DECOY_PHRASES: [&str; 8] = [
    "show the login name of the current user on {a}",
    "log the time each of the {o} was exported for statistics",
    "give quick access to recently used {o} from {a}",
    "let administrators change the colour scheme of {a}",
    "display the company logo on the login page",
    "record how often {o} are opened for usage reports",
    "allow users to reset the layout of {a}",
    "remember the last {o} a user viewed",
];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len() as u32) as usize]
}

fn fill(template: &str, domain: &Domain, rng: &mut ChaCha8Rng) -> String {
    let mut out = template.to_string();
    if out.contains("{o}") {
        out = out.replace("{o}", pick(rng, domain.objects));
    }
    if out.contains("{a}") {
        out = out.replace("{a}", pick(rng, domain.areas));
    }
    if out.contains("{v}") {
        out = out.replace("{v}", pick(rng, domain.verbs));
    }
    out
}

fn functional_phrase(domain: &Domain, rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {}",
        pick(rng, domain.verbs),
        pick(rng, domain.objects),
        pick(rng, &FUNCTIONAL_TAILS)
    )
}

fn verb_phrase(positive: bool, domain: &Domain, rng: &mut ChaCha8Rng) -> String {
    let core = if positive {
        let roll = rng.gen_range(0..20u32);
        if roll < 2 {
            fill(pick(rng, &IMPLICIT_SECURITY), domain, rng)
        } else if roll < 6 {
            // Functional requirement with an embedded security constraint.
            format!(
                "{} and {}",
                functional_phrase(domain, rng),
                fill(pick(rng, &SECURITY_PHRASES), domain, rng)
            )
        } else {
            fill(pick(rng, &SECURITY_PHRASES), domain, rng)
        }
    } else if rng.gen_range(0..10u32) == 0 {
        fill(pick(rng, &DECOY_PHRASES), domain, rng)
    } else {
        functional_phrase(domain, rng)
    };
    if rng.gen_bool(0.3) {
        format!("provide the ability to {core}")
    } else {
        core
    }
}

fn sentence(style: Style, positive: bool, domain: &Domain, rng: &mut ChaCha8Rng) -> String {
    let vp = verb_phrase(positive, domain, rng);
    match style {
        Style::SystemShall => format!("The system shall {vp}."),
        Style::VendorInstruction => match rng.gen_range(0..3u32) {
            0 => format!("The Vendor shall {vp}."),
            1 => format!("The Vendor shall ensure that the solution can {vp}."),
            _ => format!("The solution should {vp}."),
        },
        Style::UserStory => format!(
            "As a {} I would like to {vp} so that {}.",
            pick(rng, &ROLES),
            pick(rng, &BENEFITS)
        ),
    }
}

/// Generates `n_specs × reqs_per_spec` labelled requirements. Each spec gets
/// exactly `round(reqs_per_spec × positive_rate)` positives at seeded random
/// positions; output is a pure function of the configuration.
pub fn synthesize_corpus(config: &SynthConfig) -> Result<Corpus> {
    let rate = config.positive_rate;
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "positive_rate must lie in (0, 1), got {rate}"
        )));
    }
    if config.n_specs < 2 {
        return Err(Error::InvalidArgument("need at least 2 specifications".into()));
    }
    if config.reqs_per_spec < 10 {
        return Err(Error::InvalidArgument(
            "need at least 10 requirements per specification".into(),
        ));
    }
    for (name, v) in [
        ("quiet_positive_rate", config.quiet_positive_rate),
        ("noisy_negative_rate", config.noisy_negative_rate),
    ] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {v}")));
        }
    }
    if config.styles.len() != config.n_specs {
        return Err(Error::InvalidArgument(format!(
            "{} styles given for {} specifications",
            config.styles.len(),
            config.n_specs
        )));
    }

    let n = config.reqs_per_spec;
    let n_pos = ((n as f64) * rate).round() as usize;
    let mut requirements = Vec::with_capacity(config.n_specs * n);
    let mut specs = Vec::with_capacity(config.n_specs);
    for (s, &style) in config.styles.iter().enumerate() {
        let mut rng = seed::rng(seed::derive(config.seed, 0x73796e74, s as u64));
        let spec_id = format!("S{}", s + 1);
        let domain = &DOMAINS[s % DOMAINS.len()];

        let mut positive = vec![false; n];
        positive[..n_pos].iter_mut().for_each(|p| *p = true);
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i as u32) as usize;
            positive.swap(i, j);
        }

        for (i, &pos) in positive.iter().enumerate() {
            let flip = if pos {
                config.quiet_positive_rate
            } else {
                config.noisy_negative_rate
            };
            let reads_positive = pos ^ rng.gen_bool(flip);
            requirements.push(Requirement {
                spec_id: spec_id.clone(),
                req_id: format!("R{}", i + 1),
                text: sentence(style, reads_positive, domain, &mut rng),
                label: Some(Label::from_bool(pos)),
            });
        }
        specs.push(SpecMeta {
            spec_id,
            spec_type: style.spec_type(),
            project_type: PROJECT_CYCLE[s % PROJECT_CYCLE.len()],
            prelabeled: PRELABEL_CYCLE[s % PRELABEL_CYCLE.len()],
        });
    }
    Corpus::new(requirements, specs)
}
