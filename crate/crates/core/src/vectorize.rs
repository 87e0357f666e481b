//! Bag-of-words TF-IDF features.
//!
//! `tf(t, d) = count(t, d) / |d|` where `|d|` is the length of the token
//! stream after stop-word removal and stemming, and
//! `idf(t) = ln(N / df(t))` in [`TfidfMode::Plain`] mode or
//! `ln((1 + N) / (1 + df(t))) + 1` in [`TfidfMode::Smoothed`] mode.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::textproc::{preprocess, StopWordSet, TokenStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfidfMode {
    /// Natural log, no smoothing.
    #[default]
    Plain,
    Smoothed,
}

impl fmt::Display for TfidfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfidfMode::Plain => "plain",
            TfidfMode::Smoothed => "smoothed",
        })
    }
}

impl FromStr for TfidfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "unsmoothed" => Ok(TfidfMode::Plain),
            "smoothed" => Ok(TfidfMode::Smoothed),
            _ => Err(Error::InvalidArgument(format!("unknown tf-idf mode {s:?}"))),
        }
    }
}

/// Sparse non-negative vector; indices strictly increasing, no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from `(index, weight)` pairs in any order. Zero
    /// weights are dropped; duplicate indices, negative or non-finite
    /// weights are rejected.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate index in sparse vector".into()));
        }
        if entries.iter().any(|&(_, w)| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "sparse vector weights must be finite and non-negative".into(),
            ));
        }
        entries.retain(|&(_, w)| w != 0.0);
        Ok(SparseVector { entries })
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_entries(values.iter().copied().enumerate().collect())
    }

    /// Caller guarantees the invariants (sorted, unique, positive, finite).
    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w > 0.0 && w.is_finite()));
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Largest stored index plus one (0 for the empty vector).
    pub fn min_dims(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn to_dense(&self, dims: usize) -> Vec<f64> {
        let mut out = vec![0.0; dims];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

/// Vocabulary and IDF table fitted on training requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    n_train_docs: usize,
    mode: TfidfMode,
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    pub fn mode(&self) -> TfidfMode {
        self.mode
    }

    fn from_parts(terms: Vec<String>, idf: Vec<f64>, n_train_docs: usize, mode: TfidfMode) -> Result<Self> {
        if terms.len() != idf.len() {
            return Err(Error::InvalidArgument("terms and idf differ in length".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "feature terms must be unique and sorted".into(),
            ));
        }
        if idf.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("idf weights must be finite and >= 0".into()));
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(FeatureSpace {
            terms,
            index,
            idf,
            n_train_docs,
            mode,
        })
    }
}

/// Fits the vocabulary (all distinct training terms, sorted) and per-term
/// IDF. Document frequency counts presence, not multiplicity.
pub fn fit_features(train: &[TokenStream], mode: TfidfMode) -> Result<FeatureSpace> {
    if train.iter().all(TokenStream::is_empty) {
        return Err(Error::NoFeatures);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for stream in train {
        let distinct: BTreeSet<&str> = stream.iter().collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = train.len() as f64;
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .map(|(term, df)| {
            let df = df as f64;
            let w = match mode {
                TfidfMode::Plain => (n / df).ln(),
                TfidfMode::Smoothed => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
            };
            (term.to_owned(), w)
        })
        .unzip();
    FeatureSpace::from_parts(terms, idf, train.len(), mode)
}

/// Maps a token stream to its TF-IDF vector. Out-of-vocabulary terms are
/// ignored but still count towards the stream length.
pub fn transform(stream: &TokenStream, space: &FeatureSpace, l2_normalize: bool) -> SparseVector {
    if stream.is_empty() {
        return SparseVector::default();
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for term in stream.iter() {
        if let Some(i) = space.index_of(term) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let len = stream.len() as f64;
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, c)| (i, (c as f64 / len) * space.idf[i]))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if l2_normalize {
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            entries.iter_mut().for_each(|(_, w)| *w /= norm);
        }
    }
    SparseVector::from_sorted_unchecked(entries)
}

/// Text-to-vector settings that must match between training and prediction;
/// stored alongside the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessing {
    pub extend_stopwords: bool,
    pub l2_normalize: bool,
}

impl Preprocessing {
    pub fn stop_words(&self) -> StopWordSet {
        StopWordSet::new(self.extend_stopwords)
    }

    pub fn vectorize(&self, text: &str, stops: &StopWordSet, space: &FeatureSpace) -> SparseVector {
        transform(&preprocess(text, stops), space, self.l2_normalize)
    }
}

/// Index-ordered term list; the inverse of the vocabulary map.
pub fn feature_names(space: &FeatureSpace) -> &[String] {
    &space.terms
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    term: String,
    idf: f64,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceRecord {
    mode: TfidfMode,
    n_train_docs: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for FeatureSpace {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FeatureSpaceRecord {
            mode: self.mode,
            n_train_docs: self.n_train_docs,
            terms: self
                .terms
                .iter()
                .zip(&self.idf)
                .map(|(t, &idf)| TermRecord {
                    term: t.clone(),
                    idf,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = FeatureSpaceRecord::deserialize(deserializer)?;
        let (terms, idf) = rec.terms.into_iter().map(|t| (t.term, t.idf)).unzip();
        FeatureSpace::from_parts(terms, idf, rec.n_train_docs, rec.mode)
            .map_err(serde::de::Error::custom)
    }
}
