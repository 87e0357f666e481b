//! Deterministic text normalisation: noise removal, tokenisation, case
//! folding, stop-word removal and Porter stemming.

mod porter;

use std::collections::HashSet;

pub use porter::stem;

/// The bundled 318-word English stop list, one lowercase word per line.
pub const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Words that appear in most requirements regardless of class.
pub const REQUIREMENT_STOPWORDS: [&str; 3] = ["user", "shall", "vendor"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWordSet {
    words: HashSet<String>,
    extended: bool,
}

impl StopWordSet {
    pub fn base() -> Self {
        StopWordSet {
            words: STOPWORDS_EN.lines().map(str::to_owned).collect(),
            extended: false,
        }
    }

    /// Base list plus [`REQUIREMENT_STOPWORDS`].
    pub fn extended() -> Self {
        let mut set = Self::base();
        set.words
            .extend(REQUIREMENT_STOPWORDS.iter().map(|w| w.to_string()));
        set.extended = true;
        set
    }

    pub fn new(extended: bool) -> Self {
        if extended {
            Self::extended()
        } else {
            Self::base()
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopWordSet {
    fn default() -> Self {
        Self::base()
    }
}

/// Ordered, lowercase, stemmed terms of one requirement.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenStream(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenStream {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenStream(iter.into_iter().map(Into::into).collect())
    }
}

/// Replaces every non-alphanumeric character with a space, lowercases,
/// collapses runs of spaces and trims.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut gap = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            // Lowercasing can emit combining marks (e.g. 'İ'); keep only the
            // alphanumeric part so the output is a fixed point.
            out.extend(ch.to_lowercase().filter(|c| c.is_alphanumeric()));
        } else {
            gap = true;
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

pub fn remove_stop_words(tokens: Vec<String>, stops: &StopWordSet) -> Vec<String> {
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

/// `normalize → tokenize → remove_stop_words → stem`. Stop words are matched
/// before stemming because the list holds unstemmed words.
pub fn preprocess(text: &str, stops: &StopWordSet) -> TokenStream {
    let tokens = remove_stop_words(tokenize(&normalize(text)), stops);
    TokenStream(tokens.iter().map(|t| stem(t)).collect())
}
