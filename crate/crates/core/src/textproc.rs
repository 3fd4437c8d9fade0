//! Tokenisation and bag-of-words / bag-of-clinical-words term counts.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Document, Lexicon};
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Which pre-processing pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Punctuation removed, split on non-alphanumeric boundaries.
    Ours,
    /// Whitespace split only; punctuation stays attached to tokens.
    Lee,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ours => "ours",
            Variant::Lee => "lee",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ours" => Ok(Variant::Ours),
            "lee" => Ok(Variant::Lee),
            other => Err(format!("unknown pipeline variant `{other}`")),
        }
    }
}

/// Document representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Bow,
    Boc,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Bow => "bow",
            Representation::Boc => "boc",
        })
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bow" => Ok(Representation::Bow),
            "boc" => Ok(Representation::Boc),
            other => Err(format!("unknown representation `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub stopwords: Arc<HashSet<String>>,
    /// Lowercase emitted tokens. Stopword matching is always case-insensitive.
    pub lowercase: bool,
}

impl PipelineConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            stopwords: Arc::new(default_stopwords()),
            lowercase: true,
        }
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = Arc::new(stopwords);
        self
    }

    /// Same pipeline, keeping token case (used for embedding lookup).
    pub fn case_preserving(&self) -> Self {
        Self {
            lowercase: false,
            ..self.clone()
        }
    }
}

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

pub fn tokenize(text: &str, config: &PipelineConfig) -> Vec<String> {
    let pieces: Box<dyn Iterator<Item = &str>> = match config.variant {
        Variant::Lee => Box::new(text.split_whitespace()),
        // Every Unicode punctuation character is non-alphanumeric, so splitting
        // here both strips punctuation and breaks tokens at it.
        Variant::Ours => Box::new(
            text.split(|c: char| !c.is_alphanumeric())
                .filter(|s| !s.is_empty()),
        ),
    };
    pieces
        .filter_map(|piece| {
            let lower = piece.to_lowercase();
            if config.stopwords.contains(&lower) {
                None
            } else if config.lowercase {
                Some(lower)
            } else {
                Some(piece.to_string())
            }
        })
        .collect()
}

/// Sparse term counts with their total.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermCounts {
    counts: BTreeMap<String, u32>,
    length: u64,
}

impl TermCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tc = Self::new();
        for t in tokens {
            tc.add(t.into(), 1);
        }
        tc
    }

    pub fn add(&mut self, term: String, count: u32) {
        if count == 0 {
            return;
        }
        *self.counts.entry(term).or_insert(0) += count;
        self.length += u64::from(count);
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &TermCounts) {
        for (t, &c) in &other.counts {
            self.add(t.clone(), c);
        }
    }

    pub fn get(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.counts.contains_key(term)
    }

    /// Sum of all counts.
    pub fn length(&self) -> u64 {
        self.length
    }

    /// Number of distinct terms.
    pub fn num_terms(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Terms in lexicographic order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TermCounts {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Self::from_tokens(iter)
    }
}

/// Bag of words over title and abstract.
pub fn bow(doc: &Document, config: &PipelineConfig) -> TermCounts {
    TermCounts::from_tokens(tokenize(&doc.text(), config))
}

/// Restriction of `bow_counts` to lexicon terms.
pub fn boc(bow_counts: &TermCounts, lexicon: &Lexicon) -> TermCounts {
    let mut out = TermCounts::new();
    for (t, c) in bow_counts.iter() {
        if lexicon.contains(t) {
            out.add(t.to_string(), c);
        }
    }
    out
}

/// Term counts in the requested representation.
pub fn represent(
    doc: &Document,
    config: &PipelineConfig,
    repr: Representation,
    lexicon: Option<&Lexicon>,
) -> Result<TermCounts> {
    let counts = bow(doc, config);
    match repr {
        Representation::Bow => Ok(counts),
        Representation::Boc => {
            let lexicon = lexicon.ok_or_else(|| {
                Error::config(
                    "lexicon",
                    "a lexicon is required for the BOC representation",
                )
            })?;
            Ok(boc(&counts, lexicon))
        }
    }
}
