//! Loading of corpora, topics, qrels, lexicons and embeddings, plus TREC run
//! files and the optional annotator client.

mod annotator;
mod run;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use annotator::{fetch_annotations, AnnotatorClient};
pub use run::{format_run, load_run, validate_run, write_run, RankedRun, RunEntry};

/// A candidate or seed study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
        }
    }

    /// Title and abstract joined by a single space.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.abstract_text.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.abstract_text);
        s
    }
}

pub type Corpus = HashMap<String, Document>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a JSON-lines corpus keyed by `doc_id`.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_corpus(&text, path)
}

pub(crate) fn parse_corpus(text: &str, path: &Path) -> Result<Corpus> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Record {
        doc_id: String,
        title: String,
        #[serde(rename = "abstract")]
        abstract_text: String,
    }

    let mut corpus = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if rec.doc_id.is_empty() {
            return Err(Error::parse(path, idx + 1, "empty doc_id"));
        }
        if corpus.contains_key(&rec.doc_id) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                id: rec.doc_id,
            });
        }
        corpus.insert(
            rec.doc_id.clone(),
            Document {
                doc_id: rec.doc_id,
                title: rec.title,
                abstract_text: rec.abstract_text,
            },
        );
    }
    Ok(corpus)
}

/// A review topic: its candidate set and relevance judgments.
///
/// Judgments keep qrels file order, which fixes the order of the seed pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    pub candidate_ids: Vec<String>,
    pub judgments: IndexMap<String, u32>,
}

impl Topic {
    pub fn new(topic_id: impl Into<String>) -> Self {
        Self {
            topic_id: topic_id.into(),
            candidate_ids: Vec::new(),
            judgments: IndexMap::new(),
        }
    }

    pub fn is_relevant(&self, doc_id: &str) -> bool {
        self.judgments.get(doc_id).is_some_and(|&g| g >= 1)
    }

    /// Relevant studies in qrels order.
    pub fn relevant(&self) -> Vec<&str> {
        self.judgments
            .iter()
            .filter(|(_, &g)| g >= 1)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn num_relevant(&self) -> usize {
        self.judgments.values().filter(|&&g| g >= 1).count()
    }

    /// Candidates that are not judged relevant (unjudged counts as irrelevant).
    pub fn irrelevant(&self) -> Vec<&str> {
        self.candidate_ids
            .iter()
            .filter(|id| !self.is_relevant(id))
            .map(String::as_str)
            .collect()
    }
}

/// Topics as loaded, plus the number of judged ids that had to be appended to
/// candidate lists because the topic file did not list them.
#[derive(Debug, Clone, Default)]
pub struct TopicSet {
    pub topics: Vec<Topic>,
    pub added_from_qrels: usize,
}

/// Loads topics and attaches qrels.
///
/// The topic file holds lines of `topic_id doc_id [doc_id ...]`; a topic may
/// span several lines. Blank lines and lines starting with `#` are skipped.
pub fn load_topics(
    topics_path: impl AsRef<Path>,
    qrels_path: impl AsRef<Path>,
) -> Result<TopicSet> {
    let topics_path = topics_path.as_ref();
    let qrels_path = qrels_path.as_ref();
    let topics_text = read_to_string(topics_path)?;
    let qrels_text = read_to_string(qrels_path)?;
    parse_topics(&topics_text, topics_path, &qrels_text, qrels_path)
}

pub(crate) fn parse_topics(
    topics_text: &str,
    topics_path: &Path,
    qrels_text: &str,
    qrels_path: &Path,
) -> Result<TopicSet> {
    let mut topics: IndexMap<String, (Topic, BTreeSet<String>)> = IndexMap::new();
    for (idx, line) in topics_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let topic_id = fields.next().expect("non-empty line");
        let (topic, seen) = topics
            .entry(topic_id.to_string())
            .or_insert_with(|| (Topic::new(topic_id), BTreeSet::new()));
        let mut any = false;
        for doc_id in fields {
            any = true;
            if seen.insert(doc_id.to_string()) {
                topic.candidate_ids.push(doc_id.to_string());
            }
        }
        if !any {
            return Err(Error::parse(
                topics_path,
                idx + 1,
                "topic line without doc ids",
            ));
        }
    }

    let mut added = 0;
    for (idx, line) in qrels_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (topic_id, doc_id, grade) = parse_qrels_line(line, qrels_path, idx + 1)?;
        let (topic, seen) = topics
            .get_mut(topic_id)
            .ok_or_else(|| Error::MissingTopic(topic_id.to_string()))?;
        if seen.insert(doc_id.to_string()) {
            topic.candidate_ids.push(doc_id.to_string());
            added += 1;
        }
        topic.judgments.insert(doc_id.to_string(), grade);
    }
    if added > 0 {
        log::warn!("{added} judged documents were missing from candidate lists and were added");
    }

    Ok(TopicSet {
        topics: topics.into_values().map(|(t, _)| t).collect(),
        added_from_qrels: added,
    })
}

fn parse_qrels_line<'a>(
    line: &'a str,
    path: &Path,
    line_no: usize,
) -> Result<(&'a str, &'a str, u32)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [topic_id, _iter, doc_id, grade] = fields[..] else {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected 4 fields, found {}", fields.len()),
        ));
    };
    let grade: u32 = grade.parse().map_err(|_| {
        Error::parse(
            path,
            line_no,
            format!("relevance grade `{grade}` is not a non-negative integer"),
        )
    })?;
    Ok((topic_id, doc_id, grade))
}

/// Reads a qrels file on its own, keyed by topic in file order.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<IndexMap<String, IndexMap<String, u32>>> {
    let path = path.as_ref();
    parse_qrels(&read_to_string(path)?, path)
}

pub(crate) fn parse_qrels(
    text: &str,
    path: &Path,
) -> Result<IndexMap<String, IndexMap<String, u32>>> {
    let mut out: IndexMap<String, IndexMap<String, u32>> = IndexMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (topic_id, doc_id, grade) = parse_qrels_line(line, path, idx + 1)?;
        out.entry(topic_id.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade);
    }
    Ok(out)
}

/// Keeps topics with at least `min_relevant` relevant studies, in order.
pub fn filter_topics(topics: &[Topic], min_relevant: usize) -> Vec<Topic> {
    topics
        .iter()
        .filter(|t| t.num_relevant() >= min_relevant)
        .cloned()
        .collect()
}

/// Clinical-term vocabulary used to restrict bags of words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    terms: BTreeSet<String>,
}

impl Lexicon {
    /// Builds a lexicon, lowercasing and splitting any multi-token entries.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms = terms
            .into_iter()
            .flat_map(|t| {
                t.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .collect();
        Self { terms }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

/// Loads a one-token-per-line lexicon. An empty file yields an empty lexicon
/// and a warning; every BOC representation is then empty.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut terms = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        if token.contains(char::is_whitespace) {
            return Err(Error::parse(
                path,
                idx + 1,
                "lexicon entry is not a single token",
            ));
        }
        terms.insert(token.to_lowercase());
    }
    if terms.is_empty() {
        log::warn!("lexicon {} is empty", path.display());
    }
    Ok(Lexicon { terms })
}

/// Dense word vectors loaded from word2vec text format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Adds a vector; fails if its length differs from the table dimension.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Contract(format!(
                "embedding of length {} in table of dimension {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Raw token first, then its lowercase form.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.get(token).or_else(|| {
            let lower = token.to_lowercase();
            if lower == token {
                None
            } else {
                self.get(&lower)
            }
        })
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let header: Vec<&str> = header.split_whitespace().collect();
    let [vocab, dim] = header[..] else {
        return Err(Error::parse(
            path,
            1,
            "header must be `vocab_size dimension`",
        ));
    };
    let vocab: usize = vocab
        .parse()
        .map_err(|_| Error::parse(path, 1, "invalid vocabulary size"))?;
    let dim: usize = dim
        .parse()
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(path, 1, "invalid dimension"))?;

    let mut table = EmbeddingTable::new(dim);
    table.vectors.reserve(vocab);
    for (idx, line) in lines {
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        table.vectors.entry(token.to_string()).or_insert(values);
    }
    if table.len() != vocab {
        log::warn!(
            "{}: header declares {vocab} vectors, read {}",
            path.display(),
            table.len()
        );
    }
    Ok(table)
}
