use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One line of a TREC run: `topic_id Q0 doc_id rank score tag`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub topic_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Ranked output for one (topic, seed or group, method) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRun {
    pub topic_id: String,
    pub tag: String,
    pub entries: Vec<RunEntry>,
}

impl RankedRun {
    /// Builds a run from `(doc_id, score)` pairs already in rank order.
    pub fn from_scored<'a, I>(topic_id: &str, tag: &str, scored: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunEntry {
                topic_id: topic_id.to_string(),
                doc_id: doc_id.to_string(),
                rank: i + 1,
                score,
                tag: tag.to_string(),
            })
            .collect();
        Self {
            topic_id: topic_id.to_string(),
            tag: tag.to_string(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// Drops the given documents and renumbers ranks from 1.
    pub fn without(&self, remove: &[&str]) -> Self {
        let kept = self
            .entries
            .iter()
            .filter(|e| !remove.contains(&e.doc_id.as_str()))
            .map(|e| (e.doc_id.as_str(), e.score));
        Self::from_scored(&self.topic_id, &self.tag, kept)
    }

    pub fn retag(mut self, tag: &str) -> Self {
        self.tag = tag.to_string();
        for e in &mut self.entries {
            e.tag = tag.to_string();
        }
        self
    }
}

/// Checks that within each (topic, tag) ranks run 1..n in file order and
/// scores never increase.
pub fn validate_run(entries: &[RunEntry]) -> Result<()> {
    let mut last: HashMap<(&str, &str), (usize, f64)> = HashMap::new();
    for e in entries {
        if !e.score.is_finite() {
            return Err(Error::InvalidRun(format!(
                "non-finite score for {} in topic {}",
                e.doc_id, e.topic_id
            )));
        }
        for field in [&e.topic_id, &e.doc_id, &e.tag] {
            if field.is_empty() || field.contains(char::is_whitespace) {
                return Err(Error::InvalidRun(format!(
                    "field `{field}` is empty or contains whitespace"
                )));
            }
        }
        let key = (e.topic_id.as_str(), e.tag.as_str());
        let expected = last.get(&key).map_or(1, |&(r, _)| r + 1);
        if e.rank != expected {
            return Err(Error::InvalidRun(format!(
                "topic {} tag {}: rank {} where {} was expected",
                e.topic_id, e.tag, e.rank, expected
            )));
        }
        if let Some(&(_, prev)) = last.get(&key) {
            if e.score > prev {
                return Err(Error::InvalidRun(format!(
                    "topic {} tag {}: score increases at rank {}",
                    e.topic_id, e.tag, e.rank
                )));
            }
        }
        last.insert(key, (e.rank, e.score));
    }
    Ok(())
}

/// Renders entries as TREC run text. Scores use the shortest representation
/// that parses back to the same `f64`.
pub fn format_run(entries: &[RunEntry]) -> Result<String> {
    validate_run(entries)?;
    let mut out = String::new();
    for e in entries {
        writeln!(
            out,
            "{} Q0 {} {} {} {}",
            e.topic_id, e.doc_id, e.rank, e.score, e.tag
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn write_run(entries: &[RunEntry], path: impl AsRef<Path>) -> Result<()> {
    let text = format_run(entries)?;
    crate::output::write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    let path = path.as_ref();
    let text = super::read_to_string(path)?;
    parse_run(&text, path)
}

pub(crate) fn parse_run(text: &str, path: &Path) -> Result<Vec<RunEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [topic_id, _q0, doc_id, rank, score, tag] = fields[..] else {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        };
        let rank: usize = rank
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| Error::parse(path, idx + 1, format!("invalid rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid score `{score}`")))?;
        entries.push(RunEntry {
            topic_id: topic_id.to_string(),
            doc_id: doc_id.to_string(),
            rank,
            score,
            tag: tag.to_string(),
        });
    }
    Ok(entries)
}
