//! Per-topic document representations computed once and shared by every
//! seed run on that topic.

use std::collections::HashMap;

use crate::corpus_io::{Corpus, EmbeddingTable, Lexicon, Topic};
use crate::error::{Error, Result};
use crate::textproc::{tokenize, PipelineConfig, Representation, TermCounts};
use crate::vectorspace::{aes_vector, AesVector};

#[derive(Debug, Clone)]
pub struct PreparedDoc {
    pub doc_id: String,
    pub counts: TermCounts,
    /// Case-preserving tokens in the chosen representation, for embedding lookup.
    pub tokens: Vec<String>,
    /// Averaged embedding of `tokens`, when a table was supplied.
    pub aes: Option<AesVector>,
}

impl PreparedDoc {
    pub fn from_text(
        doc_id: impl Into<String>,
        text: &str,
        config: &PipelineConfig,
        repr: Representation,
        lexicon: Option<&Lexicon>,
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<Self> {
        let lexicon = match repr {
            Representation::Bow => None,
            Representation::Boc => Some(lexicon.ok_or_else(|| {
                Error::config(
                    "lexicon",
                    "a lexicon is required for the BOC representation",
                )
            })?),
        };
        let raw = tokenize(text, &config.case_preserving());
        let keep = |lower: &str| lexicon.is_none_or(|l| l.contains(lower));
        let mut counts = TermCounts::new();
        let mut tokens = Vec::with_capacity(raw.len());
        for tok in raw {
            let lower = tok.to_lowercase();
            if keep(&lower) {
                counts.add(if config.lowercase { lower } else { tok.clone() }, 1);
                tokens.push(tok);
            }
        }
        let aes = embeddings.map(|t| aes_vector(&tokens, t));
        Ok(Self {
            doc_id: doc_id.into(),
            counts,
            tokens,
            aes,
        })
    }
}

/// A topic's candidates in candidate-list order, with their judgments.
#[derive(Debug, Clone)]
pub struct PreparedTopic {
    pub topic: Topic,
    pub repr: Representation,
    pub docs: Vec<PreparedDoc>,
    index: HashMap<String, usize>,
}

impl PreparedTopic {
    pub fn new(topic: Topic, repr: Representation, docs: Vec<PreparedDoc>) -> Self {
        let index = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();
        Self {
            topic,
            repr,
            docs,
            index,
        }
    }

    pub fn topic_id(&self) -> &str {
        &self.topic.topic_id
    }

    pub fn get(&self, doc_id: &str) -> Option<&PreparedDoc> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn require(&self, doc_id: &str) -> Result<&PreparedDoc> {
        self.get(doc_id).ok_or_else(|| {
            Error::Contract(format!(
                "document `{doc_id}` is not a candidate of topic `{}`",
                self.topic_id()
            ))
        })
    }

    pub fn has_embeddings(&self) -> bool {
        self.docs.iter().all(|d| d.aes.is_some())
    }
}

/// Resources shared by every topic of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct Resources<'a> {
    pub corpus: &'a Corpus,
    pub pipeline: &'a PipelineConfig,
    pub lexicon: Option<&'a Lexicon>,
    pub embeddings: Option<&'a EmbeddingTable>,
}

pub fn prepare_topic(
    topic: &Topic,
    repr: Representation,
    res: Resources<'_>,
) -> Result<PreparedTopic> {
    let docs = topic
        .candidate_ids
        .iter()
        .map(|id| {
            let doc = res
                .corpus
                .get(id)
                .ok_or_else(|| Error::MissingDocument(id.clone()))?;
            PreparedDoc::from_text(
                id.clone(),
                &doc.text(),
                res.pipeline,
                repr,
                res.lexicon,
                res.embeddings,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedTopic::new(topic.clone(), repr, docs))
}
