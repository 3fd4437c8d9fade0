use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Document, Lexicon};
use crate::error::{Error, Result};

const BATCH_SIZE: usize = 32;

#[derive(Serialize)]
struct AnnotateRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct AnnotateResponse {
    tokens: Vec<Vec<String>>,
}

/// Client for an external clinical-term annotator.
///
/// The service accepts `POST {"texts": [...]}` and answers
/// `{"tokens": [[...], ...]}` with one token list per text.
pub struct AnnotatorClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl AnnotatorClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: ureq::AgentBuilder::new().build(),
        }
    }

    pub fn annotate(&self, texts: &[String]) -> Result<Vec<Vec<String>>> {
        let body = serde_json::to_value(AnnotateRequest { texts })
            .map_err(|e| Error::Protocol(e.to_string()))?;
        let resp = match self.agent.post(&self.endpoint).send_json(body) {
            Ok(resp) => resp,
            Err(ureq::Error::Status(code, _)) => {
                return Err(Error::Transport(format!("HTTP status {code}")))
            }
            Err(e) => return Err(Error::Transport(e.to_string())),
        };
        let parsed: AnnotateResponse = resp
            .into_json()
            .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
        if parsed.tokens.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "{} token lists for {} texts",
                parsed.tokens.len(),
                texts.len()
            )));
        }
        Ok(parsed.tokens)
    }

    /// Annotates all documents in fixed-size batches and returns the sorted
    /// union of clinical tokens.
    pub fn lexicon_for(&self, documents: &[Document]) -> Result<Lexicon> {
        let mut terms = BTreeSet::new();
        for batch in documents.chunks(BATCH_SIZE) {
            let texts: Vec<String> = batch.iter().map(|d| d.text().trim().to_string()).collect();
            for tokens in self.annotate(&texts)? {
                terms.extend(tokens);
            }
        }
        Ok(Lexicon::from_terms(terms))
    }
}

pub fn fetch_annotations(endpoint: &str, documents: &[Document]) -> Result<Lexicon> {
    AnnotatorClient::new(endpoint).lexicon_for(documents)
}
