//! Per-topic collection statistics, tf-idf vectors and averaged embeddings.
//!
//! Sparse vectors are kept sorted by term so every reduction runs in a fixed
//! order and results are bit-for-bit reproducible.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::corpus_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::textproc::TermCounts;

/// Statistics of one topic's candidate collection.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    num_docs: usize,
    doc_freq: HashMap<String, u32>,
    collection_counts: HashMap<String, u64>,
    total_tokens: u64,
    doc_lengths: Vec<u64>,
    avg_doc_length: f64,
}

/// Builds statistics over the candidate set. `doc_lengths` follows input order.
pub fn build_stats<'a, I>(candidates: I) -> Result<CollectionStats>
where
    I: IntoIterator<Item = &'a TermCounts>,
{
    let mut doc_freq: HashMap<String, u32> = HashMap::new();
    let mut collection_counts: HashMap<String, u64> = HashMap::new();
    let mut doc_lengths = Vec::new();
    for doc in candidates {
        for (t, c) in doc.iter() {
            match doc_freq.get_mut(t) {
                Some(df) => {
                    *df += 1;
                    *collection_counts.get_mut(t).expect("same keys") += u64::from(c);
                }
                None => {
                    doc_freq.insert(t.to_string(), 1);
                    collection_counts.insert(t.to_string(), u64::from(c));
                }
            }
        }
        doc_lengths.push(doc.length());
    }
    if doc_lengths.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let total_tokens: u64 = doc_lengths.iter().sum();
    Ok(CollectionStats {
        num_docs: doc_lengths.len(),
        avg_doc_length: total_tokens as f64 / doc_lengths.len() as f64,
        doc_freq,
        collection_counts,
        total_tokens,
        doc_lengths,
    })
}

impl CollectionStats {
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn collection_count(&self, term: &str) -> u64 {
        self.collection_counts.get(term).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_lengths(&self) -> &[u64] {
        &self.doc_lengths
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.doc_freq.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.doc_freq.keys().map(String::as_str)
    }

    /// Maximum-likelihood background probability `p(t|C)`.
    pub fn p_collection(&self, term: &str) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.collection_count(term) as f64 / self.total_tokens as f64
    }

    /// `ln(N / df)`, or `None` for terms outside the collection.
    pub fn idf(&self, term: &str) -> Option<f64> {
        match self.doc_freq(term) {
            0 => None,
            df => Some((self.num_docs as f64 / f64::from(df)).ln()),
        }
    }
}

/// Sparse tf-idf vector, sorted by term, without zero entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdfVector {
    weights: Vec<(String, f64)>,
    norm: f64,
}

impl TfIdfVector {
    /// Builds a vector from arbitrary weights; zero weights are dropped.
    pub fn from_weights<I, S>(weights: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut w: Vec<(String, f64)> = weights
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(t, v)| (t.into(), v))
            .collect();
        w.sort_by(|a, b| a.0.cmp(&b.0));
        w.dedup_by(|a, b| a.0 == b.0);
        let norm = w.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        Self { weights: w, norm }
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map_or(0.0, |i| self.weights[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_weights(self.iter().map(|(t, w)| (t.to_string(), w * k)))
    }
}

/// Raw count times `ln(N/df)`; terms unseen in the collection or present in
/// every document are left out.
pub fn tfidf(doc: &TermCounts, stats: &CollectionStats) -> TfIdfVector {
    let mut weights = Vec::with_capacity(doc.num_terms());
    for (t, c) in doc.iter() {
        if let Some(idf) = stats.idf(t) {
            let w = f64::from(c) * idf;
            if w != 0.0 {
                weights.push((t.to_string(), w));
            }
        }
    }
    let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    TfIdfVector { weights, norm }
}

fn sparse_dot(u: &TfIdfVector, v: &TfIdfVector) -> f64 {
    let (a, b) = (&u.weights, &v.weights);
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(u: &TfIdfVector, v: &TfIdfVector) -> f64 {
    if u.norm == 0.0 || v.norm == 0.0 {
        return 0.0;
    }
    (sparse_dot(u, v) / (u.norm * v.norm)).clamp(-1.0, 1.0)
}

/// Mean embedding of a token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct AesVector {
    pub values: Vec<f64>,
    /// Number of token occurrences found in the table.
    pub found: usize,
}

impl AesVector {
    /// True when no token had an embedding and the vector is all zeros.
    pub fn is_oov(&self) -> bool {
        self.found == 0
    }
}

/// Averages embeddings over token occurrences, looking up the raw token first
/// and then its lowercase form.
pub fn aes_vector<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> AesVector {
    let mut sum = vec![0.0; table.dimension()];
    let mut found = 0usize;
    for tok in tokens {
        if let Some(v) = table.lookup(tok.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    if found > 0 {
        let n = found as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    AesVector { values: sum, found }
}

pub fn dense_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}
