//! Random collections for tests, acceptance checks and benchmarks.
//!
//! Each topic splits a shuffled vocabulary into a relevant pool, an
//! irrelevant pool and a shared background. Relevant documents draw from the
//! relevant pool, irrelevant ones from the irrelevant pool, and both fall back
//! to the background with probability `background_share`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus_io::{Corpus, Document, Lexicon, Topic};
use crate::seeding::rng_from;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub topics: usize,
    /// Inclusive range of candidates per topic.
    pub docs: (usize, usize),
    /// Inclusive range of relevant candidates per topic.
    pub relevant: (usize, usize),
    pub vocab_size: usize,
    /// Inclusive range of tokens per document.
    pub doc_len: (usize, usize),
    pub background_share: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            topics: 5,
            docs: (50, 100),
            relevant: (3, 8),
            vocab_size: 500,
            doc_len: (40, 120),
            background_share: 0.5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub corpus: Corpus,
    pub topics: Vec<Topic>,
    /// Every other vocabulary term, so BOC is a strict subset of BOW.
    pub lexicon: Lexicon,
    pub vocabulary: Vec<String>,
}

fn term(i: usize) -> String {
    format!("w{i}")
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|r| 1.0 / (r + 1) as f64)).expect("non-empty pool")
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticCollection {
    assert!(spec.vocab_size >= 6, "vocabulary too small");
    assert!(spec.docs.0 > spec.relevant.1, "need irrelevant candidates");
    let vocabulary: Vec<String> = (0..spec.vocab_size).map(term).collect();
    let lexicon = Lexicon::from_terms(vocabulary.iter().step_by(2));
    let mut corpus = Corpus::new();
    let mut topics = Vec::with_capacity(spec.topics);

    for t in 0..spec.topics {
        let mut rng = rng_from(&[spec.seed, t as u64]);
        let mut order: Vec<usize> = (0..spec.vocab_size).collect();
        order.shuffle(&mut rng);
        let third = spec.vocab_size / 3;
        let rel_pool = &order[..third];
        let irr_pool = &order[third..2 * third];
        let bg_pool = &order[2 * third..];
        let (rel_w, irr_w, bg_w) = (
            zipf(rel_pool.len()),
            zipf(irr_pool.len()),
            zipf(bg_pool.len()),
        );

        let n = rng.gen_range(spec.docs.0..=spec.docs.1);
        let r = rng.gen_range(spec.relevant.0..=spec.relevant.1);
        let topic_id = format!("T{t:03}");
        let mut topic = Topic::new(topic_id.clone());
        // Relevant documents are interleaved at random positions.
        let mut labels: Vec<bool> = (0..n).map(|i| i < r).collect();
        labels.shuffle(&mut rng);

        for (i, &relevant) in labels.iter().enumerate() {
            let (pool, weights) = if relevant {
                (rel_pool, &rel_w)
            } else {
                (irr_pool, &irr_w)
            };
            let len = rng.gen_range(spec.doc_len.0..=spec.doc_len.1);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    if rng.gen_bool(spec.background_share) {
                        term(bg_pool[bg_w.sample(&mut rng)])
                    } else {
                        term(pool[weights.sample(&mut rng)])
                    }
                })
                .collect();
            let split = tokens.len().min(8);
            let doc_id = format!("{topic_id}-D{i:05}");
            corpus.insert(
                doc_id.clone(),
                Document::new(
                    doc_id.clone(),
                    tokens[..split].join(" "),
                    tokens[split..].join(" "),
                ),
            );
            topic.candidate_ids.push(doc_id.clone());
            topic.judgments.insert(doc_id, u32::from(relevant));
        }
        topics.push(topic);
    }
    SyntheticCollection {
        corpus,
        topics,
        lexicon,
        vocabulary,
    }
}

impl SyntheticCollection {
    /// Topic file text in `topic_id doc_id ...` form.
    pub fn topics_text(&self) -> String {
        self.topics
            .iter()
            .map(|t| format!("{} {}\n", t.topic_id, t.candidate_ids.join(" ")))
            .collect()
    }

    pub fn qrels_text(&self) -> String {
        let mut out = String::new();
        for t in &self.topics {
            for (d, g) in &t.judgments {
                out.push_str(&format!("{} 0 {} {}\n", t.topic_id, d, g));
            }
        }
        out
    }

    /// JSON lines sorted by doc_id.
    pub fn corpus_jsonl(&self) -> String {
        let mut ids: Vec<&String> = self.corpus.keys().collect();
        ids.sort();
        ids.iter()
            .map(|id| serde_json::to_string(&self.corpus[*id]).expect("serialisable") + "\n")
            .collect()
    }

    pub fn lexicon_text(&self) -> String {
        self.lexicon.iter().map(|t| format!("{t}\n")).collect()
    }

    /// Writes `corpus.jsonl`, `topics.txt`, `qrels.txt` and `lexicon.txt`.
    pub fn write_to(&self, dir: &std::path::Path) -> crate::Result<()> {
        use crate::output::write_atomic;
        write_atomic(dir.join("corpus.jsonl"), self.corpus_jsonl().as_bytes())?;
        write_atomic(dir.join("topics.txt"), self.topics_text().as_bytes())?;
        write_atomic(dir.join("qrels.txt"), self.qrels_text().as_bytes())?;
        write_atomic(dir.join("lexicon.txt"), self.lexicon_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::{parse_corpus, parse_topics};
    use std::path::Path;

    #[test]
    fn shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.corpus_jsonl(), b.corpus_jsonl());
        assert_eq!(a.topics.len(), 5);
        for t in &a.topics {
            assert!((50..=100).contains(&t.candidate_ids.len()));
            assert!((3..=8).contains(&t.num_relevant()));
        }
        assert!(a.lexicon.len() < a.vocabulary.len());
    }

    #[test]
    fn round_trips_through_loaders() {
        let c = generate(&SyntheticSpec::default());
        let corpus = parse_corpus(&c.corpus_jsonl(), Path::new("c")).unwrap();
        assert_eq!(corpus, c.corpus);
        let set = parse_topics(
            &c.topics_text(),
            Path::new("t"),
            &c.qrels_text(),
            Path::new("q"),
        )
        .unwrap();
        assert_eq!(set.topics, c.topics);
        assert_eq!(set.added_from_qrels, 0);
    }
}
