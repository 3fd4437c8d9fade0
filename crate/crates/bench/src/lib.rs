//! Fixtures shared by the benchmarks.

use sdr_core::prepared::prepare_topic;
use sdr_core::synthetic::{generate, SyntheticSpec};
use sdr_core::{PipelineConfig, PreparedTopic, Representation, Resources, Variant};

/// One prepared topic with `candidates` documents.
pub fn topic(candidates: usize, repr: Representation) -> PreparedTopic {
    let c = generate(&SyntheticSpec {
        topics: 1,
        docs: (candidates, candidates),
        relevant: (20, 20),
        vocab_size: 6000,
        doc_len: (120, 260),
        background_share: 0.6,
        seed: 42,
    });
    let pipeline = PipelineConfig::new(Variant::Ours);
    let res = Resources {
        corpus: &c.corpus,
        pipeline: &pipeline,
        lexicon: Some(&c.lexicon),
        embeddings: None,
    };
    prepare_topic(&c.topics[0], repr, res).expect("synthetic topic prepares")
}
