//! Seed-driven document ranking for systematic-review screening
//! prioritisation, with the experiment and evaluation harness around it.

pub mod commands;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod output;
pub mod prepared;
pub mod scoring;
pub mod seeding;
pub mod synthetic;
pub mod textproc;
pub mod vectorspace;

#[cfg(test)]
mod test_oracle;

pub use corpus_io::{
    Corpus, Document, EmbeddingTable, Lexicon, RankedRun, RunEntry, Topic, TopicSet,
};
pub use error::{Error, Result};
pub use evaluation::{MetricSet, Qrels, TTest};
pub use experiments::{ExperimentReport, SeedGroup};
pub use prepared::{PreparedDoc, PreparedTopic, Resources};
pub use scoring::{Method, RankOptions, ScoringParams, TermWeighting};
pub use textproc::{PipelineConfig, Representation, TermCounts, Variant};
pub use vectorspace::{CollectionStats, TfIdfVector};
