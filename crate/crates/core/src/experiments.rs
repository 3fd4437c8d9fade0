//! Leave-one-out single-seed runs, sliding-window multi-seed runs, the
//! oracle single-vs-multi comparison and the two observation analyses.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::{Corpus, Document, RankedRun};
use crate::error::{Error, Result};
use crate::evaluation::{average_precision, evaluate, restrict_qrels, MetricSet, Qrels};
use crate::prepared::PreparedTopic;
use crate::scoring::{rank, Method, RankOptions, ScoringParams};
use crate::seeding::{rng_from, stable_hash};
use crate::vectorspace::{build_stats, cosine, tfidf, TfIdfVector};

/// Metrics for one (topic, seed or window) unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub topic_id: String,
    pub unit: String,
    pub metrics: MetricSet,
}

/// Per-unit metrics with per-topic and cross-topic means.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<MetricRow>,
    pub per_topic: Vec<(String, MetricSet)>,
    /// Unweighted mean of the per-topic means.
    pub overall: MetricSet,
    /// Units in which a metric was undefined and therefore left out of the means.
    pub excluded: BTreeMap<String, usize>,
}

fn mean_metrics<'a>(sets: impl IntoIterator<Item = &'a MetricSet>) -> MetricSet {
    let mut sums: indexmap::IndexMap<String, (f64, usize)> = indexmap::IndexMap::new();
    for set in sets {
        for (name, v) in set.iter() {
            let e = sums.entry(name.to_string()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut out = MetricSet::default();
    for (name, (sum, n)) in sums {
        out.insert(name, sum / n as f64);
    }
    out
}

impl ExperimentReport {
    /// Aggregates rows; topics appear in order of first occurrence.
    pub fn from_rows(rows: Vec<MetricRow>) -> Self {
        let mut by_topic: indexmap::IndexMap<&str, Vec<&MetricSet>> = indexmap::IndexMap::new();
        for r in &rows {
            by_topic
                .entry(r.topic_id.as_str())
                .or_default()
                .push(&r.metrics);
        }
        let per_topic: Vec<(String, MetricSet)> = by_topic
            .iter()
            .map(|(t, sets)| (t.to_string(), mean_metrics(sets.iter().copied())))
            .collect();
        let overall = mean_metrics(per_topic.iter().map(|(_, m)| m));

        let mut excluded = BTreeMap::new();
        for name in overall.iter().map(|(n, _)| n) {
            let missing = rows
                .iter()
                .filter(|r| r.metrics.get(name).is_none())
                .count();
            if missing > 0 {
                excluded.insert(name.to_string(), missing);
            }
        }
        Self {
            rows,
            per_topic,
            overall,
            excluded,
        }
    }

    pub fn merge(reports: impl IntoIterator<Item = ExperimentReport>) -> Self {
        Self::from_rows(reports.into_iter().flat_map(|r| r.rows).collect())
    }

    pub fn topic_mean(&self, topic_id: &str, metric: &str) -> Option<f64> {
        self.per_topic
            .iter()
            .find(|(t, _)| t == topic_id)
            .and_then(|(_, m)| m.get(metric))
    }
}

/// Evaluates a run against the judgments of the documents it ranks, so seeds
/// removed from the candidate pool do not count as missed relevant studies.
pub fn evaluate_run(run: &RankedRun, judgments: &Qrels, cutoffs: &[usize]) -> Result<MetricSet> {
    let qrels = restrict_qrels(judgments, run.doc_ids());
    let ranked: Vec<&str> = run.doc_ids().collect();
    evaluate(&ranked, &qrels, cutoffs)
}

fn run_ap(run: &RankedRun, judgments: &Qrels) -> f64 {
    let qrels = restrict_qrels(judgments, run.doc_ids());
    let ranked: Vec<&str> = run.doc_ids().collect();
    average_precision(&ranked, &qrels).unwrap_or(0.0)
}

/// Run tag: `<method>-<repr>` plus a unit suffix.
pub fn run_tag(prefix: &str, method: Method, topic: &PreparedTopic, unit: &str) -> String {
    let base = format!("{}-{}", method.slug(), topic.repr);
    let base = if prefix.is_empty() {
        base
    } else {
        format!("{prefix}-{base}")
    };
    format!("{base}-{unit}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed_id: String,
    pub run: RankedRun,
}

#[derive(Debug, Clone)]
pub struct LoocvOutcome {
    pub report: ExperimentReport,
    pub runs: Vec<SeedRun>,
}

/// Uses every relevant study of the topic once as the seed.
pub fn loocv_single(
    topic: &PreparedTopic,
    method: Method,
    params: &ScoringParams,
    options: &RankOptions<'_>,
    cutoffs: &[usize],
) -> Result<LoocvOutcome> {
    let seeds = topic.topic.relevant();
    if seeds.len() < 2 {
        return Err(Error::InsufficientSeeds {
            topic: topic.topic_id().to_string(),
            found: seeds.len(),
            required: 2,
        });
    }
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let tag = run_tag("", method, topic, seed);
            let run = rank(topic, &[seed], method, params, options, &tag)?;
            let metrics = evaluate_run(&run, &topic.topic.judgments, cutoffs)?;
            Ok((
                SeedRun {
                    seed_id: seed.to_string(),
                    run,
                },
                MetricRow {
                    topic_id: topic.topic_id().to_string(),
                    unit: seed.to_string(),
                    metrics,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (runs, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(LoocvOutcome {
        report: ExperimentReport::from_rows(rows),
        runs,
    })
}

/// A window of consecutive seed studies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedGroup {
    pub topic_id: String,
    pub member_ids: Vec<String>,
    pub window_index: usize,
}

impl SeedGroup {
    pub fn unit(&self) -> String {
        format!("w{}", self.window_index)
    }

    pub fn members(&self) -> Vec<&str> {
        self.member_ids.iter().map(String::as_str).collect()
    }
}

/// `max(2, ceil(fraction * n))`.
pub fn group_width(n: usize, fraction: f64) -> usize {
    // The epsilon keeps products such as 0.2 * 15 from rounding up past 3.
    let w = (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    w.max(2)
}

/// Sliding windows of width `group_width` with step 1 over the seed pool.
pub fn make_groups(topic_id: &str, seed_pool: &[&str], fraction: f64) -> Result<Vec<SeedGroup>> {
    let n = seed_pool.len();
    if n < 3 {
        return Err(Error::InsufficientSeeds {
            topic: topic_id.to_string(),
            found: n,
            required: 3,
        });
    }
    let w = group_width(n, fraction).min(n);
    Ok(seed_pool
        .windows(w)
        .enumerate()
        .map(|(i, win)| SeedGroup {
            topic_id: topic_id.to_string(),
            member_ids: win.iter().map(|s| s.to_string()).collect(),
            window_index: i,
        })
        .collect())
}

/// Joins the members' texts, in member order, into one synthetic document.
pub fn concat_group(group: &SeedGroup, corpus: &Corpus) -> Result<Document> {
    let texts = group
        .member_ids
        .iter()
        .map(|id| {
            corpus
                .get(id)
                .map(Document::text)
                .ok_or_else(|| Error::Contract(format!("group member `{id}` is not in the corpus")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Document::new(
        format!("{}#{}", group.topic_id, group.unit()),
        texts.join(" "),
        "",
    ))
}

/// Ranks the topic's candidates (minus all group members) against the
/// concatenated group. Groups of two or more seeds under-sample the term
/// partitions.
pub fn multi_sdr(
    topic: &PreparedTopic,
    group: &SeedGroup,
    method: Method,
    params: &ScoringParams,
    options: &RankOptions<'_>,
) -> Result<RankedRun> {
    let opts = RankOptions {
        undersample: group.member_ids.len() > 1,
        ..*options
    };
    let tag = run_tag("multi", method, topic, &group.unit());
    rank(topic, &group.members(), method, params, &opts, &tag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleChoice {
    pub seed_id: String,
    pub ap: f64,
    pub run: RankedRun,
}

/// Picks the member whose single-seed run has the highest AP (ties go to the
/// smallest doc_id), removes the other members from that run and compacts ranks.
pub fn oracle_single(
    topic: &PreparedTopic,
    group: &SeedGroup,
    single_runs: &[SeedRun],
) -> Result<OracleChoice> {
    let by_seed: HashMap<&str, &RankedRun> = single_runs
        .iter()
        .map(|r| (r.seed_id.as_str(), &r.run))
        .collect();
    let mut best: Option<(&str, f64)> = None;
    for id in &group.member_ids {
        let run = by_seed.get(id.as_str()).ok_or_else(|| {
            Error::Contract(format!("no single-seed run for group member `{id}`"))
        })?;
        let ap = run_ap(run, &topic.topic.judgments);
        let better = match best {
            None => true,
            Some((bid, bap)) => ap > bap || (ap == bap && id.as_str() < bid),
        };
        if better {
            best = Some((id.as_str(), ap));
        }
    }
    let (seed_id, ap) = best.ok_or_else(|| Error::Contract("empty seed group".into()))?;
    let others: Vec<&str> = group
        .member_ids
        .iter()
        .map(String::as_str)
        .filter(|&m| m != seed_id)
        .collect();
    let tag = format!("oracle-{}", by_seed[seed_id].tag);
    let run = by_seed[seed_id].without(&others).retag(&tag);
    Ok(OracleChoice {
        seed_id: seed_id.to_string(),
        ap,
        run,
    })
}

#[derive(Debug, Clone)]
pub struct MultiOutcome {
    pub groups: Vec<SeedGroup>,
    pub multi_runs: Vec<RankedRun>,
    pub oracle: Vec<OracleChoice>,
    pub multi_report: ExperimentReport,
    pub oracle_report: ExperimentReport,
}

/// Multi-seed runs for every window of a topic, paired with oracle-selected
/// single-seed runs over the same candidate set.
pub fn run_multi(
    topic: &PreparedTopic,
    method: Method,
    params: &ScoringParams,
    options: &RankOptions<'_>,
    fraction: f64,
    single: &[SeedRun],
    cutoffs: &[usize],
) -> Result<MultiOutcome> {
    let pool = topic.topic.relevant();
    let groups = make_groups(topic.topic_id(), &pool, fraction)?;
    let results = groups
        .par_iter()
        .map(|g| {
            let multi = multi_sdr(topic, g, method, params, options)?;
            let oracle = oracle_single(topic, g, single)?;
            let row = |run: &RankedRun| -> Result<MetricRow> {
                Ok(MetricRow {
                    topic_id: topic.topic_id().to_string(),
                    unit: g.unit(),
                    metrics: evaluate_run(run, &topic.topic.judgments, cutoffs)?,
                })
            };
            let multi_row = row(&multi)?;
            let oracle_row = row(&oracle.run)?;
            Ok((multi, oracle, multi_row, oracle_row))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut multi_runs = Vec::new();
    let mut oracle = Vec::new();
    let mut multi_rows = Vec::new();
    let mut oracle_rows = Vec::new();
    for (m, o, mr, or) in results {
        multi_runs.push(m);
        oracle.push(o);
        multi_rows.push(mr);
        oracle_rows.push(or);
    }
    Ok(MultiOutcome {
        groups,
        multi_runs,
        oracle,
        multi_report: ExperimentReport::from_rows(multi_rows),
        oracle_report: ExperimentReport::from_rows(oracle_rows),
    })
}

/// Mean cosine over all unordered pairs.
pub fn mean_pairwise_cosine(vectors: &[&TfIdfVector]) -> Option<f64> {
    let n = vectors.len();
    if n < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += cosine(vectors[i], vectors[j]);
        }
    }
    Some(sum / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntraSimilarity {
    pub rel_mean: f64,
    pub irrel_mean: f64,
}

/// Mean pairwise tf-idf cosine among relevant studies, against the same
/// quantity for equally sized random samples of irrelevant studies averaged
/// over `repetitions` draws.
pub fn intra_similarity(
    topic: &PreparedTopic,
    repetitions: usize,
    rng_seed: u64,
) -> Result<IntraSimilarity> {
    let relevant = topic.topic.relevant();
    let irrelevant = topic.topic.irrelevant();
    let topic_id = topic.topic_id().to_string();
    if relevant.len() < 2 {
        return Err(Error::InsufficientDocuments {
            topic: topic_id,
            side: "relevant",
            found: relevant.len(),
            required: 2,
        });
    }
    if irrelevant.len() < relevant.len() {
        return Err(Error::InsufficientDocuments {
            topic: topic_id,
            side: "irrelevant",
            found: irrelevant.len(),
            required: relevant.len(),
        });
    }
    if repetitions == 0 {
        return Err(Error::config("repetitions", "must be positive"));
    }
    let stats = build_stats(topic.docs.iter().map(|d| &d.counts))?;
    let vector =
        |id: &str| -> Result<TfIdfVector> { Ok(tfidf(&topic.require(id)?.counts, &stats)) };
    let rel_vecs = relevant
        .iter()
        .map(|id| vector(id))
        .collect::<Result<Vec<_>>>()?;
    let irrel_vecs = irrelevant
        .iter()
        .map(|id| vector(id))
        .collect::<Result<Vec<_>>>()?;
    let rel_mean = mean_pairwise_cosine(&rel_vecs.iter().collect::<Vec<_>>()).expect("two or more");

    let topic_hash = stable_hash(topic.topic_id().as_bytes());
    let mut total = 0.0;
    for rep in 0..repetitions {
        let mut rng = rng_from(&[rng_seed, topic_hash, rep as u64]);
        let mut picked = sample(&mut rng, irrel_vecs.len(), relevant.len()).into_vec();
        picked.sort_unstable();
        let subset: Vec<&TfIdfVector> = picked.iter().map(|&i| &irrel_vecs[i]).collect();
        total += mean_pairwise_cosine(&subset).expect("two or more");
    }
    Ok(IntraSimilarity {
        rel_mean,
        irrel_mean: total / repetitions as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Commonality {
    /// Fraction of relevant studies containing each term.
    pub fractions: BTreeMap<String, f64>,
    /// Term counts over `HISTOGRAM_BINS` equal-width bins of the fraction;
    /// the last bin is closed.
    pub histogram: Vec<HistogramBin>,
}

pub const HISTOGRAM_BINS: usize = 10;

pub fn term_commonality(topic: &PreparedTopic) -> Result<Commonality> {
    let relevant = topic.topic.relevant();
    if relevant.is_empty() {
        return Err(Error::InsufficientDocuments {
            topic: topic.topic_id().to_string(),
            side: "relevant",
            found: 0,
            required: 1,
        });
    }
    let mut doc_counts: BTreeMap<String, usize> = BTreeMap::new();
    for id in &relevant {
        for t in topic.require(id)?.counts.terms() {
            *doc_counts.entry(t.to_string()).or_default() += 1;
        }
    }
    let n = relevant.len() as f64;
    let fractions: BTreeMap<String, f64> = doc_counts
        .into_iter()
        .map(|(t, c)| (t, c as f64 / n))
        .collect();
    let mut histogram: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            lo: i as f64 / HISTOGRAM_BINS as f64,
            hi: (i + 1) as f64 / HISTOGRAM_BINS as f64,
            count: 0,
        })
        .collect();
    for &f in fractions.values() {
        let bin = ((f * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin].count += 1;
    }
    Ok(Commonality {
        fractions,
        histogram,
    })
}
