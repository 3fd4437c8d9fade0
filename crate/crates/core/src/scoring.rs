//! Ranking functions: Jelinek-Mercer query likelihood, seed-driven term
//! weighting, BM25, averaged-embedding similarity and score interpolation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{EmbeddingTable, RankedRun};
use crate::error::{Error, Result};
use crate::prepared::{PreparedDoc, PreparedTopic};
use crate::seeding::{rng_from, stable_hash};
use crate::textproc::TermCounts;
use crate::vectorspace::{
    aes_vector, build_stats, cosine, dense_cosine, tfidf, AesVector, CollectionStats, TfIdfVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    /// Jelinek-Mercer smoothing, in (0, 1).
    pub lambda: f64,
    /// Weight of the embedding score in SDR+AES interpolation, in [0, 1].
    pub alpha: f64,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    /// Partition size cap when under-sampling is enabled.
    pub undersample_cap: usize,
    pub rng_seed: u64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            lambda: 0.7,
            alpha: 0.3,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            undersample_cap: 50,
            rng_seed: 0,
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::config("lambda", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        if self.bm25_k1.is_nan() || self.bm25_k1 < 0.0 {
            return Err(Error::config("bm25_k1", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.bm25_b) {
            return Err(Error::config("bm25_b", "must lie in [0, 1]"));
        }
        if self.undersample_cap == 0 {
            return Err(Error::config("undersample_cap", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "bm25")]
    Bm25,
    #[serde(rename = "qlm")]
    Qlm,
    #[serde(rename = "sdr")]
    Sdr,
    #[serde(rename = "aes")]
    Aes,
    #[serde(rename = "sdr+aes", alias = "sdr-aes")]
    SdrAes,
}

impl Method {
    pub fn needs_embeddings(self) -> bool {
        matches!(self, Method::Aes | Method::SdrAes)
    }

    /// Short name used in file names (no `+`).
    pub fn slug(self) -> &'static str {
        match self {
            Method::Bm25 => "bm25",
            Method::Qlm => "qlm",
            Method::Sdr => "sdr",
            Method::Aes => "aes",
            Method::SdrAes => "sdr-aes",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SdrAes => "sdr+aes",
            m => m.slug(),
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(Method::Bm25),
            "qlm" => Ok(Method::Qlm),
            "sdr" => Ok(Method::Sdr),
            "aes" => Ok(Method::Aes),
            "sdr+aes" | "sdr-aes" => Ok(Method::SdrAes),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// `(doc_id, score)` pairs sorted by score descending, ties by doc_id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    entries: Vec<(String, f64)>,
}

impl ScoredList {
    pub fn new(mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }

    pub fn score_of(&self, doc_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(d, _)| d == doc_id)
            .map(|&(_, s)| s)
    }

    pub fn into_run(self, topic_id: &str, tag: &str) -> RankedRun {
        RankedRun::from_scored(
            topic_id,
            tag,
            self.entries.iter().map(|(d, s)| (d.as_str(), *s)),
        )
    }
}

/// Seed or candidate in both count and tf-idf form.
#[derive(Debug, Clone, Copy)]
pub struct WeightedDoc<'a> {
    pub counts: &'a TermCounts,
    pub vector: &'a TfIdfVector,
}

/// Mean cosine of `subset` to `seed`; 0 for an empty subset.
pub fn gamma(subset: &[&TfIdfVector], seed: &TfIdfVector) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let sum: f64 = subset.iter().map(|d| cosine(d, seed)).sum();
    sum / subset.len() as f64
}

/// Under-sampling of the term partitions used by `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub cap: usize,
    /// Base seed; each term mixes in its index among the seed's terms.
    pub seed: u64,
}

fn ratio_weight(with: f64, without: f64) -> f64 {
    if with == 0.0 {
        0.0
    } else if without == 0.0 {
        std::f64::consts::LN_2
    } else {
        (1.0 + with / without).ln()
    }
}

/// Mean of `cosines[i]` over `members`, optionally under-sampled to `cap`
/// indices. Summation runs in ascending index order.
fn partition_mean(
    cosines: &[f64],
    members: &[usize],
    cap: Option<usize>,
    rng: &mut impl rand::Rng,
) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    match cap {
        Some(cap) if members.len() > cap => {
            let mut picked: Vec<usize> = sample(rng, members.len(), cap).into_vec();
            picked.sort_unstable();
            let sum: f64 = picked.iter().map(|&i| cosines[members[i]]).sum();
            sum / cap as f64
        }
        _ => {
            let sum: f64 = members.iter().map(|&i| cosines[i]).sum();
            sum / members.len() as f64
        }
    }
}

fn phi_from_partitions(
    cosines: &[f64],
    with: &[usize],
    without: &[usize],
    sampling: Option<Sampling>,
    term_index: usize,
) -> f64 {
    let mut rng = rng_from(&[sampling.map_or(0, |s| s.seed), term_index as u64]);
    let cap = sampling.map(|s| s.cap);
    let g_with = partition_mean(cosines, with, cap, &mut rng);
    let g_without = partition_mean(cosines, without, cap, &mut rng);
    ratio_weight(g_with, g_without)
}

/// Weight of one seed term: `ln(1 + γ(D_t)/γ(D_¬t))` over the candidates that
/// do and do not contain it. A zero `γ(D_t)` gives 0; otherwise a zero
/// `γ(D_¬t)` gives `ln 2`.
pub fn phi(
    term: &str,
    seed: WeightedDoc<'_>,
    candidates: &[WeightedDoc<'_>],
    sampling: Option<Sampling>,
) -> Result<f64> {
    let term_index = seed
        .counts
        .terms()
        .position(|t| t == term)
        .ok_or_else(|| Error::Contract(format!("term `{term}` does not occur in the seed")))?;
    let cosines: Vec<f64> = candidates
        .iter()
        .map(|c| cosine(c.vector, seed.vector))
        .collect();
    let (with, without): (Vec<usize>, Vec<usize>) =
        (0..candidates.len()).partition(|&i| candidates[i].counts.contains(term));
    Ok(phi_from_partitions(
        &cosines, &with, &without, sampling, term_index,
    ))
}

pub type TermWeights = BTreeMap<String, f64>;

/// `phi` for every seed term in one pass over the candidates.
pub fn term_weights(
    seed: WeightedDoc<'_>,
    candidates: &[WeightedDoc<'_>],
    sampling: Option<Sampling>,
) -> TermWeights {
    let seed_terms: Vec<&str> = seed.counts.terms().collect();
    let cosines: Vec<f64> = candidates
        .iter()
        .map(|c| cosine(c.vector, seed.vector))
        .collect();
    let mut with: Vec<Vec<usize>> = vec![Vec::new(); seed_terms.len()];
    let mut without: Vec<Vec<usize>> = vec![Vec::new(); seed_terms.len()];
    for (j, cand) in candidates.iter().enumerate() {
        let mut cand_terms = cand.counts.terms().peekable();
        for (i, &t) in seed_terms.iter().enumerate() {
            while cand_terms.next_if(|&c| c < t).is_some() {}
            if cand_terms.peek() == Some(&t) {
                with[i].push(j);
            } else {
                without[i].push(j);
            }
        }
    }
    seed_terms
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (
                t.to_string(),
                phi_from_partitions(&cosines, &with[i], &without[i], sampling, i),
            )
        })
        .collect()
}

/// Visits `(term, c(t, seed), c(t, cand))` for terms shared by both, in term order.
fn shared_terms<'a>(
    seed: &'a TermCounts,
    cand: &'a TermCounts,
) -> impl Iterator<Item = (&'a str, u32, u32)> + 'a {
    let mut cand_iter = cand.iter().peekable();
    seed.iter().filter_map(move |(t, cs)| {
        while cand_iter.next_if(|&(c, _)| c < t).is_some() {}
        match cand_iter.peek() {
            Some(&(c, cc)) if c == t => Some((t, cs, cc)),
            _ => None,
        }
    })
}

fn qlm_addend(seed_count: u32, cand_count: u32, cand_len: u64, p_c: f64, lambda: f64) -> f64 {
    let ratio = (1.0 - lambda) / lambda;
    f64::from(seed_count) * (1.0 + ratio * f64::from(cand_count) / (cand_len as f64 * p_c)).ln()
}

fn weighted_qlm(
    seed: &TermCounts,
    cand: &TermCounts,
    stats: &CollectionStats,
    lambda: f64,
    mut weight: impl FnMut(&str) -> Result<f64>,
) -> Result<f64> {
    let mut score = 0.0;
    for (t, cs, cc) in shared_terms(seed, cand) {
        let p_c = stats.p_collection(t);
        if p_c == 0.0 {
            return Err(Error::Contract(format!(
                "term `{t}` of a candidate is missing from the collection statistics"
            )));
        }
        score += weight(t)? * qlm_addend(cs, cc, cand.length(), p_c, lambda);
    }
    Ok(score)
}

/// Jelinek-Mercer query likelihood with the seed as query (rank-equivalent form).
pub fn qlm_score(
    seed: &TermCounts,
    cand: &TermCounts,
    stats: &CollectionStats,
    params: &ScoringParams,
) -> Result<f64> {
    weighted_qlm(seed, cand, stats, params.lambda, |_| Ok(1.0))
}

/// Query likelihood with each shared term's addend scaled by its seed weight.
pub fn sdr_score(
    seed: &TermCounts,
    cand: &TermCounts,
    stats: &CollectionStats,
    params: &ScoringParams,
    weights: &TermWeights,
) -> Result<f64> {
    weighted_qlm(seed, cand, stats, params.lambda, |t| {
        weights
            .get(t)
            .copied()
            .ok_or_else(|| Error::Contract(format!("no weight for shared term `{t}`")))
    })
}

/// Okapi BM25 with the non-negative idf; seed terms act as query terms.
pub fn bm25_score(
    query: &TermCounts,
    cand: &TermCounts,
    stats: &CollectionStats,
    params: &ScoringParams,
) -> f64 {
    let n = stats.num_docs() as f64;
    let (k1, b) = (params.bm25_k1, params.bm25_b);
    let len_norm = if stats.avg_doc_length() > 0.0 {
        cand.length() as f64 / stats.avg_doc_length()
    } else {
        1.0
    };
    shared_terms(query, cand)
        .map(|(t, _, tf)| {
            let df = f64::from(stats.doc_freq(t));
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let tf = f64::from(tf);
            idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len_norm))
        })
        .sum()
}

/// Cosine between the averaged embeddings of two token sequences.
pub fn aes_score<S: AsRef<str>>(
    seed_tokens: &[S],
    cand_tokens: &[S],
    table: &EmbeddingTable,
) -> f64 {
    aes_similarity(
        &aes_vector(seed_tokens, table),
        &aes_vector(cand_tokens, table),
    )
}

pub fn aes_similarity(seed: &AesVector, cand: &AesVector) -> f64 {
    if seed.is_oov() || cand.is_oov() {
        return 0.0;
    }
    dense_cosine(&seed.values, &cand.values)
}

/// Maps scores to [0, 1]; a constant list maps to all zeros.
pub fn minmax(scores: &ScoredList) -> Result<ScoredList> {
    let (min, max) = scores
        .entries
        .iter()
        .fold(None, |acc: Option<(f64, f64)>, &(_, s)| match acc {
            None => Some((s, s)),
            Some((lo, hi)) => Some((lo.min(s), hi.max(s))),
        })
        .ok_or_else(|| Error::Contract("cannot normalise an empty score list".into()))?;
    let range = max - min;
    Ok(ScoredList::new(
        scores
            .entries
            .iter()
            .map(|(d, s)| (d.clone(), if range > 0.0 { (s - min) / range } else { 0.0 }))
            .collect(),
    ))
}

/// `(1 - alpha) * sdr + alpha * aes` per document.
pub fn interpolate(sdr: &ScoredList, aes: &ScoredList, alpha: f64) -> Result<ScoredList> {
    if sdr.len() != aes.len() {
        return Err(Error::Contract(
            "interpolated lists differ in length".into(),
        ));
    }
    let aes_scores: std::collections::HashMap<&str, f64> =
        aes.entries.iter().map(|(d, s)| (d.as_str(), *s)).collect();
    let combined = sdr
        .entries
        .iter()
        .map(|(d, s)| {
            let a = aes_scores.get(d.as_str()).ok_or_else(|| {
                Error::Contract(format!("document `{d}` missing from the embedding scores"))
            })?;
            Ok((d.clone(), (1.0 - alpha) * s + alpha * a))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoredList::new(combined))
}

/// How seed terms are weighted inside SDR scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TermWeighting {
    #[default]
    SeedDriven,
    /// Every weight fixed to 1, which reduces SDR to query likelihood.
    Uniform,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RankOptions<'a> {
    pub embeddings: Option<&'a EmbeddingTable>,
    /// Under-sample term partitions to `ScoringParams::undersample_cap`.
    pub undersample: bool,
    pub weighting: TermWeighting,
}

/// The seed query after concatenating one or more seed documents.
#[derive(Debug, Clone)]
pub struct SeedQuery {
    pub ids: Vec<String>,
    pub counts: TermCounts,
    pub tokens: Vec<String>,
}

impl SeedQuery {
    pub fn from_docs(docs: &[&PreparedDoc]) -> Self {
        let mut counts = TermCounts::new();
        let mut tokens = Vec::new();
        for d in docs {
            counts.merge(&d.counts);
            tokens.extend(d.tokens.iter().cloned());
        }
        Self {
            ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
            counts,
            tokens,
        }
    }
}

fn sdr_scores(
    seed: &SeedQuery,
    candidates: &[&PreparedDoc],
    stats: &CollectionStats,
    params: &ScoringParams,
    sampling: Option<Sampling>,
    weighting: TermWeighting,
) -> Result<Vec<f64>> {
    let weights: TermWeights = match weighting {
        TermWeighting::Uniform => seed.counts.terms().map(|t| (t.to_string(), 1.0)).collect(),
        TermWeighting::SeedDriven => {
            let vectors: Vec<TfIdfVector> =
                candidates.iter().map(|c| tfidf(&c.counts, stats)).collect();
            let seed_vector = tfidf(&seed.counts, stats);
            let cands: Vec<WeightedDoc<'_>> = candidates
                .iter()
                .zip(&vectors)
                .map(|(c, v)| WeightedDoc {
                    counts: &c.counts,
                    vector: v,
                })
                .collect();
            let seed_doc = WeightedDoc {
                counts: &seed.counts,
                vector: &seed_vector,
            };
            term_weights(seed_doc, &cands, sampling)
        }
    };
    candidates
        .iter()
        .map(|c| sdr_score(&seed.counts, &c.counts, stats, params, &weights))
        .collect()
}

fn aes_scores(seed: &SeedQuery, candidates: &[&PreparedDoc], table: &EmbeddingTable) -> Vec<f64> {
    let seed_vec = aes_vector(&seed.tokens, table);
    candidates
        .iter()
        .map(|c| match &c.aes {
            Some(v) => aes_similarity(&seed_vec, v),
            None => aes_similarity(&seed_vec, &aes_vector(&c.tokens, table)),
        })
        .collect()
}

fn to_list(candidates: &[&PreparedDoc], scores: Vec<f64>) -> ScoredList {
    ScoredList::new(
        candidates
            .iter()
            .zip(scores)
            .map(|(c, s)| (c.doc_id.clone(), s))
            .collect(),
    )
}

/// Scores candidates against a seed query. Candidates must not contain the seeds.
pub fn score_candidates(
    topic_id: &str,
    seed: &SeedQuery,
    candidates: &[&PreparedDoc],
    method: Method,
    params: &ScoringParams,
    options: &RankOptions<'_>,
) -> Result<ScoredList> {
    if candidates.is_empty() {
        return Err(Error::EmptyTopic(topic_id.to_string()));
    }
    let sampling = options.undersample.then(|| Sampling {
        cap: params.undersample_cap,
        seed: crate::seeding::derive_seed(&[
            params.rng_seed,
            stable_hash(topic_id.as_bytes()),
            stable_hash(seed.ids.join("\u{1f}").as_bytes()),
        ]),
    });
    let table = || {
        options
            .embeddings
            .ok_or_else(|| Error::config("embeddings", format!("method {method} needs embeddings")))
    };
    let stats = || build_stats(candidates.iter().map(|c| &c.counts));

    Ok(match method {
        Method::Bm25 => {
            let stats = stats()?;
            let scores = candidates
                .iter()
                .map(|c| bm25_score(&seed.counts, &c.counts, &stats, params))
                .collect();
            to_list(candidates, scores)
        }
        Method::Qlm => {
            let stats = stats()?;
            let scores = candidates
                .iter()
                .map(|c| qlm_score(&seed.counts, &c.counts, &stats, params))
                .collect::<Result<_>>()?;
            to_list(candidates, scores)
        }
        Method::Sdr => {
            let stats = stats()?;
            let scores = sdr_scores(
                seed,
                candidates,
                &stats,
                params,
                sampling,
                options.weighting,
            )?;
            to_list(candidates, scores)
        }
        Method::Aes => to_list(candidates, aes_scores(seed, candidates, table()?)),
        Method::SdrAes => {
            let table = table()?;
            let stats = stats()?;
            let sdr = sdr_scores(
                seed,
                candidates,
                &stats,
                params,
                sampling,
                options.weighting,
            )?;
            let sdr = minmax(&to_list(candidates, sdr))?;
            let aes = minmax(&to_list(candidates, aes_scores(seed, candidates, table)))?;
            interpolate(&sdr, &aes, params.alpha)?
        }
    })
}

/// Ranks a topic's candidates against one or more seed studies.
///
/// Seeds are concatenated in the given order and removed from the candidate
/// pool before any statistics are computed.
pub fn rank(
    topic: &PreparedTopic,
    seed_ids: &[&str],
    method: Method,
    params: &ScoringParams,
    options: &RankOptions<'_>,
    tag: &str,
) -> Result<RankedRun> {
    if seed_ids.is_empty() {
        return Err(Error::Contract("at least one seed is required".into()));
    }
    let seeds = seed_ids
        .iter()
        .map(|id| topic.require(id))
        .collect::<Result<Vec<_>>>()?;
    let seed = SeedQuery::from_docs(&seeds);
    let candidates: Vec<&PreparedDoc> = topic
        .docs
        .iter()
        .filter(|d| !seed_ids.contains(&d.doc_id.as_str()))
        .collect();
    let list = score_candidates(
        topic.topic_id(),
        &seed,
        &candidates,
        method,
        params,
        options,
    )?;
    Ok(list.into_run(topic.topic_id(), tag))
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::corpus_io::Topic;
    use crate::textproc::Representation;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn counts(pairs: &[(&str, u32)]) -> TermCounts {
        let mut tc = TermCounts::new();
        for &(t, c) in pairs {
            tc.add(t.to_string(), c);
        }
        tc
    }

    fn doc(id: &str, pairs: &[(&str, u32)]) -> PreparedDoc {
        let counts = counts(pairs);
        let tokens = pairs
            .iter()
            .flat_map(|&(t, c)| std::iter::repeat_n(t.to_string(), c as usize))
            .collect();
        PreparedDoc {
            doc_id: id.into(),
            counts,
            tokens,
            aes: None,
        }
    }

    fn topic(docs: Vec<PreparedDoc>) -> PreparedTopic {
        let mut t = Topic::new("T1");
        t.candidate_ids = docs.iter().map(|d| d.doc_id.clone()).collect();
        PreparedTopic::new(t, Representation::Bow, docs)
    }

    #[test]
    fn gamma_cases() {
        let seed = TfIdfVector::from_weights([("a", 1.0)]);
        assert!((gamma(&[&seed], &seed) - 1.0).abs() < 1e-12);
        assert_eq!(gamma(&[], &seed), 0.0);
        let half = TfIdfVector::from_weights([("a", 1.0), ("b", 1.0)]);
        let none = TfIdfVector::from_weights([("c", 1.0)]);
        let g = gamma(&[&half, &none], &seed);
        assert!((g - 0.5f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((g - 0.3536).abs() < 1e-4);
    }

    #[test]
    fn phi_two_candidate_example() {
        // seed {a, b}; d1 = {a}, d2 = {b}; idf(a) = idf(b) = ln 2.
        let seed_c = counts(&[("a", 1), ("b", 1)]);
        let d1 = counts(&[("a", 1)]);
        let d2 = counts(&[("b", 1)]);
        let stats = build_stats([&d1, &d2]).unwrap();
        let (sv, v1, v2) = (
            tfidf(&seed_c, &stats),
            tfidf(&d1, &stats),
            tfidf(&d2, &stats),
        );
        assert!((cosine(&v1, &sv) - 0.5f64.sqrt()).abs() < 1e-12);
        let seed = WeightedDoc {
            counts: &seed_c,
            vector: &sv,
        };
        let cands = [
            WeightedDoc {
                counts: &d1,
                vector: &v1,
            },
            WeightedDoc {
                counts: &d2,
                vector: &v2,
            },
        ];
        let w = phi("a", seed, &cands, None).unwrap();
        assert!((w - LN2).abs() < 1e-12);
        assert!((w - 0.6931).abs() < 1e-4);
        assert!(phi("zzz", seed, &cands, None).is_err());
    }

    #[test]
    fn phi_ratio_cases() {
        assert_eq!(ratio_weight(0.0, 0.3), 0.0);
        assert_eq!(ratio_weight(0.0, 0.0), 0.0);
        assert!((ratio_weight(0.4, 0.2) - 3f64.ln()).abs() < 1e-12);
        assert!((ratio_weight(0.4, 0.2) - 1.0986).abs() < 1e-4);
        assert_eq!(ratio_weight(0.4, 0.0), LN2);
    }

    #[test]
    fn phi_empty_with_partition() {
        let seed_c = counts(&[("a", 1), ("b", 1)]);
        let d1 = counts(&[("b", 1)]);
        let d2 = counts(&[("c", 1)]);
        let stats = build_stats([&d1, &d2]).unwrap();
        let (sv, v1, v2) = (
            tfidf(&seed_c, &stats),
            tfidf(&d1, &stats),
            tfidf(&d2, &stats),
        );
        let seed = WeightedDoc {
            counts: &seed_c,
            vector: &sv,
        };
        let cands = [
            WeightedDoc {
                counts: &d1,
                vector: &v1,
            },
            WeightedDoc {
                counts: &d2,
                vector: &v2,
            },
        ];
        assert_eq!(phi("a", seed, &cands, None).unwrap(), 0.0);
    }

    #[test]
    fn qlm_hand_example() {
        // c(a, cand) = 2, L = 10, p(a|C) = 0.1, lambda = 0.5 -> ln 3.
        let seed = counts(&[("a", 1)]);
        let cand = counts(&[("a", 2), ("b", 8)]);
        let other = counts(&[("b", 10)]);
        let stats = build_stats([&cand, &other]).unwrap();
        assert!((stats.p_collection("a") - 0.1).abs() < 1e-15);
        let params = ScoringParams {
            lambda: 0.5,
            ..Default::default()
        };
        let s = qlm_score(&seed, &cand, &stats, &params).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-12);
        assert!((s - 1.0986).abs() < 1e-4);

        assert_eq!(
            qlm_score(&counts(&[("z", 1)]), &cand, &stats, &params).unwrap(),
            0.0
        );
        let near_one = ScoringParams {
            lambda: 1.0 - 1e-12,
            ..Default::default()
        };
        assert!(qlm_score(&seed, &cand, &stats, &near_one).unwrap() < 1e-9);
    }

    #[test]
    fn sdr_reduces_and_scales() {
        let seed = counts(&[("a", 1)]);
        let cand = counts(&[("a", 2), ("b", 8)]);
        let other = counts(&[("b", 10)]);
        let stats = build_stats([&cand, &other]).unwrap();
        let params = ScoringParams {
            lambda: 0.5,
            ..Default::default()
        };
        let ones: TermWeights = [("a".to_string(), 1.0)].into();
        assert_eq!(
            sdr_score(&seed, &cand, &stats, &params, &ones).unwrap(),
            qlm_score(&seed, &cand, &stats, &params).unwrap()
        );
        let w: TermWeights = [("a".to_string(), 0.6931)].into();
        let s = sdr_score(&seed, &cand, &stats, &params, &w).unwrap();
        assert!((s - 0.6931 * 3f64.ln()).abs() < 1e-12);
        assert!((s - 0.7614).abs() < 1e-4);
        let zero: TermWeights = [("a".to_string(), 0.0)].into();
        assert_eq!(
            sdr_score(&seed, &cand, &stats, &params, &zero).unwrap(),
            0.0
        );
        let missing = TermWeights::new();
        assert!(sdr_score(&seed, &cand, &stats, &params, &missing).is_err());
    }

    #[test]
    fn bm25_cases() {
        let q = counts(&[("a", 1)]);
        let d1 = counts(&[("a", 1)]);
        let d2 = counts(&[("b", 1)]);
        let stats = build_stats([&d1, &d2]).unwrap();
        let p = ScoringParams::default();
        assert!((bm25_score(&q, &d1, &stats, &p) - LN2).abs() < 1e-12);
        assert_eq!(bm25_score(&q, &d2, &stats, &p), 0.0);

        let short = counts(&[("a", 1), ("b", 1)]);
        let long = counts(&[("a", 1), ("b", 1), ("c", 5)]);
        let stats = build_stats([&short, &long, &d2]).unwrap();
        let flat = ScoringParams { bm25_b: 0.0, ..p };
        assert_eq!(
            bm25_score(&q, &short, &stats, &flat),
            bm25_score(&q, &long, &stats, &flat)
        );
        assert!(bm25_score(&q, &short, &stats, &p) > bm25_score(&q, &long, &stats, &p));
    }

    #[test]
    fn aes_cases() {
        let mut t = EmbeddingTable::new(2);
        t.insert("x", vec![1.0, 0.0]).unwrap();
        t.insert("y", vec![0.0, 1.0]).unwrap();
        assert!((aes_score(&["x", "y"], &["x", "y"], &t) - 1.0).abs() < 1e-12);
        assert_eq!(aes_score(&["q"], &["x"], &t), 0.0);
        let s = aes_score(&["x"], &["x", "y"], &t);
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((s - 0.7071).abs() < 1e-4);
    }

    fn list(pairs: &[(&str, f64)]) -> ScoredList {
        ScoredList::new(pairs.iter().map(|&(d, s)| (d.to_string(), s)).collect())
    }

    fn scores(l: &ScoredList) -> Vec<f64> {
        l.entries().iter().map(|e| e.1).collect()
    }

    #[test]
    fn minmax_cases() {
        let l = minmax(&list(&[("a", 2.0), ("b", 4.0), ("c", 6.0)])).unwrap();
        assert_eq!(scores(&l), vec![1.0, 0.5, 0.0]);
        assert_eq!(l.score_of("a"), Some(0.0));
        assert_eq!(
            scores(&minmax(&list(&[("a", 3.0), ("b", 3.0)])).unwrap()),
            vec![0.0, 0.0]
        );
        assert_eq!(scores(&minmax(&list(&[("a", 5.0)])).unwrap()), vec![0.0]);
        assert!(minmax(&list(&[])).is_err());
    }

    #[test]
    fn interpolate_cases() {
        let sdr = list(&[("d", 1.0), ("e", 0.0)]);
        let aes = list(&[("d", 0.0), ("e", 1.0)]);
        let mix = interpolate(&sdr, &aes, 0.3).unwrap();
        assert!((mix.score_of("d").unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(mix.doc_ids().collect::<Vec<_>>(), vec!["d", "e"]);
        let only_aes = interpolate(&sdr, &aes, 1.0).unwrap();
        assert_eq!(only_aes.doc_ids().collect::<Vec<_>>(), vec!["e", "d"]);
        let bad = list(&[("d", 1.0), ("x", 0.0)]);
        assert!(interpolate(&sdr, &bad, 0.3).is_err());
    }

    #[test]
    fn ties_break_by_doc_id() {
        let l = list(&[("b", 1.0), ("a", 1.0), ("c", 2.0)]);
        assert_eq!(l.doc_ids().collect::<Vec<_>>(), vec!["c", "a", "b"]);
    }

    #[test]
    fn rank_prefers_overlap() {
        let t = topic(vec![
            doc("s", &[("a", 2), ("b", 1)]),
            doc("d1", &[("a", 1), ("c", 1)]),
            doc("d2", &[("c", 2), ("e", 1)]),
        ]);
        for method in [Method::Bm25, Method::Qlm, Method::Sdr] {
            let run = rank(
                &t,
                &["s"],
                method,
                &ScoringParams::default(),
                &RankOptions::default(),
                "x",
            )
            .unwrap();
            assert_eq!(
                run.doc_ids().collect::<Vec<_>>(),
                vec!["d1", "d2"],
                "{method}"
            );
            assert_eq!(run.entries[1].score, 0.0);
        }
    }

    #[test]
    fn rank_empty_after_exclusion() {
        let t = topic(vec![doc("s", &[("a", 1)])]);
        let err = rank(
            &t,
            &["s"],
            Method::Qlm,
            &ScoringParams::default(),
            &RankOptions::default(),
            "x",
        );
        assert!(matches!(err, Err(Error::EmptyTopic(_))));
    }

    #[test]
    fn aes_methods_need_embeddings() {
        let t = topic(vec![doc("s", &[("a", 1)]), doc("d", &[("a", 1)])]);
        let err = rank(
            &t,
            &["s"],
            Method::SdrAes,
            &ScoringParams::default(),
            &RankOptions::default(),
            "x",
        );
        assert!(matches!(err, Err(Error::Config { field, .. }) if field == "embeddings"));
    }

    #[test]
    fn sdr_matches_brute_force_on_hand_corpus() {
        let seed: &[(&str, u32)] = &[("mri", 2), ("stenosis", 1), ("spine", 1), ("pain", 1)];
        let cands: &[(&str, &[(&str, u32)])] = &[
            ("d1", &[("mri", 1), ("spine", 2), ("surgery", 1)]),
            ("d2", &[("stenosis", 1), ("pain", 3), ("trial", 2)]),
            ("d3", &[("mri", 3), ("stenosis", 2), ("trial", 1)]),
            ("d4", &[("diet", 2), ("trial", 1), ("pain", 1)]),
        ];
        let expected = crate::test_oracle::brute_force_sdr(seed, cands, 0.7);
        let mut docs = vec![doc("s", seed)];
        docs.extend(cands.iter().map(|(id, d)| doc(id, d)));
        let run = rank(
            &topic(docs),
            &["s"],
            Method::Sdr,
            &ScoringParams::default(),
            &RankOptions::default(),
            "x",
        )
        .unwrap();
        let got: Vec<&str> = run.doc_ids().collect();
        let want: Vec<&str> = expected.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(got, want);
        for (e, w) in run.entries.iter().zip(&expected) {
            assert!(
                (e.score - w.1).abs() < 1e-9,
                "{} {} vs {}",
                e.doc_id,
                e.score,
                w.1
            );
        }
        // frozen from the brute-force evaluation above
        assert_eq!(want, vec!["d3", "d1", "d2", "d4"]);
    }

    #[test]
    fn undersampling_is_deterministic_and_bounded() {
        let mut docs = vec![doc("s", &[("a", 1), ("b", 1)])];
        for i in 0..120 {
            let pairs: &[(&str, u32)] = if i % 3 == 0 {
                &[("a", 1), ("c", 1)]
            } else {
                &[("b", 2), ("c", 1)]
            };
            docs.push(doc(&format!("d{i:03}"), pairs));
        }
        let t = topic(docs);
        let params = ScoringParams {
            undersample_cap: 10,
            rng_seed: 7,
            ..Default::default()
        };
        let opts = RankOptions {
            undersample: true,
            ..Default::default()
        };
        let a = rank(&t, &["s"], Method::Sdr, &params, &opts, "x").unwrap();
        let b = rank(&t, &["s"], Method::Sdr, &params, &opts, "x").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 120);
    }

    fn arb_docs() -> impl Strategy<Value = Vec<TermCounts>> {
        proptest::collection::vec(proptest::collection::vec(("[a-f]", 1u32..4), 1..6), 2..10)
            .prop_map(|docs| {
                docs.into_iter()
                    .map(|pairs| {
                        let mut tc = TermCounts::new();
                        for (t, c) in pairs {
                            tc.add(t, c);
                        }
                        tc
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn bulk_weights_match_single_term(docs in arb_docs(), seed_pairs in proptest::collection::vec(("[a-g]", 1u32..3), 1..6)) {
            let mut seed_c = TermCounts::new();
            for (t, c) in seed_pairs { seed_c.add(t, c); }
            let stats = build_stats(&docs).unwrap();
            let vs: Vec<_> = docs.iter().map(|d| tfidf(d, &stats)).collect();
            let sv = tfidf(&seed_c, &stats);
            let seed = WeightedDoc { counts: &seed_c, vector: &sv };
            let cands: Vec<_> = docs.iter().zip(&vs).map(|(c, v)| WeightedDoc { counts: c, vector: v }).collect();
            let bulk = term_weights(seed, &cands, None);
            for (t, w) in &bulk {
                prop_assert!(*w >= 0.0);
                prop_assert_eq!(*w, phi(t, seed, &cands, None).unwrap());
            }
        }

        #[test]
        fn qlm_monotone_in_candidate_count(extra in 1u32..5, base in 1u32..5, other in 1u32..5) {
            let seed = counts(&[("a", 1)]);
            let c1 = counts(&[("a", base), ("b", other)]);
            let c2 = counts(&[("a", base + extra), ("b", other)]);
            let stats = build_stats([&c1, &c2]).unwrap();
            let p = ScoringParams::default();
            prop_assert!(qlm_score(&seed, &c2, &stats, &p).unwrap() >= qlm_score(&seed, &c1, &stats, &p).unwrap());
        }

        #[test]
        fn interpolation_extremes_keep_order(s in proptest::collection::vec(0.0f64..10.0, 1..10), a in proptest::collection::vec(0.0f64..10.0, 10)) {
            let sdr = minmax(&ScoredList::new(s.iter().enumerate().map(|(i, &x)| (format!("d{i}"), x)).collect())).unwrap();
            let aes = minmax(&ScoredList::new(s.iter().enumerate().map(|(i, _)| (format!("d{i}"), a[i])).collect())).unwrap();
            let zero = interpolate(&sdr, &aes, 0.0).unwrap();
            prop_assert_eq!(zero.doc_ids().collect::<Vec<_>>(), sdr.doc_ids().collect::<Vec<_>>());
            let one = interpolate(&sdr, &aes, 1.0).unwrap();
            prop_assert_eq!(one.doc_ids().collect::<Vec<_>>(), aes.doc_ids().collect::<Vec<_>>());
        }
    }
}
