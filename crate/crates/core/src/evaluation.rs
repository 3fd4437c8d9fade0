//! Rank-based effectiveness measures with trec_eval conventions, plus paired
//! significance testing.
//!
//! Rankings are taken in the given order; a document is relevant when its
//! grade is at least 1.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relevance grades of one topic, keyed by doc_id.
pub type Qrels = IndexMap<String, u32>;

pub const DEFAULT_CUTOFFS: [usize; 3] = [10, 100, 1000];

fn is_rel(qrels: &Qrels, doc: &str) -> bool {
    qrels.get(doc).is_some_and(|&g| g >= 1)
}

pub fn num_relevant(qrels: &Qrels) -> usize {
    qrels.values().filter(|&&g| g >= 1).count()
}

/// Judgments limited to the given documents.
pub fn restrict_qrels<'a>(qrels: &Qrels, docs: impl IntoIterator<Item = &'a str>) -> Qrels {
    let keep: HashSet<&str> = docs.into_iter().collect();
    qrels
        .iter()
        .filter(|(d, _)| keep.contains(d.as_str()))
        .map(|(d, &g)| (d.clone(), g))
        .collect()
}

fn check_cutoff(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Contract("cutoff must be at least 1".into()));
    }
    Ok(())
}

/// Average precision with the number of judged relevant documents as the
/// denominator; unretrieved relevant documents contribute 0.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], qrels: &Qrels) -> Result<f64> {
    let r = num_relevant(qrels);
    if r == 0 {
        return Err(Error::UndefinedMetric("MAP"));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranked.iter().enumerate() {
        if is_rel(qrels, d.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / r as f64)
}

fn hits_at<S: AsRef<str>>(ranked: &[S], qrels: &Qrels, k: usize) -> usize {
    ranked
        .iter()
        .take(k)
        .filter(|d| is_rel(qrels, d.as_ref()))
        .count()
}

/// Relevant in the top `k` over `k`; short runs count as padded with
/// non-relevant documents.
pub fn precision_at<S: AsRef<str>>(ranked: &[S], qrels: &Qrels, k: usize) -> Result<f64> {
    check_cutoff(k)?;
    Ok(hits_at(ranked, qrels, k) as f64 / k as f64)
}

pub fn recall_at<S: AsRef<str>>(ranked: &[S], qrels: &Qrels, k: usize) -> Result<f64> {
    check_cutoff(k)?;
    let r = num_relevant(qrels);
    if r == 0 {
        return Err(Error::UndefinedMetric("recall"));
    }
    Ok(hits_at(ranked, qrels, k) as f64 / r as f64)
}

/// Binary-gain nDCG with a `log2(rank + 1)` discount; 0 when nothing is relevant.
pub fn ndcg_at<S: AsRef<str>>(ranked: &[S], qrels: &Qrels, k: usize) -> Result<f64> {
    check_cutoff(k)?;
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, d)| is_rel(qrels, d.as_ref()))
        .map(|(i, _)| discount(i))
        .sum();
    let idcg: f64 = (0..num_relevant(qrels).min(k)).map(discount).sum();
    Ok(if idcg == 0.0 { 0.0 } else { dcg / idcg })
}

fn last_rel_rank<S: AsRef<str>>(ranked: &[S], qrels: &Qrels) -> Result<usize> {
    ranked
        .iter()
        .rposition(|d| is_rel(qrels, d.as_ref()))
        .map(|i| i + 1)
        .ok_or(Error::UndefinedMetric("LastRel%"))
}

/// Rank of the last relevant document over the run length.
pub fn last_rel_percent<S: AsRef<str>>(ranked: &[S], qrels: &Qrels) -> Result<f64> {
    Ok(last_rel_rank(ranked, qrels)? as f64 / ranked.len() as f64)
}

/// Work saved over sampling: `(|C| - LastRel) / |C|`.
pub fn wss<S: AsRef<str>>(ranked: &[S], qrels: &Qrels) -> Result<f64> {
    let n = ranked.len();
    Ok((n - last_rel_rank(ranked, qrels)?) as f64 / n as f64)
}

/// Metric values keyed by name, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricSet {
    values: IndexMap<String, f64>,
}

impl MetricSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Every metric that is defined for this run. Metrics that are undefined
/// (no relevant judged, or none retrieved for LastRel%/WSS) are left out.
pub fn evaluate<S: AsRef<str>>(
    ranked: &[S],
    qrels: &Qrels,
    cutoffs: &[usize],
) -> Result<MetricSet> {
    let mut m = MetricSet::default();
    let defined = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    if let Some(v) = defined(average_precision(ranked, qrels))? {
        m.insert("MAP", v);
    }
    for &k in cutoffs {
        m.insert(format!("P@{k}"), precision_at(ranked, qrels, k)?);
    }
    for &k in cutoffs {
        if let Some(v) = defined(recall_at(ranked, qrels, k))? {
            m.insert(format!("R@{k}"), v);
        }
    }
    for &k in cutoffs {
        m.insert(format!("nDCG@{k}"), ndcg_at(ranked, qrels, k)?);
    }
    if let Some(v) = defined(last_rel_percent(ranked, qrels))? {
        m.insert("LastRel%", v);
        m.insert("WSS", wss(ranked, qrels)?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// Two-tailed paired Student's t-test of `a` against `b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateTest(
            "at least two pairs are required".into(),
        ));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(Error::DegenerateTest(
            "differences have zero variance".into(),
        ));
    }
    let t = mean / (var / nf).sqrt();
    let df = nf - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateTest(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}

/// Bonferroni adjustment for `m` comparisons.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels(rel: &[&str], nonrel: &[&str]) -> Qrels {
        rel.iter()
            .map(|d| (d.to_string(), 1))
            .chain(nonrel.iter().map(|d| (d.to_string(), 0)))
            .collect()
    }

    #[test]
    fn ap_examples() {
        let q = qrels(&["a", "c"], &["b"]);
        let ap = average_precision(&["a", "b", "c"], &q).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((ap - 0.8333).abs() < 1e-4);
        assert_eq!(average_precision(&["c", "a", "b"], &q).unwrap(), 1.0);
        assert_eq!(average_precision(&["a"], &q).unwrap(), 0.5);
        assert!(matches!(
            average_precision(&["a"], &qrels(&[], &["a"])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn precision_recall() {
        let docs: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let q = qrels(&["d2", "d7"], &[]);
        assert!((precision_at(&docs, &q, 10).unwrap() - 0.2).abs() < 1e-12);

        let q5 = qrels(&["d0", "d3", "d5", "d8", "d9"], &[]);
        assert_eq!(recall_at(&docs, &q5, 100).unwrap(), 1.0);

        let short = ["x", "y", "z"];
        assert!((precision_at(&short, &qrels(&["y"], &[]), 10).unwrap() - 0.1).abs() < 1e-12);
        assert!(precision_at(&short, &q, 0).is_err());
        assert!(recall_at(&short, &qrels(&[], &[]), 10).is_err());
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels(&["a", "c"], &["b"]);
        assert_eq!(ndcg_at(&["a", "c", "b"], &q, 3).unwrap(), 1.0);
        let v = ndcg_at(&["a", "b", "c"], &q, 3).unwrap();
        let expected = 1.5 / (1.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.9197).abs() < 1e-4);
        assert_eq!(ndcg_at(&["b", "x", "a"], &q, 2).unwrap(), 0.0);
    }

    #[test]
    fn last_rel_and_wss() {
        let docs: Vec<String> = (1..=10).map(|i| format!("d{i}")).collect();
        let q = qrels(&["d1", "d3"], &[]);
        assert!((last_rel_percent(&docs, &q).unwrap() - 0.3).abs() < 1e-12);
        assert!((wss(&docs, &q).unwrap() - 0.7).abs() < 1e-12);

        assert_eq!(wss(&docs, &qrels(&["d10"], &[])).unwrap(), 0.0);

        let four = ["a", "b", "c", "d"];
        let q = qrels(&["a"], &[]);
        assert_eq!(last_rel_percent(&four, &q).unwrap(), 0.25);
        assert_eq!(wss(&four, &q).unwrap(), 0.75);
        assert!(wss(&four, &qrels(&["z"], &[])).is_err());
    }

    #[test]
    fn evaluate_omits_undefined() {
        let m = evaluate(&["a", "b"], &qrels(&["z"], &[]), &DEFAULT_CUTOFFS).unwrap();
        assert!(m.get("MAP").is_some());
        assert!(m.get("WSS").is_none());
        assert_eq!(m.get("P@10"), Some(0.0));
        let m = evaluate(&["a", "b"], &qrels(&["a"], &[]), &DEFAULT_CUTOFFS).unwrap();
        assert_eq!(m.get("LastRel%").unwrap() + m.get("WSS").unwrap(), 1.0);
    }

    #[test]
    fn t_test_examples() {
        assert!(matches!(
            paired_t_test(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::DegenerateTest(_))
        ));
        // differences {1, 3}: t = 2 with one degree of freedom, whose CDF is
        // the Cauchy CDF, so p = 1 - 2 atan(2) / pi.
        let r = paired_t_test(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert!((r.t - 2.0).abs() < 1e-12);
        assert_eq!(r.df, 1.0);
        let oracle = 1.0 - 2.0 * 2f64.atan() / std::f64::consts::PI;
        assert!((r.p - oracle).abs() < 1e-9);
        assert!((r.p - 0.2952).abs() < 1e-4);
        assert!((bonferroni(0.01, 5) - 0.05).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 5), 1.0);
    }

    #[test]
    fn t_test_many_df() {
        // df = 2: CDF closed form 1/2 + t / (2 sqrt(2 + t^2)).
        let r = paired_t_test(&[1.0, 2.0, 6.0], &[0.0, 0.0, 0.0]).unwrap();
        let t = r.t;
        let upper = 0.5 - t / (2.0 * (2.0 + t * t).sqrt());
        assert!((r.p - 2.0 * upper).abs() < 1e-9);
    }

    fn permutations(items: &[String]) -> Vec<Vec<String>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head.clone());
                out.push(tail);
            }
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn metrics_bounded_and_wss_complements(labels in proptest::collection::vec(proptest::bool::ANY, 1..12)) {
            let docs: Vec<String> = (0..labels.len()).map(|i| format!("d{i}")).collect();
            let q: Qrels = docs.iter().zip(&labels).map(|(d, &r)| (d.clone(), u32::from(r))).collect();
            if let Ok(m) = evaluate(&docs, &q, &[1, 5, 10]) {
                for (_, v) in m.iter() {
                    proptest::prop_assert!((0.0..=1.0).contains(&v));
                }
                if let (Some(l), Some(w)) = (m.get("LastRel%"), m.get("WSS")) {
                    proptest::prop_assert_eq!(l + w, 1.0);
                }
            }
        }

        #[test]
        fn reversed_perfect_ranking_is_worst(n in 2usize..=6, r in 1usize..=5) {
            let r = r.min(n - 1);
            let docs: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
            let q: Qrels = docs.iter().enumerate().map(|(i, d)| (d.clone(), u32::from(i < r))).collect();
            let reversed: Vec<String> = docs.iter().rev().cloned().collect();
            let worst_ap = average_precision(&reversed, &q).unwrap();
            let worst_ndcg = ndcg_at(&reversed, &q, n).unwrap();
            for perm in permutations(&docs) {
                proptest::prop_assert!(average_precision(&perm, &q).unwrap() >= worst_ap - 1e-12);
                proptest::prop_assert!(ndcg_at(&perm, &q, n).unwrap() >= worst_ndcg - 1e-12);
            }
            proptest::prop_assert_eq!(average_precision(&docs, &q).unwrap(), 1.0);
        }
    }
}
