//! End-to-end commands behind the CLI. Each one loads inputs from a
//! [`RunConfig`], runs library operations and writes its artefacts under
//! `output_dir`:
//!
//! ```text
//! runs/<method>-<repr>/<topic>.run        single-seed runs
//! runs/<method>-<repr>/metrics.csv        topic_id,seed_or_window,metric,value
//! runs/<method>-<repr>/summary.csv        topic_id,metric,value (ALL = cross-topic)
//! runs/multi-<method>-<repr>/...          multi-seed runs and metrics
//! runs/oracle-<method>-<repr>/...         oracle single-seed runs and metrics
//! runs/multi-<method>-<repr>/comparison.csv
//! analysis/intra_similarity-<repr>.csv
//! analysis/term_commonality-<repr>.csv
//! analysis/commonality_histogram-<repr>.csv
//! ```

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus_io::{
    fetch_annotations, filter_topics, format_run, load_corpus, load_embeddings, load_lexicon,
    load_qrels, load_run, load_topics, Corpus, Document, EmbeddingTable, Lexicon, RankedRun, Topic,
};
use crate::error::{Error, Result};
use crate::evaluation::{bonferroni, evaluate, paired_t_test, MetricSet};
use crate::experiments::{
    intra_similarity, loocv_single, run_multi, term_commonality, ExperimentReport, MetricRow,
};
use crate::output::write_atomic;
use crate::prepared::{prepare_topic, PreparedTopic, Resources};
use crate::scoring::RankOptions;
use crate::textproc::{default_stopwords, load_stopwords, PipelineConfig, Representation};

/// Significance level applied to Bonferroni-adjusted p-values.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// What a command produced, printed by the CLI as JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub command: String,
    pub topics_processed: usize,
    pub topics_skipped: usize,
    pub files: Vec<PathBuf>,
    pub overall: IndexMap<String, MetricSet>,
}

/// Loaded inputs shared by all topics.
pub struct Workspace {
    pub corpus: Corpus,
    pub topics: Vec<Topic>,
    pub skipped: usize,
    pub pipeline: PipelineConfig,
    pub lexicon: Option<Lexicon>,
    pub embeddings: Option<EmbeddingTable>,
}

impl Workspace {
    pub fn resources(&self) -> Resources<'_> {
        Resources {
            corpus: &self.corpus,
            pipeline: &self.pipeline,
            lexicon: self.lexicon.as_ref(),
            embeddings: self.embeddings.as_ref(),
        }
    }

    pub fn prepare(&self, topic: &Topic, repr: Representation) -> Result<PreparedTopic> {
        prepare_topic(topic, repr, self.resources())
    }
}

fn required<'a>(value: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::config(field, "is required"))
}

/// Reads every input named in the config and drops topics with fewer than
/// `min_relevant` relevant studies.
pub fn load_workspace(cfg: &RunConfig, min_relevant: usize) -> Result<Workspace> {
    let corpus = load_corpus(required(&cfg.corpus, "corpus")?)?;
    let set = load_topics(
        required(&cfg.topics, "topics")?,
        required(&cfg.qrels, "qrels")?,
    )?;
    let topics = filter_topics(&set.topics, min_relevant);
    let skipped = set.topics.len() - topics.len();
    if skipped > 0 {
        log::info!("{skipped} topics with fewer than {min_relevant} relevant studies were skipped");
    }
    let stopwords = match &cfg.stopwords {
        Some(p) => load_stopwords(p)?,
        None => default_stopwords(),
    };
    let pipeline = PipelineConfig::new(cfg.variant).with_stopwords(stopwords);
    let lexicon = match (&cfg.lexicon, &cfg.annotator_url) {
        (Some(p), _) => Some(load_lexicon(p)?),
        (None, Some(url)) if cfg.representation == Representation::Boc => {
            let mut ids: Vec<&String> = topics.iter().flat_map(|t| &t.candidate_ids).collect();
            ids.sort();
            ids.dedup();
            let docs: Vec<Document> = ids
                .into_iter()
                .filter_map(|id| corpus.get(id).cloned())
                .collect();
            Some(fetch_annotations(url, &docs)?)
        }
        _ => None,
    };
    let embeddings = match &cfg.embeddings {
        Some(p) => Some(load_embeddings(p)?),
        None => None,
    };
    Ok(Workspace {
        corpus,
        topics,
        skipped,
        pipeline,
        lexicon,
        embeddings,
    })
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(f)
}

fn csv_bytes<R: AsRef<[u8]>>(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<R>>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write_err = |e: csv::Error| Error::Contract(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(write_err)?;
    for row in rows {
        w.write_record(row).map_err(write_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Contract(format!("csv encoding failed: {e}")))
}

/// Long-format metric rows.
pub fn metrics_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["topic_id", "seed_or_window", "metric", "value"],
        report.rows.iter().flat_map(|r| {
            r.metrics.iter().map(move |(name, v)| {
                vec![
                    r.topic_id.clone(),
                    r.unit.clone(),
                    name.to_string(),
                    v.to_string(),
                ]
            })
        }),
    )
}

/// Per-topic means followed by `ALL` rows with the cross-topic means and
/// `excluded:<metric>` rows counting units left out of a mean.
pub fn summary_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (topic, m) in &report.per_topic {
        for (name, v) in m.iter() {
            rows.push(vec![topic.clone(), name.to_string(), v.to_string()]);
        }
    }
    for (name, v) in report.overall.iter() {
        rows.push(vec!["ALL".into(), name.to_string(), v.to_string()]);
    }
    for (name, n) in &report.excluded {
        rows.push(vec![
            "ALL".into(),
            format!("excluded:{name}"),
            n.to_string(),
        ]);
    }
    csv_bytes(&["topic_id", "metric", "value"], rows)
}

fn runs_text(runs: &[&RankedRun]) -> Result<String> {
    let mut out = String::new();
    for r in runs {
        out.push_str(&format_run(&r.entries)?);
    }
    Ok(out)
}

struct RunDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl RunDir {
    fn new(root: &Path, name: &str) -> Self {
        Self {
            dir: root.join("runs").join(name),
            files: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn write_report(&mut self, report: &ExperimentReport) -> Result<()> {
        self.write("metrics.csv", &metrics_csv(report)?)?;
        self.write("summary.csv", &summary_csv(report)?)
    }
}

fn run_options<'a>(ws: &'a Workspace) -> RankOptions<'a> {
    RankOptions {
        embeddings: ws.embeddings.as_ref(),
        ..Default::default()
    }
}

fn check_topic_ids(topics: &[Topic]) -> Result<()> {
    for t in topics {
        if t.topic_id.contains(['/', '\\']) || t.topic_id.starts_with('.') {
            return Err(Error::Contract(format!(
                "topic id `{}` cannot be used as a file name",
                t.topic_id
            )));
        }
    }
    Ok(())
}

/// Single-seed leave-one-out runs for the configured method and representation.
pub fn cmd_rank(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        let ws = load_workspace(cfg, cfg.min_relevant.max(2))?;
        check_topic_ids(&ws.topics)?;
        let params = cfg.scoring_params();
        let options = run_options(&ws);
        let results = ws
            .topics
            .par_iter()
            .map(|topic| {
                let prepared = ws.prepare(topic, cfg.representation)?;
                let out = loocv_single(&prepared, cfg.method, &params, &options, &cfg.cutoffs)?;
                log::info!("{}: {} single-seed runs", topic.topic_id, out.runs.len());
                let runs: Vec<&RankedRun> = out.runs.iter().map(|r| &r.run).collect();
                Ok((topic.topic_id.clone(), runs_text(&runs)?, out.report))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut dir = RunDir::new(
            &cfg.output_dir,
            &format!("{}-{}", cfg.method.slug(), cfg.representation),
        );
        let mut reports = Vec::new();
        for (topic_id, text, report) in results {
            dir.write(&format!("{topic_id}.run"), text.as_bytes())?;
            reports.push(report);
        }
        let report = ExperimentReport::merge(reports);
        dir.write_report(&report)?;
        Ok(Summary {
            command: "rank".into(),
            topics_processed: ws.topics.len(),
            topics_skipped: ws.skipped,
            files: dir.files,
            overall: [("single".to_string(), report.overall)]
                .into_iter()
                .collect(),
        })
    })
}

fn change_percent(multi: f64, oracle: f64) -> String {
    if oracle == 0.0 {
        String::new()
    } else {
        ((multi - oracle) / oracle * 100.0).to_string()
    }
}

/// Per-topic and cross-topic multi against oracle means.
pub fn comparison_csv(multi: &ExperimentReport, oracle: &ExperimentReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    let oracle_topics: HashMap<&str, &MetricSet> = oracle
        .per_topic
        .iter()
        .map(|(t, m)| (t.as_str(), m))
        .collect();
    let mut push = |topic: &str, m: &MetricSet, o: &MetricSet| {
        for (name, mv) in m.iter() {
            if let Some(ov) = o.get(name) {
                rows.push(vec![
                    topic.to_string(),
                    name.to_string(),
                    mv.to_string(),
                    ov.to_string(),
                    change_percent(mv, ov),
                ]);
            }
        }
    };
    for (topic, m) in &multi.per_topic {
        if let Some(o) = oracle_topics.get(topic.as_str()) {
            push(topic, m, o);
        }
    }
    push("ALL", &multi.overall, &oracle.overall);
    csv_bytes(
        &["topic_id", "metric", "multi", "oracle", "change_percent"],
        rows,
    )
}

/// Multi-seed sliding-window runs with oracle-selected single-seed baselines.
pub fn cmd_multi(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        let ws = load_workspace(cfg, cfg.min_relevant.max(3))?;
        check_topic_ids(&ws.topics)?;
        let params = cfg.scoring_params();
        let options = run_options(&ws);
        let results = ws
            .topics
            .par_iter()
            .map(|topic| {
                let prepared = ws.prepare(topic, cfg.representation)?;
                let single = loocv_single(&prepared, cfg.method, &params, &options, &cfg.cutoffs)?;
                let out = run_multi(
                    &prepared,
                    cfg.method,
                    &params,
                    &options,
                    cfg.fraction,
                    &single.runs,
                    &cfg.cutoffs,
                )?;
                log::info!("{}: {} seed groups", topic.topic_id, out.groups.len());
                let multi_text = runs_text(&out.multi_runs.iter().collect::<Vec<_>>())?;
                let oracle_text =
                    runs_text(&out.oracle.iter().map(|o| &o.run).collect::<Vec<_>>())?;
                Ok((
                    topic.topic_id.clone(),
                    multi_text,
                    oracle_text,
                    out.multi_report,
                    out.oracle_report,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let base = format!("{}-{}", cfg.method.slug(), cfg.representation);
        let mut multi_dir = RunDir::new(&cfg.output_dir, &format!("multi-{base}"));
        let mut oracle_dir = RunDir::new(&cfg.output_dir, &format!("oracle-{base}"));
        let mut multi_reports = Vec::new();
        let mut oracle_reports = Vec::new();
        for (topic_id, m, o, mr, or) in results {
            multi_dir.write(&format!("{topic_id}.run"), m.as_bytes())?;
            oracle_dir.write(&format!("{topic_id}.run"), o.as_bytes())?;
            multi_reports.push(mr);
            oracle_reports.push(or);
        }
        let multi = ExperimentReport::merge(multi_reports);
        let oracle = ExperimentReport::merge(oracle_reports);
        multi_dir.write_report(&multi)?;
        oracle_dir.write_report(&oracle)?;
        multi_dir.write("comparison.csv", &comparison_csv(&multi, &oracle)?)?;
        let mut files = multi_dir.files;
        files.extend(oracle_dir.files);
        Ok(Summary {
            command: "multi".into(),
            topics_processed: ws.topics.len(),
            topics_skipped: ws.skipped,
            files,
            overall: [
                ("multi".to_string(), multi.overall),
                ("oracle".to_string(), oracle.overall),
            ]
            .into_iter()
            .collect(),
        })
    })
}

/// Evaluates every (topic, tag) run in a TREC run file against the full
/// qrels of its topic, in order of the rank column. Topics absent from the
/// qrels are skipped.
pub fn eval_report(
    run_path: &Path,
    qrels_path: &Path,
    cutoffs: &[usize],
) -> Result<ExperimentReport> {
    let entries = load_run(run_path)?;
    let qrels = load_qrels(qrels_path)?;
    let mut groups: IndexMap<(&str, &str), Vec<(usize, &str)>> = IndexMap::new();
    for e in &entries {
        groups
            .entry((e.topic_id.as_str(), e.tag.as_str()))
            .or_default()
            .push((e.rank, e.doc_id.as_str()));
    }
    let mut rows = Vec::new();
    for ((topic, tag), mut ranked) in groups {
        ranked.sort_by_key(|&(r, _)| r);
        let mut seen = HashSet::new();
        for w in ranked.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidRun(format!(
                    "topic {topic} tag {tag}: rank {} repeated",
                    w[0].0
                )));
            }
        }
        if let Some((_, d)) = ranked.iter().find(|(_, d)| !seen.insert(*d)) {
            return Err(Error::InvalidRun(format!(
                "topic {topic} tag {tag}: document {d} repeated"
            )));
        }
        let docs: Vec<&str> = ranked.into_iter().map(|(_, d)| d).collect();
        let Some(q) = qrels.get(topic) else {
            log::warn!("topic {topic} has no qrels; skipped");
            continue;
        };
        rows.push(MetricRow {
            topic_id: topic.to_string(),
            unit: tag.to_string(),
            metrics: evaluate(&docs, q, cutoffs)?,
        });
    }
    Ok(ExperimentReport::from_rows(rows))
}

/// Standalone evaluation; returns the metric CSV and writes it when `out` is given.
pub fn cmd_eval(
    run_path: &Path,
    qrels_path: &Path,
    cutoffs: &[usize],
    out: Option<&Path>,
) -> Result<Vec<u8>> {
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::config(
            "cutoffs",
            "must be a non-empty list of positive integers",
        ));
    }
    let report = eval_report(run_path, qrels_path, cutoffs)?;
    let bytes = metrics_csv(&report)?;
    if let Some(p) = out {
        write_atomic(p, &bytes)?;
    }
    Ok(bytes)
}

/// Observation analyses for every topic.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        let ws = load_workspace(cfg, cfg.min_relevant.max(2))?;
        let repr = cfg.representation;
        let results = ws
            .topics
            .par_iter()
            .map(|topic| {
                let prepared = ws.prepare(topic, repr)?;
                let sim = intra_similarity(&prepared, cfg.repetitions, cfg.rng_seed)?;
                let common = term_commonality(&prepared)?;
                Ok((topic.topic_id.clone(), sim, common))
            })
            .collect::<Result<Vec<_>>>()?;

        let dir = cfg.output_dir.join("analysis");
        let mut files = Vec::new();
        let mut write = |name: String, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            write_atomic(&p, &bytes)?;
            files.push(p);
            Ok(())
        };
        write(
            format!("intra_similarity-{repr}.csv"),
            csv_bytes(
                &["topic_id", "rel_mean", "irrel_mean"],
                results.iter().map(|(t, s, _)| {
                    vec![t.clone(), s.rel_mean.to_string(), s.irrel_mean.to_string()]
                }),
            )?,
        )?;
        write(
            format!("term_commonality-{repr}.csv"),
            csv_bytes(
                &["topic_id", "term", "fraction"],
                results.iter().flat_map(|(t, _, c)| {
                    c.fractions
                        .iter()
                        .map(move |(term, f)| vec![t.clone(), term.clone(), f.to_string()])
                }),
            )?,
        )?;
        write(
            format!("commonality_histogram-{repr}.csv"),
            csv_bytes(
                &["topic_id", "bin_lo", "bin_hi", "count"],
                results.iter().flat_map(|(t, _, c)| {
                    c.histogram.iter().map(move |b| {
                        vec![
                            t.clone(),
                            b.lo.to_string(),
                            b.hi.to_string(),
                            b.count.to_string(),
                        ]
                    })
                }),
            )?,
        )?;

        let mut overall = MetricSet::default();
        let n = results.len().max(1) as f64;
        overall.insert(
            "rel_mean",
            results.iter().map(|r| r.1.rel_mean).sum::<f64>() / n,
        );
        overall.insert(
            "irrel_mean",
            results.iter().map(|r| r.1.irrel_mean).sum::<f64>() / n,
        );
        Ok(Summary {
            command: "analyze".into(),
            topics_processed: ws.topics.len(),
            topics_skipped: ws.skipped,
            files,
            overall: [("intra_similarity".to_string(), overall)]
                .into_iter()
                .collect(),
        })
    })
}

/// Per-topic means of each metric from a long-format metric CSV.
pub fn read_topic_means(path: &Path) -> Result<IndexMap<String, IndexMap<String, f64>>> {
    let text = crate::corpus_io::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["topic_id", "seed_or_window", "metric", "value"] {
        return Err(Error::parse(
            path,
            1,
            "expected header topic_id,seed_or_window,metric,value",
        ));
    }
    // metric -> topic -> (sum, n)
    let mut sums: IndexMap<String, IndexMap<String, (f64, usize)>> = IndexMap::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let value: f64 = rec[3].parse().map_err(|_| {
            Error::parse(path, line, format!("value `{}` is not a number", &rec[3]))
        })?;
        let e = sums
            .entry(rec[2].to_string())
            .or_default()
            .entry(rec[0].to_string())
            .or_insert((0.0, 0));
        e.0 += value;
        e.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(metric, topics)| {
            let means = topics
                .into_iter()
                .map(|(t, (s, n))| (t, s / n as f64))
                .collect();
            (metric, means)
        })
        .collect())
}

/// Paired t-tests over topics for every metric present in both files, with
/// Bonferroni correction over the number of metrics tested.
pub fn significance_csv(
    a: &IndexMap<String, IndexMap<String, f64>>,
    b: &IndexMap<String, IndexMap<String, f64>>,
    label_a: &str,
    label_b: &str,
) -> Result<Vec<u8>> {
    let metrics: Vec<&String> = a.keys().filter(|m| b.contains_key(*m)).collect();
    let m = metrics.len();
    let mut rows = Vec::new();
    for metric in metrics {
        let (ta, tb) = (&a[metric], &b[metric]);
        let (xs, ys): (Vec<f64>, Vec<f64>) = ta
            .iter()
            .filter_map(|(topic, va)| tb.get(topic).map(|vb| (*va, *vb)))
            .unzip();
        let unpaired = ta.len().max(tb.len()) - xs.len();
        if unpaired > 0 {
            log::warn!("{metric}: {unpaired} topics are not present in both inputs");
        }
        let row = match paired_t_test(&xs, &ys) {
            Ok(test) => {
                let adj = bonferroni(test.p, m);
                vec![
                    test.t.to_string(),
                    test.p.to_string(),
                    adj.to_string(),
                    (adj < SIGNIFICANCE_LEVEL).to_string(),
                ]
            }
            Err(Error::DegenerateTest(reason)) => {
                log::warn!("{metric}: {reason}");
                vec![String::new(), String::new(), String::new(), "false".into()]
            }
            Err(e) => return Err(e),
        };
        let mut full = vec![label_a.to_string(), label_b.to_string(), metric.clone()];
        full.extend(row);
        rows.push(full);
    }
    csv_bytes(
        &[
            "method_a",
            "method_b",
            "metric",
            "t",
            "p",
            "p_adjusted",
            "significant",
        ],
        rows,
    )
}

/// Label for a metric CSV: its parent directory name, else the file stem.
pub fn default_label(path: &Path) -> String {
    let from_dir = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned());
    match from_dir {
        Some(d) if path.file_name().is_some_and(|f| f == "metrics.csv") => d,
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    }
}

pub fn cmd_compare(
    a: &Path,
    b: &Path,
    labels: Option<(&str, &str)>,
    out: Option<&Path>,
) -> Result<Vec<u8>> {
    let (la, lb) = match labels {
        Some((x, y)) => (x.to_string(), y.to_string()),
        None => (default_label(a), default_label(b)),
    };
    let bytes = significance_csv(&read_topic_means(a)?, &read_topic_means(b)?, &la, &lb)?;
    if let Some(p) = out {
        write_atomic(p, &bytes)?;
    }
    Ok(bytes)
}
