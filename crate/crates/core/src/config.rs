//! Experiment configuration: a TOML file, then `SDR_*` environment
//! variables, then explicit `key=value` overrides.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_CUTOFFS;
use crate::scoring::{Method, ScoringParams};
use crate::textproc::{Representation, Variant};

pub const ENV_PREFIX: &str = "SDR_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Used to build a lexicon when `representation = "boc"` and no lexicon file is given.
    pub annotator_url: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub output_dir: PathBuf,

    pub method: Method,
    pub representation: Representation,
    pub variant: Variant,

    pub lambda: f64,
    pub alpha: f64,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub undersample_cap: usize,
    pub rng_seed: u64,

    pub fraction: f64,
    pub repetitions: usize,
    pub min_relevant: usize,
    pub cutoffs: Vec<usize>,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ScoringParams::default();
        Self {
            corpus: None,
            topics: None,
            qrels: None,
            lexicon: None,
            annotator_url: None,
            embeddings: None,
            stopwords: None,
            output_dir: PathBuf::from("out"),
            method: Method::Sdr,
            representation: Representation::Bow,
            variant: Variant::Ours,
            lambda: p.lambda,
            alpha: p.alpha,
            bm25_k1: p.bm25_k1,
            bm25_b: p.bm25_b,
            undersample_cap: p.undersample_cap,
            rng_seed: p.rng_seed,
            fraction: 0.2,
            repetitions: 10,
            min_relevant: 2,
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            threads: 0,
        }
    }
}

/// Turns an override string into a TOML value: anything that parses as a
/// TOML literal is taken as such, everything else as a bare string.
fn override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config("<override>", "empty key"));
    }
    let value = match key {
        // Method names such as `sdr+aes` are not TOML literals, and numbers
        // in path fields must stay strings.
        "method" | "representation" | "variant" | "annotator_url" => {
            toml::Value::String(raw.to_string())
        }
        k if is_path_field(k) => toml::Value::String(raw.to_string()),
        _ => override_value(raw),
    };
    table.insert(key.to_string(), value);
    Ok(())
}

fn is_path_field(key: &str) -> bool {
    matches!(
        key,
        "corpus" | "topics" | "qrels" | "lexicon" | "embeddings" | "stopwords" | "output_dir"
    )
}

fn deserialize(table: toml::Table, origin: &str) -> Result<RunConfig> {
    RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field"))
            .unwrap_or(origin)
            .to_string();
        Error::config(field, msg.trim().to_string())
    })
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        deserialize(table, "<file>")
    }

    /// Loads `path` (or defaults), then applies environment variables named
    /// `SDR_<FIELD>` and finally the `key=value` overrides.
    pub fn load(
        path: Option<&Path>,
        env: &HashMap<String, String>,
        overrides: &[String],
    ) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = crate::corpus_io::read_to_string(p)?;
                text.parse::<toml::Table>().map_err(|e| {
                    Error::config("<file>", format!("{}: {}", p.display(), e.message()))
                })?
            }
            None => toml::Table::new(),
        };
        let mut env_keys: Vec<(&String, &String)> = env
            .iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        env_keys.sort();
        for (k, v) in env_keys {
            let key = k[ENV_PREFIX.len()..].to_ascii_lowercase();
            if key == "log" {
                continue;
            }
            apply(&mut table, &key, v)?;
        }
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config("<override>", format!("`{item}` is not key=value")))?;
            apply(&mut table, k, v)?;
        }
        deserialize(table, "<config>")
    }

    pub fn scoring_params(&self) -> ScoringParams {
        ScoringParams {
            lambda: self.lambda,
            alpha: self.alpha,
            bm25_k1: self.bm25_k1,
            bm25_b: self.bm25_b,
            undersample_cap: self.undersample_cap,
            rng_seed: self.rng_seed,
        }
    }

    /// Every problem found, one error per field.
    pub fn problems(&self) -> Vec<Error> {
        let mut out = Vec::new();
        for (field, value) in [
            ("corpus", &self.corpus),
            ("topics", &self.topics),
            ("qrels", &self.qrels),
        ] {
            match value {
                None => out.push(Error::config(field, "is required")),
                Some(p) if !p.is_file() => out.push(Error::config(
                    field,
                    format!("`{}` does not exist", p.display()),
                )),
                _ => {}
            }
        }
        for (field, value) in [
            ("lexicon", &self.lexicon),
            ("embeddings", &self.embeddings),
            ("stopwords", &self.stopwords),
        ] {
            if let Some(p) = value {
                if !p.is_file() {
                    out.push(Error::config(
                        field,
                        format!("`{}` does not exist", p.display()),
                    ));
                }
            }
        }
        if self.method.needs_embeddings() && self.embeddings.is_none() {
            out.push(Error::config(
                "embeddings",
                format!("method `{}` needs an embeddings file", self.method),
            ));
        }
        if self.representation == Representation::Boc
            && self.lexicon.is_none()
            && self.annotator_url.is_none()
        {
            out.push(Error::config(
                "lexicon",
                "representation `boc` needs a lexicon file or an annotator_url",
            ));
        }
        if let Err(e) = self.scoring_params().validate() {
            out.push(e);
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            out.push(Error::config("fraction", "must lie in (0, 1]"));
        }
        if self.repetitions == 0 {
            out.push(Error::config("repetitions", "must be positive"));
        }
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            out.push(Error::config(
                "cutoffs",
                "must be a non-empty list of positive integers",
            ));
        }
        out
    }

    /// Fails with the first problem; all problems are logged.
    pub fn validate(&self) -> Result<()> {
        let mut problems = self.problems();
        for p in &problems {
            log::error!("{p}");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.swap_remove(0))
        }
    }
}
