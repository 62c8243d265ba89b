//! The ensemble experiment: score files in, one report per run out.
//!
//! A run fuses every ensemble of at least `min_ensemble_size` models,
//! evaluates each against gold labels, and writes everything under
//! `<out_dir>/run-<hash>/`, where the hash covers the settings and the
//! contents of every input file:
//!
//! ```text
//! run-<hash>/
//!   config.txt              resolved settings
//!   report.txt              table report
//!   report.tsv              delimited report
//!   predictions/<name>.tsv  fused export per ensemble
//! ```
//!
//! Optionally a baseline model is trained on a `train` corpus and joins the
//! ensemble grid as model `baseline`. When no `eval` corpus is given, the
//! `train` corpus is split with `dev_fraction` and `seed` and the dev part
//! is evaluated.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use sha2::{Digest, Sha256};

use crate::baseline::{BaselineModel, DEFAULT_SMOOTHING};
use crate::corpus::{load_corpus, split_corpus, Corpus, Label, DEFAULT_DEV_FRACTION};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fusion::{enumerate_ensembles, fuse_ensemble_with, fused_to_tsv};
use crate::io::{read_to_string, write_atomic};
use crate::metrics::{evaluate, render_report, EvalReport, ReportFormat};
use crate::normalize::{load_stopwords, normalize_corpus_with, NormalizerConfig};
use crate::scores::{align, read_scores, ScoreSet};

pub const DEFAULT_MIN_ENSEMBLE_SIZE: usize = 2;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const BASELINE_MODEL_NAME: &str = "baseline";

/// Fully resolved experiment settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Labeled corpus to evaluate on.
    pub eval: Option<PathBuf>,
    /// Labeled corpus for the baseline model.
    pub train: Option<PathBuf>,
    pub scores: Vec<PathBuf>,
    pub min_ensemble_size: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub dev_fraction: f64,
    pub smoothing: f64,
    pub stopwords: Option<PathBuf>,
    pub keep_hashtag_words: bool,
    pub unicode_fold: bool,
    pub format: ReportFormat,
    pub overwrite: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            eval: None,
            train: None,
            scores: Vec::new(),
            min_ensemble_size: DEFAULT_MIN_ENSEMBLE_SIZE,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            seed: DEFAULT_SEED,
            dev_fraction: DEFAULT_DEV_FRACTION,
            smoothing: DEFAULT_SMOOTHING,
            stopwords: None,
            keep_hashtag_words: true,
            unicode_fold: true,
            format: ReportFormat::Table,
            overwrite: false,
        }
    }
}

/// Settings from one source (a config file or the command line). `None`
/// and empty fields leave the lower-priority value in place.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub eval: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub scores: Vec<PathBuf>,
    pub min_ensemble_size: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dev_fraction: Option<f64>,
    pub smoothing: Option<f64>,
    pub stopwords: Option<PathBuf>,
    pub keep_hashtag_words: Option<bool>,
    pub unicode_fold: Option<bool>,
    pub format: Option<ReportFormat>,
}

impl ConfigOverrides {
    /// Parses `key = value` lines. `#` starts a comment line; `scores` may
    /// repeat. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut cfg = ConfigOverrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Malformed {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("expected `key = value`, found {line:?}")))?;
            let path = || base_dir.join(value);
            let parse_err = |what: &str| bad(format!("`{key}`: {value:?} is not {what}"));
            match key {
                "eval" | "corpus" => cfg.eval = Some(path()),
                "train" => cfg.train = Some(path()),
                "scores" => cfg.scores.push(path()),
                "out_dir" => cfg.out_dir = Some(path()),
                "stopwords" => cfg.stopwords = Some(path()),
                "min_ensemble_size" => {
                    cfg.min_ensemble_size =
                        Some(value.parse().map_err(|_| parse_err("a positive integer"))?)
                }
                "seed" => cfg.seed = Some(value.parse().map_err(|_| parse_err("an integer"))?),
                "dev_fraction" => {
                    cfg.dev_fraction = Some(value.parse().map_err(|_| parse_err("a number"))?)
                }
                "smoothing" => {
                    cfg.smoothing = Some(value.parse().map_err(|_| parse_err("a number"))?)
                }
                "keep_hashtag_words" => {
                    cfg.keep_hashtag_words =
                        Some(value.parse().map_err(|_| parse_err("true or false"))?)
                }
                "unicode_fold" => {
                    cfg.unicode_fold = Some(value.parse().map_err(|_| parse_err("true or false"))?)
                }
                "format" => cfg.format = Some(value.parse().map_err(|e: String| bad(e))?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        ConfigOverrides::parse(&read_to_string(path)?, base, path)
    }

    /// Applies `self` on top of `base`. A non-empty `scores` list replaces
    /// the base list.
    pub fn apply(self, mut base: ExperimentConfig) -> ExperimentConfig {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { base.$field = v; }
            )*};
        }
        take!(min_ensemble_size, out_dir, seed, dev_fraction, smoothing, keep_hashtag_words, unicode_fold, format);
        if self.eval.is_some() {
            base.eval = self.eval;
        }
        if self.train.is_some() {
            base.train = self.train;
        }
        if self.stopwords.is_some() {
            base.stopwords = self.stopwords;
        }
        if !self.scores.is_empty() {
            base.scores = self.scores;
        }
        base
    }
}

impl ExperimentConfig {
    pub fn normalizer(&self) -> Result<NormalizerConfig> {
        let stopwords = match &self.stopwords {
            Some(p) => load_stopwords(p)?,
            None => NormalizerConfig::default().stopwords().clone(),
        };
        NormalizerConfig::new(stopwords, self.keep_hashtag_words, self.unicode_fold)
    }

    fn input_files(&self) -> Vec<&Path> {
        let mut files: Vec<&Path> = self.scores.iter().map(PathBuf::as_path).collect();
        files.extend(self.eval.as_deref());
        files.extend(self.train.as_deref());
        files.extend(self.stopwords.as_deref());
        files
    }

    /// Canonical `key = value` rendering of every setting that affects the
    /// outputs; input files appear by content digest.
    pub fn manifest(&self) -> Result<String> {
        let digest = |p: &Path| -> Result<String> {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            Ok(hex(&Sha256::digest(&bytes)))
        };
        let mut out = String::new();
        if let Some(p) = &self.eval {
            let _ = writeln!(out, "eval = sha256:{}", digest(p)?);
        }
        if let Some(p) = &self.train {
            let _ = writeln!(out, "train = sha256:{}", digest(p)?);
            let _ = writeln!(out, "smoothing = {}", self.smoothing);
        }
        if self.eval.is_none() {
            let _ = writeln!(out, "dev_fraction = {}", self.dev_fraction);
            let _ = writeln!(out, "seed = {}", self.seed);
        }
        for p in &self.scores {
            let _ = writeln!(out, "scores = sha256:{}", digest(p)?);
        }
        let _ = writeln!(out, "min_ensemble_size = {}", self.min_ensemble_size);
        match &self.stopwords {
            Some(p) => {
                let _ = writeln!(out, "stopwords = sha256:{}", digest(p)?);
            }
            None => out.push_str("stopwords = bundled\n"),
        }
        let _ = writeln!(out, "keep_hashtag_words = {}", self.keep_hashtag_words);
        let _ = writeln!(out, "unicode_fold = {}", self.unicode_fold);
        Ok(out)
    }

    /// Output directory for this configuration: `<out_dir>/run-<12 hex>`.
    pub fn run_dir(&self) -> Result<PathBuf> {
        let h = hex(&Sha256::digest(self.manifest()?.as_bytes()));
        Ok(self.out_dir.join(format!("run-{}", &h[..12])))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Replaces characters that are awkward in file names.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "+-_.".contains(c) { c } else { '_' })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub run_dir: PathBuf,
    /// One report per ensemble, in enumeration order.
    pub reports: Vec<EvalReport>,
    /// Rendered report in the configured format.
    pub rendered: String,
    pub extra_ids: usize,
}

fn require_labeled(corpus: &Corpus, path: &Path) -> Result<()> {
    if corpus.is_labeled() && !corpus.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{}: evaluation needs a non-empty, fully labeled corpus",
            path.display()
        )))
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(Execution::default(), config)
}

pub fn run_experiment_with(exec: Execution, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    for p in config.input_files() {
        if !p.is_file() {
            return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
    }
    if config.eval.is_none() && config.train.is_none() {
        return Err(Error::invalid("experiment needs an `eval` corpus or a `train` corpus to split"));
    }
    if config.scores.is_empty() && config.train.is_none() {
        return Err(Error::invalid("experiment needs at least one score file or a `train` corpus"));
    }

    // evaluation corpus, plus the baseline's training corpus when requested
    let (eval, train) = match (&config.eval, &config.train) {
        (Some(e), t) => {
            let eval = load_corpus(e, true)?;
            require_labeled(&eval, e)?;
            let train = t.as_ref().map(|p| load_corpus(p, true)).transpose()?;
            (eval, train)
        }
        (None, Some(t)) => {
            let full = load_corpus(t, true)?;
            require_labeled(&full, t)?;
            let (train, dev) = split_corpus(&full, config.dev_fraction, config.seed)?;
            (dev, Some(train))
        }
        (None, None) => unreachable!("checked above"),
    };

    let mut sets: Vec<ScoreSet> = config
        .scores
        .iter()
        .map(|p| read_scores(p))
        .collect::<Result<_>>()?;
    if let Some(train) = &train {
        let normalizer = config.normalizer()?;
        let train_norm = normalize_corpus_with(exec, train, &normalizer);
        let model = BaselineModel::train(&train_norm, &train.labels(), config.smoothing)?;
        let eval_norm = normalize_corpus_with(exec, &eval, &normalizer);
        sets.push(model.score_set(exec, BASELINE_MODEL_NAME, &eval_norm)?);
    }

    let aligned = align(&sets, &eval.ids())?;
    let specs = enumerate_ensembles(aligned.model_names(), config.min_ensemble_size)?;
    let gold: HashMap<String, Label> = eval.labels();

    let mut reports = Vec::with_capacity(specs.len());
    let mut exports = Vec::with_capacity(specs.len());
    for spec in &specs {
        let fused = fuse_ensemble_with(exec, spec, &aligned.project(&spec.model_names)?)?;
        let predictions: HashMap<String, Label> =
            fused.iter().map(|f| (f.tweet_id.clone(), f.label)).collect();
        reports.push(evaluate(&spec.name, &predictions, &gold)?);
        exports.push((spec.name.clone(), fused_to_tsv(&spec.name, &fused)));
    }

    let run_dir = config.run_dir()?;
    if run_dir.exists() && !config.overwrite {
        return Err(Error::invalid(format!(
            "run directory {} already exists (pass --overwrite to replace it)",
            run_dir.display()
        )));
    }
    let pred_dir = run_dir.join("predictions");
    fs::create_dir_all(&pred_dir).map_err(|e| Error::io(&pred_dir, e))?;
    write_atomic(&run_dir.join("config.txt"), config.manifest()?.as_bytes())?;
    write_atomic(
        &run_dir.join("report.txt"),
        render_report(&reports, ReportFormat::Table).as_bytes(),
    )?;
    write_atomic(
        &run_dir.join("report.tsv"),
        render_report(&reports, ReportFormat::Delimited).as_bytes(),
    )?;
    for (name, text) in &exports {
        write_atomic(&pred_dir.join(format!("{}.tsv", file_stem(name))), text.as_bytes())?;
    }
    info!("wrote {} ensemble report(s) to {}", reports.len(), run_dir.display());

    Ok(ExperimentOutcome {
        rendered: render_report(&reports, config.format),
        run_dir,
        reports,
        extra_ids: aligned.extra_ids(),
    })
}
