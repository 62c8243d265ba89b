use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tweetfuse::baseline::{BaselineModel, DEFAULT_SMOOTHING};
use tweetfuse::corpus::{load_corpus, split_corpus, write_corpus, Label, DEFAULT_DEV_FRACTION};
use tweetfuse::exec::Execution;
use tweetfuse::experiment::{run_experiment, ConfigOverrides, ExperimentConfig, DEFAULT_SEED};
use tweetfuse::fusion::{fuse_ensemble, read_fused, write_fused, EnsembleSpec};
use tweetfuse::metrics::{evaluate, render_report, ReportFormat};
use tweetfuse::normalize::{load_stopwords, normalize_corpus, write_normalized, NormalizerConfig};
use tweetfuse::scores::{align, read_scores, write_scores};

/// Flood-relevance tweet classification with late fusion of model scores.
#[derive(Parser)]
#[command(name = "tweetfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a corpus and write `<id>\t<tokens>` lines.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        norm: NormalizerArgs,
    },
    /// Stratified train/dev split of a labeled corpus.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        dev_out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEV_FRACTION)]
        dev_fraction: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Fit the naive Bayes baseline on a labeled corpus.
    TrainBaseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
        #[command(flatten)]
        norm: NormalizerArgs,
    },
    /// Write a score file for every tweet of a corpus using a baseline model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Model name recorded in the score file header.
        #[arg(long, default_value = "baseline")]
        name: String,
        #[command(flatten)]
        norm: NormalizerArgs,
    },
    /// Fuse score files into one fused-prediction export.
    Fuse {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long = "scores", required = true)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Ensemble name; defaults to the sorted model names joined by `+`.
        #[arg(long)]
        name: Option<String>,
    },
    /// Score a fused-prediction export against gold labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
    /// Fuse and evaluate every ensemble of the given models.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct NormalizerArgs {
    /// Stopword list, one word per line (default: bundled English list).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Drop hashtag words instead of keeping them without the `#`.
    #[arg(long)]
    no_hashtag_words: bool,
    /// Skip Unicode compatibility folding.
    #[arg(long)]
    no_unicode_fold: bool,
}

impl NormalizerArgs {
    fn config(&self) -> Result<NormalizerConfig> {
        let stopwords = match &self.stopwords {
            Some(p) => load_stopwords(p)?,
            None => NormalizerConfig::default().stopwords().clone(),
        };
        Ok(NormalizerConfig::new(stopwords, !self.no_hashtag_words, !self.no_unicode_fold)?)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value config file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labeled corpus to evaluate on.
    #[arg(long, alias = "corpus")]
    eval: Option<PathBuf>,
    /// Labeled corpus to train the baseline on (it joins the grid as `baseline`).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long = "scores")]
    scores: Vec<PathBuf>,
    #[arg(long)]
    min_ensemble_size: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dev_fraction: Option<f64>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Replace an existing run directory.
    #[arg(long)]
    overwrite: bool,
    #[command(flatten)]
    norm: NormalizerArgs,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg = ConfigOverrides::load(path)?.apply(cfg);
        }
        let flags = ConfigOverrides {
            eval: self.eval,
            train: self.train,
            scores: self.scores,
            min_ensemble_size: self.min_ensemble_size,
            out_dir: self.out_dir,
            seed: self.seed,
            dev_fraction: self.dev_fraction,
            smoothing: self.smoothing,
            stopwords: self.norm.stopwords,
            keep_hashtag_words: self.norm.no_hashtag_words.then_some(false),
            unicode_fold: self.norm.no_unicode_fold.then_some(false),
            format: self.format,
        };
        let mut cfg = flags.apply(cfg);
        cfg.overwrite = self.overwrite;
        Ok(cfg)
    }
}

fn labeled_corpus(path: &Path) -> Result<tweetfuse::corpus::Corpus> {
    let corpus = load_corpus(path, true)?;
    if !corpus.is_labeled() {
        bail!("{}: every line needs a 0/1 label", path.display());
    }
    Ok(corpus)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess { input, output, norm } => {
            let corpus = load_corpus(&input, true)?;
            let normalized = normalize_corpus(&corpus, &norm.config()?);
            write_normalized(&normalized, &output)?;
            eprintln!("normalized {} tweet(s) into {}", normalized.len(), output.display());
        }
        Command::Split {
            input,
            train_out,
            dev_out,
            dev_fraction,
            seed,
        } => {
            let corpus = labeled_corpus(&input)?;
            let (train, dev) = split_corpus(&corpus, dev_fraction, seed)?;
            write_corpus(&train, &train_out)?;
            write_corpus(&dev, &dev_out)?;
            eprintln!("split {} tweet(s): {} train, {} dev", corpus.len(), train.len(), dev.len());
        }
        Command::TrainBaseline {
            corpus,
            output,
            smoothing,
            norm,
        } => {
            let data = labeled_corpus(&corpus)?;
            let normalized = normalize_corpus(&data, &norm.config()?);
            let model = BaselineModel::train(&normalized, &data.labels(), smoothing)
                .with_context(|| format!("training on {}", corpus.display()))?;
            model.save(&output)?;
            eprintln!(
                "trained on {} tweet(s), vocabulary {}, saved {}",
                data.len(),
                model.vocabulary().len(),
                output.display()
            );
        }
        Command::Score {
            model,
            corpus,
            output,
            name,
            norm,
        } => {
            let model = BaselineModel::load(&model)?;
            let data = load_corpus(&corpus, false)?;
            let normalized = normalize_corpus(&data, &norm.config()?);
            let set = model.score_set(Execution::default(), &name, &normalized)?;
            write_scores(&set, &output)?;
            eprintln!("scored {} tweet(s) into {}", set.len(), output.display());
        }
        Command::Fuse {
            corpus,
            scores,
            output,
            name,
        } => {
            let data = load_corpus(&corpus, false)?;
            let sets = scores.iter().map(|p| read_scores(p)).collect::<Result<Vec<_>, _>>()?;
            let aligned = align(&sets, &data.ids())?;
            let canonical = EnsembleSpec::canonical(aligned.model_names())?;
            let spec = match name {
                Some(n) => EnsembleSpec::new(n, canonical.model_names)?,
                None => canonical,
            };
            let fused = fuse_ensemble(&spec, &aligned.project(&spec.model_names)?)?;
            write_fused(&spec.name, &fused, &output)?;
            eprintln!("fused {} model(s) over {} tweet(s)", spec.size(), fused.len());
        }
        Command::Evaluate {
            predictions,
            corpus,
            format,
        } => {
            let gold = labeled_corpus(&corpus)?;
            let (name, fused) = read_fused(&predictions)?;
            let preds: HashMap<String, Label> =
                fused.into_iter().map(|f| (f.tweet_id, f.label)).collect();
            let report = evaluate(&name, &preds, &gold.labels())?;
            print!("{}", render_report(&[report], format));
        }
        Command::Experiment(args) => {
            let cfg = args.resolve()?;
            let outcome = run_experiment(&cfg)?;
            if outcome.extra_ids > 0 {
                eprintln!(
                    "warning: {} score(s) for ids outside the evaluation corpus were ignored",
                    outcome.extra_ids
                );
            }
            print!("{}", outcome.rendered);
            eprintln!("run directory: {}", outcome.run_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
