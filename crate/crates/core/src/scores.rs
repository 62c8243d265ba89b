//! Score files: the interchange format between scorers and fusion.
//!
//! ```text
//! #model=<name>
//! <tweet_id>\t<p_not_relevant>\t<p_relevant>
//! ```
//!
//! Any classifier (the bundled baseline or an external transformer) takes
//! part in fusion by writing one of these files. Probabilities are written
//! in scientific notation with 17 significant digits, which reproduces
//! every `f64` exactly on re-read.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::map::Entry;
use indexmap::IndexMap;
use log::warn;

use crate::corpus::{validate_id, Label};
use crate::error::{Error, Result};
use crate::io::{numbered_lines, read_to_string, write_atomic};

/// Allowed deviation of `p_not_relevant + p_relevant` from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;

pub(crate) fn format_prob(x: f64) -> String {
    format!("{x:.16e}")
}

/// Posterior probabilities of one model for one tweet.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub tweet_id: String,
    pub p_not_relevant: f64,
    pub p_relevant: f64,
}

impl ScoreVector {
    pub fn new(tweet_id: impl Into<String>, p_not_relevant: f64, p_relevant: f64) -> Result<Self> {
        let tweet_id = tweet_id.into();
        let bad = |msg: String| Error::InvalidScore {
            tweet_id: tweet_id.clone(),
            msg,
        };
        for p in [p_not_relevant, p_relevant] {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("probability {p} outside [0, 1]")));
            }
        }
        let sum = p_not_relevant + p_relevant;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(bad(format!(
                "probabilities {p_not_relevant} + {p_relevant} = {sum}, expected 1 within {SUM_TOLERANCE:e}"
            )));
        }
        Ok(ScoreVector {
            tweet_id,
            p_not_relevant,
            p_relevant,
        })
    }

    /// `[p_not_relevant, p_relevant]`, indexed by [`Label::index`].
    pub fn probs(&self) -> [f64; 2] {
        [self.p_not_relevant, self.p_relevant]
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.probs()[label.index()]
    }
}

/// All scores produced by one model, in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSet {
    model_name: String,
    scores: IndexMap<String, ScoreVector>,
}

impl ScoreSet {
    pub fn new(model_name: impl Into<String>) -> Result<Self> {
        let model_name = model_name.into();
        if model_name.trim().is_empty() {
            return Err(Error::invalid("model name is empty"));
        }
        if model_name.chars().any(char::is_control) {
            return Err(Error::invalid(format!(
                "model name {model_name:?} contains control characters"
            )));
        }
        Ok(ScoreSet {
            model_name,
            scores: IndexMap::new(),
        })
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn insert(&mut self, score: ScoreVector) -> Result<()> {
        validate_id(&score.tweet_id)?;
        match self.scores.entry(score.tweet_id.clone()) {
            Entry::Occupied(_) => Err(Error::DuplicateId { id: score.tweet_id }),
            Entry::Vacant(v) => {
                v.insert(score);
                Ok(())
            }
        }
    }

    pub fn get(&self, tweet_id: &str) -> Option<&ScoreVector> {
        self.scores.get(tweet_id)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScoreVector> {
        self.scores.values()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#model={}\n", self.model_name);
        for s in self.scores.values() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                s.tweet_id,
                format_prob(s.p_not_relevant),
                format_prob(s.p_relevant)
            );
        }
        out
    }
}

impl ScoreSet {
    pub fn from_scores(
        model_name: impl Into<String>,
        scores: impl IntoIterator<Item = ScoreVector>,
    ) -> Result<Self> {
        let mut set = ScoreSet::new(model_name)?;
        for s in scores {
            set.insert(s)?;
        }
        Ok(set)
    }
}

pub fn write_scores(set: &ScoreSet, path: &Path) -> Result<()> {
    write_atomic(path, set.to_tsv().as_bytes())
}

pub fn read_scores(path: &Path) -> Result<ScoreSet> {
    parse_scores(&read_to_string(path)?, path)
}

pub(crate) fn parse_scores(text: &str, path: &Path) -> Result<ScoreSet> {
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = numbered_lines(text);
    let model_name = match lines.next() {
        Some((_, header)) if header.starts_with("#model=") => &header["#model=".len()..],
        Some((n, _)) => return Err(malformed(n, "missing `#model=<name>` header".into())),
        None => return Err(malformed(1, "missing `#model=<name>` header".into())),
    };
    let mut set = ScoreSet::new(model_name).map_err(|e| malformed(1, e.to_string()))?;
    for (lineno, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, p0, p1] = fields.as_slice() else {
            return Err(malformed(
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| malformed(lineno, format!("tweet `{id}`: `{s}` is not a number")))
        };
        let score = ScoreVector::new(*id, parse(p0)?, parse(p1)?)?;
        set.insert(score)?;
    }
    Ok(set)
}

/// Per-tweet, per-model score vectors in corpus order and model order.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedScores {
    model_names: Vec<String>,
    tweet_ids: Vec<String>,
    rows: Vec<Vec<ScoreVector>>,
    extra_ids: usize,
}

impl AlignedScores {
    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn tweet_ids(&self) -> &[String] {
        &self.tweet_ids
    }

    /// One row per tweet; each row holds one score per model.
    pub fn rows(&self) -> &[Vec<ScoreVector>] {
        &self.rows
    }

    /// Number of score entries, summed over models, whose id was not in the
    /// corpus.
    pub fn extra_ids(&self) -> usize {
        self.extra_ids
    }

    /// Restricts to `models`, in the given order.
    pub fn project<S: AsRef<str>>(&self, models: &[S]) -> Result<AlignedScores> {
        let cols = models
            .iter()
            .map(|m| {
                self.model_names
                    .iter()
                    .position(|n| n == m.as_ref())
                    .ok_or_else(|| Error::invalid(format!("no scores for model `{}`", m.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AlignedScores {
            model_names: cols.iter().map(|&c| self.model_names[c].clone()).collect(),
            tweet_ids: self.tweet_ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                .collect(),
            extra_ids: self.extra_ids,
        })
    }
}

/// Lines up every set against `corpus_ids`. A corpus id missing from any
/// set is an error; ids a set has beyond the corpus are counted and
/// otherwise ignored.
pub fn align<S: AsRef<str>>(sets: &[ScoreSet], corpus_ids: &[S]) -> Result<AlignedScores> {
    let mut names = HashSet::new();
    for s in sets {
        if !names.insert(s.model_name()) {
            return Err(Error::invalid(format!(
                "model `{}` appears more than once",
                s.model_name()
            )));
        }
    }
    let mut rows = Vec::with_capacity(corpus_ids.len());
    for id in corpus_ids {
        let id = id.as_ref();
        let row = sets
            .iter()
            .map(|s| {
                s.get(id).cloned().ok_or_else(|| Error::MissingScore {
                    model: s.model_name().to_string(),
                    tweet_id: id.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let wanted: HashSet<&str> = corpus_ids.iter().map(AsRef::as_ref).collect();
    let mut extra_ids = 0;
    for s in sets {
        let extra = s.iter().filter(|v| !wanted.contains(v.tweet_id.as_str())).count();
        if extra > 0 {
            warn!("model `{}`: ignoring {extra} score(s) for ids outside the corpus", s.model_name());
        }
        extra_ids += extra;
    }
    Ok(AlignedScores {
        model_names: sets.iter().map(|s| s.model_name().to_string()).collect(),
        tweet_ids: corpus_ids.iter().map(|s| s.as_ref().to_string()).collect(),
        rows,
        extra_ids,
    })
}
