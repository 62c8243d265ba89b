//! Tweet corpora: loading, validation, persistence and stratified splitting.
//!
//! On disk a corpus is one record per line, `<id>\t<text>[\t<label>]`, UTF-8,
//! with `#`-prefixed comment lines and blank lines ignored. There is no
//! quoting: tabs and newlines never occur inside a field.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{numbered_lines, read_to_string, write_atomic};

/// Binary relevance class. The positive class for metrics is `Relevant`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NotRelevant = 0,
    Relevant = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NotRelevant, Label::Relevant];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NotRelevant),
            1 => Some(Label::Relevant),
            _ => None,
        }
    }

    /// Parses the on-disk form, exactly `0` or `1`.
    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "0" => Some(Label::NotRelevant),
            "1" => Some(Label::Relevant),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
}

impl Tweet {
    /// Builds a tweet, replacing tabs and line breaks in `text` with a
    /// single space each so the record stays representable on disk.
    pub fn new(id: impl Into<String>, text: &str, label: Option<Label>) -> Result<Self> {
        let id = id.into();
        validate_id(&id)?;
        let text = text
            .chars()
            .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
            .collect();
        Ok(Tweet { id, text, label })
    }
}

/// Checks that `id` can be written to and read back from any of the
/// line-oriented formats.
pub(crate) fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::invalid("tweet id is empty"));
    }
    if id.starts_with('#') {
        return Err(Error::invalid(format!("tweet id `{id}` starts with `#`")));
    }
    if id.chars().any(|c| matches!(c, '\t' | '\n' | '\r')) {
        return Err(Error::invalid(format!(
            "tweet id {id:?} contains a tab or line break"
        )));
    }
    Ok(())
}

/// An ordered, id-unique collection of tweets. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    labeled: bool,
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for t in &tweets {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::DuplicateId { id: t.id.clone() });
            }
        }
        let labeled = tweets.iter().all(|t| t.label.is_some());
        Ok(Corpus { tweets, labeled })
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// True iff every tweet carries a label.
    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn ids(&self) -> Vec<&str> {
        self.tweets.iter().map(|t| t.id.as_str()).collect()
    }

    /// Gold labels keyed by id. Unlabeled tweets are omitted.
    pub fn labels(&self) -> HashMap<String, Label> {
        self.tweets
            .iter()
            .filter_map(|t| t.label.map(|l| (t.id.clone(), l)))
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.tweets {
            out.push_str(&t.id);
            out.push('\t');
            out.push_str(&t.text);
            if let Some(l) = t.label {
                out.push('\t');
                out.push_str(&l.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Loads a corpus file. With `has_labels == false` any third field is
/// still validated but dropped.
pub fn load_corpus(path: &Path, has_labels: bool) -> Result<Corpus> {
    let text = read_to_string(path)?;
    parse_corpus(&text, path, has_labels)
}

pub(crate) fn parse_corpus(text: &str, path: &Path, has_labels: bool) -> Result<Corpus> {
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut tweets = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in numbered_lines(text) {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, body, label) = match fields.as_slice() {
            [id, body] => (*id, *body, None),
            [id, body, label] => {
                let parsed = Label::parse(label.trim()).ok_or_else(|| {
                    malformed(lineno, format!("label {label:?} is not 0 or 1"))
                })?;
                (*id, *body, Some(parsed))
            }
            _ => {
                return Err(malformed(
                    lineno,
                    format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        if id.is_empty() {
            return Err(malformed(lineno, "empty tweet id".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId { id: id.to_string() });
        }
        let label = if has_labels { label } else { None };
        tweets.push(Tweet::new(id, body, label).map_err(|e| malformed(lineno, e.to_string()))?);
    }
    let labeled = has_labels && tweets.iter().all(|t| t.label.is_some());
    Ok(Corpus { tweets, labeled })
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    write_atomic(path, corpus.to_tsv().as_bytes())
}

pub const DEFAULT_DEV_FRACTION: f64 = 0.2;

/// Stratified split into `(train, dev)`.
///
/// For each class with `n` members, `round(dev_fraction * n)` of them
/// (half away from zero) are drawn into the dev split by a seeded shuffle.
/// Both outputs keep the input order.
pub fn split_corpus(corpus: &Corpus, dev_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "dev fraction {dev_fraction} is outside (0, 1)"
        )));
    }
    if !corpus.is_labeled() || corpus.is_empty() {
        return Err(Error::invalid("cannot stratify an unlabeled corpus"));
    }

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, t) in corpus.tweets.iter().enumerate() {
        // labeled corpus: unwrap is safe
        by_class[t.label.unwrap().index()].push(i);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::invalid(
            "cannot stratify a corpus that contains only one class",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_dev = vec![false; corpus.len()];
    for members in &mut by_class {
        let take = (dev_fraction * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            in_dev[i] = true;
        }
    }

    let (dev, train): (Vec<_>, Vec<_>) = corpus
        .tweets
        .iter()
        .cloned()
        .zip(in_dev)
        .partition(|(_, d)| *d);
    let strip = |v: Vec<(Tweet, bool)>| Corpus {
        tweets: v.into_iter().map(|(t, _)| t).collect(),
        labeled: true,
    };
    Ok((strip(train), strip(dev)))
}
