//! Additive late fusion.
//!
//! The fused score of a tweet is the unweighted componentwise sum of the
//! per-model posterior vectors, `s_final = s_1 + s_2 + ... + s_n`, and the
//! fused label is its argmax. Exact ties go to [`Label::NotRelevant`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use itertools::Itertools;

use crate::corpus::{validate_id, Label};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::{numbered_lines, read_to_string, write_atomic};
use crate::scores::{format_prob, AlignedScores, ScoreVector};

/// A named subset of models whose scores are fused together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub name: String,
    pub model_names: Vec<String>,
}

impl EnsembleSpec {
    pub fn new(name: impl Into<String>, model_names: Vec<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("ensemble name is empty"));
        }
        if model_names.is_empty() {
            return Err(Error::invalid(format!("ensemble `{name}` has no models")));
        }
        let mut seen = HashSet::new();
        for m in &model_names {
            if m.is_empty() {
                return Err(Error::invalid(format!("ensemble `{name}` has an empty model name")));
            }
            if !seen.insert(m.as_str()) {
                return Err(Error::invalid(format!("ensemble `{name}` lists `{m}` twice")));
            }
        }
        Ok(EnsembleSpec { name, model_names })
    }

    /// Ensemble named by its members, sorted and joined with `+`.
    pub fn canonical<S: AsRef<str>>(model_names: &[S]) -> Result<Self> {
        let members: Vec<String> = model_names
            .iter()
            .map(|s| s.as_ref().to_string())
            .sorted()
            .collect();
        EnsembleSpec::new(members.join("+"), members)
    }

    pub fn size(&self) -> usize {
        self.model_names.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedScore {
    pub tweet_id: String,
    /// Accumulated score per class, indexed by [`Label::index`].
    pub s_final: [f64; 2],
    pub label: Label,
}

/// Argmax over the two classes; ties resolve to `NotRelevant`.
pub fn decide(s: [f64; 2]) -> Label {
    if s[1] > s[0] {
        Label::Relevant
    } else {
        Label::NotRelevant
    }
}

/// Fuses one tweet's per-model scores.
///
/// Each class total is summed over ascending values, so the result does
/// not depend on the order the models are listed in.
pub fn fuse(per_model: &[ScoreVector]) -> Result<FusedScore> {
    let first = per_model
        .first()
        .ok_or_else(|| Error::invalid("cannot fuse an empty list of scores"))?;
    if let Some(other) = per_model.iter().find(|s| s.tweet_id != first.tweet_id) {
        return Err(Error::invalid(format!(
            "cannot fuse scores of different tweets `{}` and `{}`",
            first.tweet_id, other.tweet_id
        )));
    }
    let mut s_final = [0.0; 2];
    for label in Label::ALL {
        s_final[label.index()] = per_model
            .iter()
            .map(|s| s.prob(label))
            .sorted_by(f64::total_cmp)
            .sum();
    }
    Ok(FusedScore {
        tweet_id: first.tweet_id.clone(),
        s_final,
        label: decide(s_final),
    })
}

pub fn fuse_ensemble(spec: &EnsembleSpec, aligned: &AlignedScores) -> Result<Vec<FusedScore>> {
    fuse_ensemble_with(Execution::default(), spec, aligned)
}

/// Fuses every tweet of `aligned`, which must hold exactly the ensemble's
/// models (in any order). Output follows corpus order.
pub fn fuse_ensemble_with(
    exec: Execution,
    spec: &EnsembleSpec,
    aligned: &AlignedScores,
) -> Result<Vec<FusedScore>> {
    let have: HashSet<&str> = aligned.model_names().iter().map(String::as_str).collect();
    let want: HashSet<&str> = spec.model_names.iter().map(String::as_str).collect();
    if have != want || aligned.model_names().len() != spec.size() {
        return Err(Error::invalid(format!(
            "ensemble `{}` needs models [{}] but the aligned scores hold [{}]",
            spec.name,
            spec.model_names.join(", "),
            aligned.model_names().join(", ")
        )));
    }
    exec.map(aligned.rows(), |row| fuse(row)).into_iter().collect()
}

/// Every subset of `model_names` with at least `min_size` members, by size
/// and then lexicographically by sorted member list.
pub fn enumerate_ensembles<S: AsRef<str>>(
    model_names: &[S],
    min_size: usize,
) -> Result<Vec<EnsembleSpec>> {
    let names: Vec<&str> = model_names.iter().map(AsRef::as_ref).sorted().collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(Error::invalid("empty model name"));
    }
    if let Some((dup, _)) = names.iter().tuple_windows().find(|(a, b)| a == b) {
        return Err(Error::invalid(format!("model `{dup}` listed twice")));
    }
    if min_size < 1 || min_size > names.len() {
        return Err(Error::invalid(format!(
            "minimum ensemble size {min_size} is outside 1..={}",
            names.len()
        )));
    }
    (min_size..=names.len())
        .flat_map(|k| names.iter().copied().combinations(k))
        .map(|members| EnsembleSpec::canonical(&members))
        .collect()
}

/// Renders the fused-prediction export:
/// `#ensemble=<name>` then `<tweet_id>\t<s0>\t<s1>\t<label>` per tweet.
pub fn fused_to_tsv(ensemble_name: &str, fused: &[FusedScore]) -> String {
    let mut out = format!("#ensemble={ensemble_name}\n");
    for f in fused {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            f.tweet_id,
            format_prob(f.s_final[0]),
            format_prob(f.s_final[1]),
            f.label
        );
    }
    out
}

pub fn write_fused(ensemble_name: &str, fused: &[FusedScore], path: &Path) -> Result<()> {
    write_atomic(path, fused_to_tsv(ensemble_name, fused).as_bytes())
}

/// Reads a fused-prediction export back as `(ensemble name, scores)`.
pub fn read_fused(path: &Path) -> Result<(String, Vec<FusedScore>)> {
    parse_fused(&read_to_string(path)?, path)
}

pub(crate) fn parse_fused(text: &str, path: &Path) -> Result<(String, Vec<FusedScore>)> {
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = numbered_lines(text);
    let name = match lines.next() {
        Some((_, h)) if h.starts_with("#ensemble=") && h.len() > "#ensemble=".len() => {
            h["#ensemble=".len()..].to_string()
        }
        other => {
            let n = other.map_or(1, |(n, _)| n);
            return Err(malformed(n, "missing `#ensemble=<name>` header".into()));
        }
    };
    let mut seen = HashSet::new();
    let mut fused = Vec::new();
    for (lineno, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, s0, s1, label] = fields.as_slice() else {
            return Err(malformed(
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        };
        validate_id(id).map_err(|e| malformed(lineno, e.to_string()))?;
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId { id: id.to_string() });
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| malformed(lineno, format!("`{s}` is not a valid score")))
        };
        let label = Label::parse(label.trim())
            .ok_or_else(|| malformed(lineno, format!("label {label:?} is not 0 or 1")))?;
        fused.push(FusedScore {
            tweet_id: id.to_string(),
            s_final: [num(s0)?, num(s1)?],
            label,
        });
    }
    Ok((name, fused))
}
