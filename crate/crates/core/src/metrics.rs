//! Binary relevance metrics and results tables.
//!
//! `Relevant` is the positive class. Any ratio whose denominator is zero is
//! reported as 0 rather than NaN.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub ensemble_name: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    /// Builds a report from confusion counts, deriving P/R/F1.
    pub fn from_counts(ensemble_name: impl Into<String>, tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        EvalReport {
            ensemble_name: ensemble_name.into(),
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1: f1_from_pr(precision, recall),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from_pr(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Scores `predictions` against `gold`. Both must cover the same ids.
pub fn evaluate(
    ensemble_name: &str,
    predictions: &HashMap<String, Label>,
    gold: &HashMap<String, Label>,
) -> Result<EvalReport> {
    if gold.is_empty() && predictions.is_empty() {
        return Err(Error::invalid("nothing to evaluate: no predictions and no gold labels"));
    }
    let mismatched: BTreeSet<&str> = predictions
        .keys()
        .filter(|id| !gold.contains_key(*id))
        .chain(gold.keys().filter(|id| !predictions.contains_key(*id)))
        .map(String::as_str)
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::IdMismatch {
            count: mismatched.len(),
            sample: mismatched.iter().take(10).map(|s| s.to_string()).collect(),
        });
    }

    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (id, &truth) in gold {
        match (predictions[id], truth) {
            (Label::Relevant, Label::Relevant) => tp += 1,
            (Label::Relevant, Label::NotRelevant) => fp += 1,
            (Label::NotRelevant, Label::Relevant) => fn_ += 1,
            (Label::NotRelevant, Label::NotRelevant) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(ensemble_name, tp, fp, fn_, tn))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Table,
    Delimited,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "delimited" => Ok(ReportFormat::Delimited),
            other => Err(format!("unknown report format `{other}` (expected table or delimited)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Table => "table",
            ReportFormat::Delimited => "delimited",
        })
    }
}

/// Ensemble size implied by a `+`-joined canonical name.
fn member_count(name: &str) -> usize {
    name.split('+').count()
}

/// Renders one row per report, ordered by ensemble size and then name
/// (the ensemble enumeration order), with metrics to 4 decimal places.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    let mut rows: Vec<&EvalReport> = reports.iter().collect();
    rows.sort_by(|a, b| {
        member_count(&a.ensemble_name)
            .cmp(&member_count(&b.ensemble_name))
            .then_with(|| a.ensemble_name.cmp(&b.ensemble_name))
    });

    let mut out = String::new();
    match format {
        ReportFormat::Delimited => {
            out.push_str("ensemble\tprecision\trecall\tf1\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{}\t{:.4}\t{:.4}\t{:.4}",
                    r.ensemble_name, r.precision, r.recall, r.f1
                );
            }
        }
        ReportFormat::Table => {
            let width = rows
                .iter()
                .map(|r| r.ensemble_name.chars().count())
                .chain(std::iter::once("ensemble".len()))
                .max()
                .unwrap_or(0);
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}",
                "ensemble", "precision", "recall", "f1", "tp", "fp", "fn", "tn"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>9.4}  {:>6.4}  {:>6.4}  {:>6}  {:>6}  {:>6}  {:>6}",
                    r.ensemble_name, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_, r.tn
                );
            }
        }
    }
    out
}
