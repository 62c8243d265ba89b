//! Bag-of-words multinomial naive Bayes.
//!
//! A closed-form, deterministic classifier that produces posterior
//! probabilities through the same [`ScoreSet`] interface as any external
//! model, so the pipeline runs end to end without one.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::{read_to_string, write_atomic};
use crate::normalize::NormalizedTweet;
use crate::scores::{ScoreSet, ScoreVector};

pub const DEFAULT_SMOOTHING: f64 = 1.0;

const FORMAT_TAG: &str = "tweetfuse-multinomial-nb";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel {
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
    log_priors: [f64; 2],
    /// `log_likelihoods[class][token_index]`
    log_likelihoods: [Vec<f64>; 2],
    smoothing: f64,
}

impl BaselineModel {
    /// Fits class priors from document counts and per-class token
    /// likelihoods `(count + smoothing) / (class_total + smoothing * |V|)`.
    ///
    /// Every tweet must have an entry in `labels`, and both classes must
    /// occur.
    pub fn train(
        normalized: &[NormalizedTweet],
        labels: &HashMap<String, Label>,
        smoothing: f64,
    ) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::invalid(format!("smoothing must be positive, got {smoothing}")));
        }
        let mut docs = [0usize; 2];
        let mut counts: BTreeMap<&str, [u64; 2]> = BTreeMap::new();
        for t in normalized {
            let label = labels
                .get(&t.id)
                .ok_or_else(|| Error::invalid(format!("no label for training tweet `{}`", t.id)))?;
            let c = label.index();
            docs[c] += 1;
            for tok in &t.tokens {
                counts.entry(tok.as_str()).or_default()[c] += 1;
            }
        }
        if docs.contains(&0) {
            return Err(Error::invalid(
                "training data must contain both relevant and not-relevant tweets",
            ));
        }

        let total_docs = (docs[0] + docs[1]) as f64;
        let log_priors = docs.map(|d| (d as f64 / total_docs).ln());

        let vocabulary: Vec<String> = counts.keys().map(|t| t.to_string()).collect();
        let vocab_size = vocabulary.len() as f64;
        let log_likelihoods = [0, 1].map(|c| {
            let class_total: u64 = counts.values().map(|n| n[c]).sum();
            let denom = class_total as f64 + smoothing * vocab_size;
            counts
                .values()
                .map(|n| ((n[c] as f64 + smoothing) / denom).ln())
                .collect::<Vec<_>>()
        });
        Ok(BaselineModel::from_parts(vocabulary, log_priors, log_likelihoods, smoothing))
    }

    fn from_parts(
        vocabulary: Vec<String>,
        log_priors: [f64; 2],
        log_likelihoods: [Vec<f64>; 2],
        smoothing: f64,
    ) -> Self {
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        BaselineModel {
            vocabulary,
            index,
            log_priors,
            log_likelihoods,
            smoothing,
        }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn log_priors(&self) -> [f64; 2] {
        self.log_priors
    }

    /// Log-likelihood of `token` under `label`, if it is in the vocabulary.
    pub fn log_likelihood(&self, token: &str, label: Label) -> Option<f64> {
        self.index
            .get(token)
            .map(|&i| self.log_likelihoods[label.index()][i])
    }

    pub fn log_likelihoods(&self, label: Label) -> &[f64] {
        &self.log_likelihoods[label.index()]
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Posterior over both classes. Tokens outside the vocabulary carry no
    /// evidence; a tweet with none in vocabulary gets the class prior.
    pub fn predict(&self, tweet: &NormalizedTweet) -> ScoreVector {
        let mut joint = self.log_priors;
        for tok in &tweet.tokens {
            if let Some(&i) = self.index.get(tok) {
                joint[0] += self.log_likelihoods[0][i];
                joint[1] += self.log_likelihoods[1][i];
            }
        }
        // logistic form of the two-class softmax; each side computed directly
        let p_relevant = 1.0 / (1.0 + (joint[0] - joint[1]).exp());
        let p_not_relevant = 1.0 / (1.0 + (joint[1] - joint[0]).exp());
        ScoreVector {
            tweet_id: tweet.id.clone(),
            p_not_relevant,
            p_relevant,
        }
    }

    pub fn predict_all(&self, exec: Execution, tweets: &[NormalizedTweet]) -> Vec<ScoreVector> {
        exec.map(tweets, |t| self.predict(t))
    }

    /// Scores every tweet into a score set named `model_name`.
    pub fn score_set(
        &self,
        exec: Execution,
        model_name: &str,
        tweets: &[NormalizedTweet],
    ) -> Result<ScoreSet> {
        ScoreSet::from_scores(model_name, self.predict_all(exec, tweets))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            smoothing: self.smoothing,
            log_priors: self.log_priors,
            vocabulary: self.vocabulary.clone(),
            log_likelihoods: self.log_likelihoods.clone(),
        };
        // serializing plain numbers and strings cannot fail
        serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|source| Error::ModelFormat {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |msg: String| Error::invalid(format!("model file {}: {msg}", path.display()));
        if file.format != FORMAT_TAG || file.version != FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format `{}` version {}",
                file.format, file.version
            )));
        }
        if file.smoothing.is_nan() || file.smoothing <= 0.0 {
            return Err(bad(format!("smoothing {} is not positive", file.smoothing)));
        }
        if file.log_likelihoods.iter().any(|l| l.len() != file.vocabulary.len()) {
            return Err(bad("likelihood table does not match vocabulary size".into()));
        }
        let model = BaselineModel::from_parts(
            file.vocabulary,
            file.log_priors,
            file.log_likelihoods,
            file.smoothing,
        );
        if model.index.len() != model.vocabulary.len() {
            return Err(bad("vocabulary has duplicate tokens".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        BaselineModel::from_json(&read_to_string(path)?, path)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    smoothing: f64,
    log_priors: [f64; 2],
    vocabulary: Vec<String>,
    log_likelihoods: [Vec<f64>; 2],
}
