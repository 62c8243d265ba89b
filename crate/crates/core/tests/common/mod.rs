//! Synthetic corpora and scorers shared by the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweetfuse::corpus::{Corpus, Label, Tweet};
use tweetfuse::scores::{ScoreSet, ScoreVector};

pub const KEYWORD: &str = "floodwater";

const FILLER: &[&str] = &[
    "river", "city", "today", "people", "road", "bridge", "news", "photo", "street", "storm",
    "water", "update",
];
const NOISE: &[&str] = &[
    "@anna", "@meteo_it", "http://t.co/ab12", "https://x.com/p/9?s=1", "www.news.example/a",
    "😭", "🌊", "🌧️", "👨‍👩‍👧", "❗", "!!", "...", "#Venezia", "#acquaalta", "RT", "&amp;",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random tweet-like string with mentions, URLs, hashtags and emoji mixed in.
pub fn noisy_text(rng: &mut ChaCha8Rng, planted: Option<&str>) -> String {
    let len = rng.random_range(4..12);
    let mut words: Vec<String> = (0..len)
        .map(|_| {
            if rng.random_bool(0.3) {
                NOISE.choose(rng).unwrap().to_string()
            } else {
                let w = FILLER.choose(rng).unwrap();
                if rng.random_bool(0.2) { w.to_uppercase() } else { w.to_string() }
            }
        })
        .collect();
    if let Some(k) = planted {
        let at = rng.random_range(0..=words.len());
        words.insert(at, k.to_string());
    }
    words.join(" ")
}

/// Balanced labeled corpus in which every relevant tweet contains
/// [`KEYWORD`] and no other tweet does. `label_noise` flips that fraction of
/// labels afterwards.
pub fn planted_corpus(n: usize, label_noise: f64, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let tweets = (0..n)
        .map(|i| {
            let relevant = i % 2 == 0;
            let text = noisy_text(&mut r, relevant.then_some(KEYWORD));
            let mut label = if relevant { Label::Relevant } else { Label::NotRelevant };
            if r.random_bool(label_noise) {
                label = if relevant { Label::NotRelevant } else { Label::Relevant };
            }
            Tweet::new(format!("tw{i:05}"), &text, Some(label)).unwrap()
        })
        .collect();
    Corpus::new(tweets).unwrap()
}

/// How a synthetic scorer behaves: it is right with probability `accuracy`,
/// and puts a probability drawn from `right` (or `wrong`) on the true class.
#[derive(Clone, Copy, Debug)]
pub struct ScorerProfile {
    pub accuracy: f64,
    pub right: (f64, f64),
    pub wrong: (f64, f64),
}

pub fn synthetic_scores(corpus: &Corpus, name: &str, profile: ScorerProfile, seed: u64) -> ScoreSet {
    let mut r = rng(seed);
    let scores = corpus.tweets().iter().map(|t| {
        let (lo, hi) = if r.random_bool(profile.accuracy) { profile.right } else { profile.wrong };
        let p_true = r.random_range(lo..=hi);
        let p_rel = match t.label.unwrap() {
            Label::Relevant => p_true,
            Label::NotRelevant => 1.0 - p_true,
        };
        ScoreVector::new(t.id.clone(), 1.0 - p_rel, p_rel).unwrap()
    });
    ScoreSet::from_scores(name, scores).unwrap()
}

/// Balanced labeled corpus with filler text only.
pub fn plain_corpus(n: usize, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let tweets = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Relevant } else { Label::NotRelevant };
            Tweet::new(format!("p{i:05}"), &noisy_text(&mut r, None), Some(label)).unwrap()
        })
        .collect();
    Corpus::new(tweets).unwrap()
}
