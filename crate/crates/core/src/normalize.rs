//! Tweet text cleaning.
//!
//! [`normalize`] applies a fixed rule sequence to raw text:
//!
//! 1. Unicode compatibility folding (NFKC, optional) and lowercasing
//! 2. URL removal (`http://`, `https://` or `www.` up to the next whitespace)
//! 3. mention removal (`@` followed by word characters)
//! 4. hashtags: the `#` is stripped, the word kept or dropped per config
//! 5. emoji and pictographic symbol removal
//! 6. punctuation removal
//! 7. whitespace tokenization
//! 8. stopword filtering
//!
//! Removal deletes characters rather than replacing them with spaces, so a
//! cleaned text never has more tokens than the whitespace-split input.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::{read_to_string, write_atomic};

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static HASHTAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#(\w+)").unwrap());

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Parses a stopword list: one word per line, `#` comments and blank lines
/// skipped, entries trimmed and lowercased.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    Ok(parse_stopwords(&read_to_string(path)?))
}

/// The English list shipped in `data/stopwords_en.txt`.
pub fn bundled_stopwords() -> HashSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizerConfig {
    stopwords: HashSet<String>,
    pub keep_hashtag_words: bool,
    pub unicode_fold: bool,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        NormalizerConfig {
            stopwords: bundled_stopwords(),
            keep_hashtag_words: true,
            unicode_fold: true,
        }
    }
}

impl NormalizerConfig {
    pub fn new(
        stopwords: HashSet<String>,
        keep_hashtag_words: bool,
        unicode_fold: bool,
    ) -> Result<Self> {
        for w in &stopwords {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid stopword {w:?}")));
            }
            if *w != w.to_lowercase() {
                return Err(Error::invalid(format!("stopword {w:?} is not lowercase")));
            }
        }
        Ok(NormalizerConfig {
            stopwords,
            keep_hashtag_words,
            unicode_fold,
        })
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedTweet {
    pub id: String,
    pub tokens: Vec<String>,
}

/// True for codepoints in the emoji, pictograph, dingbat and miscellaneous
/// symbol blocks, plus the joiners and selectors used to build emoji
/// sequences.
pub fn is_emoji_or_symbol(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FBFF
        | 0x2190..=0x21FF
        | 0x2300..=0x23FF
        | 0x25A0..=0x27BF
        | 0x2B00..=0x2BFF
        | 0x200D
        | 0x20E3
        | 0xFE00..=0xFE0F
        | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0xE0020..=0xE007F)
}

/// Compatibility folding that never introduces whitespace: characters whose
/// NFKC expansion contains a space (spacing diacritics and the like) keep
/// only the non-space part of that expansion.
fn fold(text: &str) -> String {
    let mut pre = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_whitespace() {
            pre.push(c);
            continue;
        }
        let mut expansion = std::iter::once(c).nfkc().peekable();
        if expansion.peek() == Some(&c) {
            pre.push(c);
        } else {
            pre.extend(expansion.filter(|ch| !ch.is_whitespace()));
        }
    }
    pre.nfkc().collect()
}

fn fold_and_lowercase(text: &str, unicode_fold: bool) -> String {
    if unicode_fold {
        // lowercasing can leave compatibility forms behind, so fold again
        fold(&fold(text).to_lowercase())
    } else {
        text.to_lowercase()
    }
}

/// Emoji and punctuation removal: keeps only alphanumerics and whitespace.
fn strip_symbols(text: &str) -> String {
    text.chars()
        .filter(|&c| !is_emoji_or_symbol(c))
        .filter(|&c| c.is_alphanumeric() || c.is_whitespace())
        .collect()
}

pub fn normalize(text: &str, config: &NormalizerConfig) -> Vec<String> {
    let lowered = fold_and_lowercase(text, config.unicode_fold);
    let no_urls = URL_RE.replace_all(&lowered, "");
    let no_mentions = MENTION_RE.replace_all(&no_urls, "");
    let hashtags = if config.keep_hashtag_words {
        HASHTAG_RE.replace_all(&no_mentions, "$1")
    } else {
        HASHTAG_RE.replace_all(&no_mentions, "")
    };
    let mut cleaned = strip_symbols(&hashtags);
    if config.unicode_fold {
        // deleting characters can leave combining marks out of canonical order
        for _ in 0..4 {
            let refolded = strip_symbols(&fold(&cleaned));
            if refolded == cleaned {
                break;
            }
            cleaned = refolded;
        }
    }
    cleaned
        .split_whitespace()
        .filter(|tok| !config.is_stopword(tok))
        .map(str::to_owned)
        .collect()
}

pub fn normalize_corpus(corpus: &Corpus, config: &NormalizerConfig) -> Vec<NormalizedTweet> {
    normalize_corpus_with(Execution::default(), corpus, config)
}

pub fn normalize_corpus_with(
    exec: Execution,
    corpus: &Corpus,
    config: &NormalizerConfig,
) -> Vec<NormalizedTweet> {
    exec.map(corpus.tweets(), |t| NormalizedTweet {
        id: t.id.clone(),
        tokens: normalize(&t.text, config),
    })
}

/// Renders the normalized export, `<id>\t<token token ...>` per line.
pub fn normalized_to_tsv(tweets: &[NormalizedTweet]) -> String {
    let mut out = String::new();
    for t in tweets {
        out.push_str(&t.id);
        out.push('\t');
        out.push_str(&t.tokens.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_normalized(tweets: &[NormalizedTweet], path: &Path) -> Result<()> {
    write_atomic(path, normalized_to_tsv(tweets).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn worked_example() {
        let cfg = NormalizerConfig::default();
        assert!(cfg.is_stopword("in"));
        assert_eq!(
            normalize("@anna Flood warning in Venice!! http://t.co/ab 😭", &cfg),
            toks(&["flood", "warning", "venice"])
        );
    }

    #[test]
    fn empty_text() {
        assert!(normalize("", &NormalizerConfig::default()).is_empty());
    }

    #[test]
    fn hashtag_words_both_ways() {
        let mut cfg = NormalizerConfig::default();
        assert_eq!(normalize("#floods #Venice", &cfg), toks(&["floods", "venice"]));
        cfg.keep_hashtag_words = false;
        assert!(normalize("#floods #Venice", &cfg).is_empty());
    }

    #[test]
    fn url_only_tweet_keeps_its_slot() {
        let corpus = Corpus::new(vec![
            Tweet::new("a", "https://example.org/x?y=1", None).unwrap(),
            Tweet::new("b", "River burst its banks", None).unwrap(),
        ])
        .unwrap();
        let out = normalize_corpus(&corpus, &NormalizerConfig::default());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].id, "a");
        assert!(out[0].tokens.is_empty());
        assert_eq!(out[1].tokens, toks(&["river", "burst", "banks"]));
    }

    #[test]
    fn www_urls_and_punctuation() {
        let cfg = NormalizerConfig::default();
        assert_eq!(
            normalize("Check www.news.it/acqua, water-level: 1.5m!", &cfg),
            toks(&["check", "waterlevel", "15m"])
        );
        assert_eq!(normalize("It's flooding", &cfg), toks(&["flooding"]));
    }

    #[test]
    fn compatibility_folding() {
        let mut cfg = NormalizerConfig::default();
        assert_eq!(normalize("ＦＬＯＯＤ ﬁeld", &cfg), toks(&["flood", "field"]));
        cfg.unicode_fold = false;
        assert_eq!(normalize("ＦＬＯＯＤ", &cfg), toks(&["ｆｌｏｏｄ"]));
        // spacing diacritic folds to a combining mark, not a new token
        let folded = NormalizerConfig::default();
        assert_eq!(normalize("a\u{a8}b", &folded).len(), 1);
    }

    #[test]
    fn emoji_sequences_removed() {
        let cfg = NormalizerConfig::default();
        assert_eq!(
            normalize("rain🌧️🌊 storm 👨‍👩‍👧 ❗", &cfg),
            toks(&["rain", "storm"])
        );
    }

    #[test]
    fn stopword_config_validation() {
        let ok: HashSet<String> = ["the".to_string()].into();
        assert!(NormalizerConfig::new(ok, true, true).is_ok());
        let upper: HashSet<String> = ["The".to_string()].into();
        assert!(NormalizerConfig::new(upper, true, true).is_err());
        let empty: HashSet<String> = [String::new()].into();
        assert!(NormalizerConfig::new(empty, true, true).is_err());
    }

    #[test]
    fn custom_stopwords() {
        let cfg = NormalizerConfig::new(parse_stopwords("# c\nFlood\n"), true, true).unwrap();
        assert_eq!(normalize("flood in venice", &cfg), toks(&["in", "venice"]));
    }

    #[test]
    fn export_format() {
        let t = vec![
            NormalizedTweet { id: "a".into(), tokens: toks(&["x", "y"]) },
            NormalizedTweet { id: "b".into(), tokens: vec![] },
        ];
        assert_eq!(normalized_to_tsv(&t), "a\tx y\nb\t\n");
    }
}
