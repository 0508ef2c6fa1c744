//! Sparse lexical, syntactic and argument-pair features for the linear models.
//!
//! Feature names are namespaced by family:
//!
//! | prefix | family                                             | value  |
//! |--------|----------------------------------------------------|--------|
//! | `ng:`  | lowercased word 1–3-grams                          | binary |
//! | `cng:` | character 2–5-grams of the normalized text         | binary |
//! | `pos:` | POS tag 1–2-grams                                  | binary |
//! | `sent:`| positive / negative lexicon hits                   | count  |
//! | `stat:`| `avg_word_len`, `word_count`                       | real   |
//! | `fl:`  | first/last word of each adjacent argument pair     | binary |
//! | `f3:`  | first three words of each adjacent argument pair   | binary |
//! | `wp:`  | cross product of the words of adjacent arguments   | binary |

mod selection;
mod sentiment;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Message, Token};
use crate::error::{Error, Result};
use crate::segmenter::DiscourseArgument;

pub use selection::{chi_square_2x2, chi_square_sf, select_features_univariate, FeatureSpace};
pub use sentiment::{Polarity, SentimentLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Ngram,
    CharNgram,
    Pos,
    Sentiment,
    Stat,
    FirstLast,
    First3,
    WordPair,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 8] = [
        FeatureFamily::Ngram,
        FeatureFamily::CharNgram,
        FeatureFamily::Pos,
        FeatureFamily::Sentiment,
        FeatureFamily::Stat,
        FeatureFamily::FirstLast,
        FeatureFamily::First3,
        FeatureFamily::WordPair,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            FeatureFamily::Ngram => "ng:",
            FeatureFamily::CharNgram => "cng:",
            FeatureFamily::Pos => "pos:",
            FeatureFamily::Sentiment => "sent:",
            FeatureFamily::Stat => "stat:",
            FeatureFamily::FirstLast => "fl:",
            FeatureFamily::First3 => "f3:",
            FeatureFamily::WordPair => "wp:",
        }
    }

    pub fn of(name: &str) -> Option<FeatureFamily> {
        FeatureFamily::ALL
            .into_iter()
            .find(|f| name.starts_with(f.prefix()))
    }
}

/// Sparse named features; zero values are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value == 0.0 {
            self.entries.remove(&name);
        } else {
            self.entries.insert(name, value);
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        let v = self.entries.get(&name).copied().unwrap_or(0.0) + value;
        self.set(name, v);
    }

    pub fn get(&self, name: &str) -> f64 {
        self.entries.get(name).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn family_count(&self, family: FeatureFamily) -> usize {
        self.names().filter(|n| n.starts_with(family.prefix())).count()
    }
}

impl FromIterator<(String, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut fv = FeatureVector::new();
        for (k, v) in iter {
            fv.set(k, v);
        }
        fv
    }
}

/// Which families to extract; all on by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub word_ngrams: (usize, usize),
    pub char_ngrams: (usize, usize),
    pub disabled: Vec<FeatureFamily>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            word_ngrams: (1, 3),
            char_ngrams: (2, 5),
            disabled: Vec::new(),
        }
    }
}

impl FeatureConfig {
    fn on(&self, family: FeatureFamily) -> bool {
        !self.disabled.contains(&family)
    }
}

/// Lexical words of a token slice: everything except punctuation.
fn lexical_words(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !t.is_punctuation())
        .map(|t| t.text.to_lowercase())
        .collect()
}

fn check_segmentation(message: &Message, args: &[DiscourseArgument]) -> Result<()> {
    let unsegmented = || Error::Unsegmented {
        id: message.id.clone(),
    };
    if message.tokens.is_empty() {
        return if args.is_empty() { Ok(()) } else { Err(unsegmented()) };
    }
    if args.is_empty() || !message.is_tagged() {
        return Err(unsegmented());
    }
    let mut next = 0;
    for a in args {
        if a.first != next || a.last < a.first {
            return Err(unsegmented());
        }
        next = a.last + 1;
    }
    if next != message.tokens.len() {
        return Err(unsegmented());
    }
    Ok(())
}

/// Adds First-Last, First3 and Word-Pair features for one adjacent pair.
pub fn add_pair_features(fv: &mut FeatureVector, a: &[String], b: &[String]) {
    for (side, words) in [("A", a), ("B", b)] {
        if let (Some(first), Some(last)) = (words.first(), words.last()) {
            fv.set(format!("fl:first_{side}={first}"), 1.0);
            fv.set(format!("fl:last_{side}={last}"), 1.0);
        }
        for (i, w) in words.iter().take(3).enumerate() {
            fv.set(format!("f3:{side}:{}={w}", i + 1), 1.0);
        }
    }
    let ua: BTreeSet<&String> = a.iter().collect();
    let ub: BTreeSet<&String> = b.iter().collect();
    for wa in &ua {
        for wb in &ub {
            fv.set(format!("wp:{wa}|{wb}"), 1.0);
        }
    }
}

/// Message-level features for causality prediction.
pub fn extract_message_features(
    message: &Message,
    args: &[DiscourseArgument],
    lexicon: &SentimentLexicon,
) -> Result<FeatureVector> {
    extract_with_config(message, args, lexicon, &FeatureConfig::default())
}

pub fn extract_with_config(
    message: &Message,
    args: &[DiscourseArgument],
    lexicon: &SentimentLexicon,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    check_segmentation(message, args)?;
    let mut fv = FeatureVector::new();
    if message.tokens.is_empty() {
        return Ok(fv);
    }
    let all_words = message.words();

    if config.on(FeatureFamily::Ngram) {
        let (lo, hi) = config.word_ngrams;
        for n in lo..=hi {
            for gram in all_words.windows(n) {
                fv.set(format!("ng:{}", gram.join(" ")), 1.0);
            }
        }
    }

    if config.on(FeatureFamily::CharNgram) {
        let text: Vec<char> = format!(" {} ", all_words.join(" ")).chars().collect();
        let (lo, hi) = config.char_ngrams;
        for n in lo..=hi {
            for gram in text.windows(n) {
                fv.set(format!("cng:{}", gram.iter().collect::<String>()), 1.0);
            }
        }
    }

    if config.on(FeatureFamily::Pos) {
        let tags: Vec<&str> = message
            .tokens
            .iter()
            .map(|t| t.pos.map_or("?", |p| p.symbol()))
            .collect();
        for t in &tags {
            fv.set(format!("pos:{t}"), 1.0);
        }
        for pair in tags.windows(2) {
            fv.set(format!("pos:{}_{}", pair[0], pair[1]), 1.0);
        }
    }

    let words = lexical_words(&message.tokens);

    if config.on(FeatureFamily::Sentiment) {
        for w in &words {
            if let Some(p) = lexicon.polarity(w) {
                fv.add(format!("sent:{}", p.name()), 1.0);
            }
        }
    }

    if config.on(FeatureFamily::Stat) && !words.is_empty() {
        let chars: usize = words.iter().map(|w| w.chars().count()).sum();
        fv.set("stat:word_count", words.len() as f64);
        fv.set("stat:avg_word_len", chars as f64 / words.len() as f64);
    }

    let want_pairs = config.on(FeatureFamily::FirstLast)
        || config.on(FeatureFamily::First3)
        || config.on(FeatureFamily::WordPair);
    if want_pairs {
        let arg_words: Vec<Vec<String>> = args
            .iter()
            .map(|a| lexical_words(a.tokens(message)))
            .collect();
        for pair in arg_words.windows(2) {
            add_pair_features(&mut fv, &pair[0], &pair[1]);
        }
        for fam in [FeatureFamily::FirstLast, FeatureFamily::First3, FeatureFamily::WordPair] {
            if !config.on(fam) {
                let drop: Vec<String> = fv
                    .names()
                    .filter(|n| n.starts_with(fam.prefix()))
                    .map(str::to_string)
                    .collect();
                for n in drop {
                    fv.set(n, 0.0);
                }
            }
        }
    }
    Ok(fv)
}
