use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

const POSITIVE: &[&str] = &[
    "amazing", "awesome", "beautiful", "best", "better", "blessed", "brilliant", "cool",
    "delicious", "enjoy", "enjoyed", "excellent", "excited", "fantastic", "fun", "glad",
    "good", "great", "happy", "helpful", "hope", "incredible", "kind", "lol", "love",
    "loved", "lovely", "lucky", "nice", "perfect", "pleasant", "proud", "relaxed",
    "smile", "sweet", "thank", "thanks", "win", "wonderful", "yay", "yum",
];

const NEGATIVE: &[&str] = &[
    "angry", "annoyed", "annoying", "awful", "bad", "boring", "broke", "broken",
    "cry", "cried", "dead", "depressed", "dirty", "disappointed", "failed", "hate",
    "hated", "horrible", "hurt", "lonely", "lost", "mad", "miss", "overpriced",
    "pain", "poor", "rude", "sad", "scared", "sick", "slow", "sorry", "stupid",
    "terrible", "tired", "ugh", "upset", "worried", "worse", "worst", "wrong",
];

/// Word → polarity map used for the `sent:` feature family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, Polarity>,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        let entries = POSITIVE
            .iter()
            .map(|w| (w.to_string(), Polarity::Positive))
            .chain(NEGATIVE.iter().map(|w| (w.to_string(), Polarity::Negative)))
            .collect();
        SentimentLexicon { entries }
    }
}

impl SentimentLexicon {
    pub fn empty() -> Self {
        SentimentLexicon {
            entries: BTreeMap::new(),
        }
    }

    /// `word<TAB>polarity` lines; `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, pol) = line.split_once('\t').ok_or_else(|| {
                Error::InvalidParameter(format!("sentiment lexicon line {}: missing tab", i + 1))
            })?;
            let pol = match pol.trim().to_lowercase().as_str() {
                "positive" | "pos" | "+" => Polarity::Positive,
                "negative" | "neg" | "-" => Polarity::Negative,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "sentiment lexicon line {}: unknown polarity `{other}`",
                        i + 1
                    )))
                }
            };
            entries.insert(word.trim().to_lowercase(), pol);
        }
        Ok(SentimentLexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn polarity(&self, word: &str) -> Option<Polarity> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_format() {
        let lex = SentimentLexicon::parse("# c\nhappy\tpositive\nSad\tnegative\n").unwrap();
        assert_eq!(lex.polarity("happy"), Some(Polarity::Positive));
        assert_eq!(lex.polarity("sad"), Some(Polarity::Negative));
        assert_eq!(lex.polarity("dog"), None);
        assert!(SentimentLexicon::parse("happy positive").is_err());
        assert!(SentimentLexicon::parse("happy\tmeh").is_err());
    }
}
