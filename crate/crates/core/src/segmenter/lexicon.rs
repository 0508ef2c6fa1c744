use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PDTB explicit connectives (contiguous forms) followed by informal
/// causal variants common on social media.
const DEFAULT_CONNECTIVES: &[&str] = &[
    "accordingly", "additionally", "after", "afterward", "afterwards", "also",
    "alternatively", "although", "and", "as", "as a result", "as an alternative",
    "as if", "as long as", "as soon as", "as though", "as well", "because",
    "because of", "before", "besides", "but", "by comparison", "by contrast",
    "by then", "consequently", "conversely", "earlier", "else", "except",
    "finally", "for", "for example", "for instance", "further", "furthermore",
    "hence", "however", "if", "if and when", "in addition", "in contrast",
    "in fact", "in other words", "in particular", "in short", "in sum",
    "in the end", "in turn", "indeed", "insofar as", "instead", "later", "lest",
    "likewise", "meantime", "meanwhile", "moreover", "much as", "neither",
    "nevertheless", "next", "nonetheless", "nor", "now that", "on the contrary",
    "on the other hand", "once", "or", "otherwise", "overall", "particularly",
    "plus", "previously", "rather", "regardless", "separately", "similarly",
    "simultaneously", "since", "so", "so that", "specifically", "still", "then",
    "thereafter", "thereby", "therefore", "though", "thus", "till", "ultimately",
    "unless", "until", "when", "when and if", "whereas", "while", "yet",
    // informal variants
    "cuz", "bcuz", "bc", "b/c", "coz", "cos", "cause",
];

/// Lowercase connective entries, each stored as its token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectiveLexicon {
    entries: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl Default for ConnectiveLexicon {
    fn default() -> Self {
        Self::from_entries(DEFAULT_CONNECTIVES.iter().copied())
    }
}

impl ConnectiveLexicon {
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a str>) -> Self {
        let entries: BTreeSet<Vec<String>> = entries
            .into_iter()
            .map(|e| {
                e.split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|e| !e.is_empty())
            .collect();
        let max_len = entries.iter().map(Vec::len).max().unwrap_or(0);
        ConnectiveLexicon { entries, max_len }
    }

    /// Plain text, one connective per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self::from_entries(text.lines().filter_map(|l| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some(l)
        }))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, words: &[&str]) -> bool {
        self.entries
            .iter()
            .any(|e| e.len() == words.len() && e.iter().zip(words).all(|(a, b)| a == b))
    }

    /// Length of the longest entry matching `words` from its start.
    pub fn longest_match(&self, words: &[String]) -> Option<usize> {
        let upto = self.max_len.min(words.len());
        (1..=upto)
            .rev()
            .find(|&n| self.entries.contains(&words[..n].to_vec()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().map(|e| e.join(" "))
    }
}
