//! Messages, tokens, corpora and their JSONL representation.

mod jsonl;
mod tagger;
mod tagset;
mod tokenize;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jsonl::{
    load_jsonl, message_from_json, message_to_json, parse_jsonl, save_jsonl, tokens_to_json,
};
pub use tagger::{forced_tag, tag_pos, PosTagger};
pub use tagset::{Tag, UnknownTag};
pub use tokenize::{is_emoji_char, is_emoticon, is_mention, is_punctuation, is_url, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub pos: Option<Tag>,
    /// Byte offsets into the raw message text, `start < end`.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn tag(&self) -> Option<Tag> {
        self.pos
    }

    pub fn is_verb(&self) -> bool {
        self.pos.is_some_and(Tag::is_verb)
    }

    pub fn is_emoticon(&self) -> bool {
        self.pos == Some(Tag::Emoticon)
    }

    pub fn is_punctuation(&self) -> bool {
        self.pos == Some(Tag::Punctuation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub gold_causality: Option<bool>,
    /// Byte range of the annotated causal explanation.
    pub gold_explanation_span: Option<(usize, usize)>,
    pub user_id: Option<String>,
    pub label: Option<String>,
}

impl Message {
    /// Message with tokenized (untagged) text and no annotations.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let raw_text = text.into();
        let tokens = tokenize(&raw_text);
        Message {
            id: id.into(),
            raw_text,
            tokens,
            gold_causality: None,
            gold_explanation_span: None,
            user_id: None,
            label: None,
        }
    }

    pub fn is_tagged(&self) -> bool {
        self.tokens.iter().all(|t| t.pos.is_some())
    }

    /// Lowercased token texts.
    pub fn words(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.to_lowercase()).collect()
    }

    /// Checks the token and annotation invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::InvalidMessage {
            id: self.id.clone(),
            message,
        };
        let len = self.raw_text.len();
        let mut prev_end = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.start >= t.end || t.end > len {
                return Err(bad(format!(
                    "token {i} span ({}, {}) is empty or out of bounds",
                    t.start, t.end
                )));
            }
            if t.start < prev_end {
                return Err(bad(format!("token {i} overlaps or precedes its predecessor")));
            }
            match self.raw_text.get(t.start..t.end) {
                Some(s) if s == t.text => {}
                _ => {
                    return Err(bad(format!(
                        "token {i} text `{}` does not match the raw text at ({}, {})",
                        t.text, t.start, t.end
                    )))
                }
            }
            prev_end = t.end;
        }
        if let Some((s, e)) = self.gold_explanation_span {
            if self.gold_causality != Some(true) {
                return Err(bad(
                    "explanation span present but causality is not true".to_string(),
                ));
            }
            if s >= e || e > len {
                return Err(bad(format!("explanation span ({s}, {e}) out of bounds")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
    #[default]
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub messages: Vec<Message>,
    pub split: Split,
}

impl Corpus {
    /// Builds a corpus after validating every message and id uniqueness.
    pub fn new(messages: Vec<Message>, split: Split) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &messages {
            m.validate()?;
            if !seen.insert(m.id.as_str()) {
                return Err(Error::InvalidMessage {
                    id: m.id.clone(),
                    message: "duplicate message id".to_string(),
                });
            }
        }
        Ok(Corpus { messages, split })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn is_tagged(&self) -> bool {
        self.messages.iter().all(Message::is_tagged)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Message;
    type IntoIter = std::slice::Iter<'a, Message>;

    fn into_iter(self) -> Self::IntoIter {
        self.messages.iter()
    }
}
