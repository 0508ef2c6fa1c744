//! PDTB-style discourse argument segmentation.
//!
//! A tagged message is cut into sentences at sentence-final punctuation and
//! into fragments at comma tokens; fragments without a verb are merged back.
//! Explicit connectives with a verb on each side (within the sentence) open a
//! new argument, and every maximal run of emoticon tokens becomes an argument
//! of its own. The result always partitions the token sequence.

mod lexicon;

use serde::{Deserialize, Serialize};

use crate::corpus::{Message, Tag, Token};

pub use lexicon::ConnectiveLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgumentKind {
    Plain,
    Emoji,
}

/// Contiguous token span `first..=last` of a message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscourseArgument {
    pub first: usize,
    pub last: usize,
    pub kind: ArgumentKind,
    pub opens_with_connective: Option<String>,
}

impl DiscourseArgument {
    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn tokens<'a>(&self, message: &'a Message) -> &'a [Token] {
        &message.tokens[self.first..=self.last]
    }

    /// Lowercased token texts.
    pub fn words(&self, message: &Message) -> Vec<String> {
        self.tokens(message)
            .iter()
            .map(|t| t.text.to_lowercase())
            .collect()
    }

    /// Byte range of the argument in the raw text.
    pub fn byte_range(&self, message: &Message) -> (usize, usize) {
        (message.tokens[self.first].start, message.tokens[self.last].end)
    }

    pub fn text<'a>(&self, message: &'a Message) -> &'a str {
        let (s, e) = self.byte_range(message);
        &message.raw_text[s..e]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectiveMatch {
    pub first: usize,
    pub last: usize,
    pub connective: String,
}

fn is_sentence_final(t: &Token) -> bool {
    t.pos == Some(Tag::Punctuation)
        && t.text
            .chars()
            .all(|c| matches!(c, '.' | '!' | '?' | '…'))
}

fn is_comma(t: &Token) -> bool {
    t.pos == Some(Tag::Punctuation) && t.text == ","
}

/// Half-open token ranges of the sentences of a message.
pub fn sentence_spans(message: &Message) -> Vec<(usize, usize)> {
    let n = message.tokens.len();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in message.tokens.iter().enumerate() {
        // A run of final punctuation (`?!`) closes the sentence once.
        let next_final = message.tokens.get(i + 1).is_some_and(is_sentence_final);
        if is_sentence_final(t) && !next_final {
            out.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < n {
        out.push((start, n));
    }
    out
}

/// Every maximal lexicon match plus conjunction-tagged tokens outside the lexicon.
pub fn detect_connectives(message: &Message, lexicon: &ConnectiveLexicon) -> Vec<ConnectiveMatch> {
    let words = message.words();
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let tok = &message.tokens[i];
        if tok.is_emoticon() || tok.is_punctuation() {
            i += 1;
            continue;
        }
        if let Some(len) = lexicon.longest_match(&words[i..]) {
            out.push(ConnectiveMatch {
                first: i,
                last: i + len - 1,
                connective: words[i..i + len].join(" "),
            });
            i += len;
        } else if tok.pos.is_some_and(Tag::is_conjunction) {
            out.push(ConnectiveMatch {
                first: i,
                last: i,
                connective: words[i].clone(),
            });
            i += 1;
        } else {
            i += 1;
        }
    }
    out
}

/// A candidate is a discourse connective when its sentence has a verb on
/// both sides of it.
pub fn is_discourse_connective(message: &Message, candidate: &ConnectiveMatch) -> bool {
    let Some(&(s, e)) = sentence_spans(message)
        .iter()
        .find(|(s, e)| (*s..*e).contains(&candidate.first))
    else {
        return false;
    };
    let toks = &message.tokens;
    let before = toks[s..candidate.first].iter().any(Token::is_verb);
    let after = toks[(candidate.last + 1).min(e)..e].iter().any(Token::is_verb);
    before && after
}

fn has_verb(tokens: &[Token], range: (usize, usize)) -> bool {
    tokens[range.0..range.1].iter().any(Token::is_verb)
}

/// Comma fragments of one sentence, with verb-less fragments merged into a neighbour.
fn fragments(tokens: &[Token], (s, e): (usize, usize)) -> Vec<(usize, usize)> {
    let mut raw = Vec::new();
    let mut start = s;
    for i in s..e {
        if is_comma(&tokens[i]) && i + 1 < e {
            raw.push((start, i + 1));
            start = i + 1;
        }
    }
    raw.push((start, e));

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(raw.len());
    for frag in raw {
        match merged.last_mut() {
            Some(prev) if !has_verb(tokens, frag) => prev.1 = frag.1,
            _ => merged.push(frag),
        }
    }
    if merged.len() > 1 && !has_verb(tokens, merged[0]) {
        let first = merged.remove(0);
        merged[0].0 = first.0;
    }
    merged
}

/// Splits a tagged message into discourse arguments.
pub fn segment(message: &Message, lexicon: &ConnectiveLexicon) -> Vec<DiscourseArgument> {
    let tokens = &message.tokens;
    if tokens.is_empty() {
        return Vec::new();
    }
    let accepted: Vec<ConnectiveMatch> = detect_connectives(message, lexicon)
        .into_iter()
        .filter(|c| is_discourse_connective(message, c))
        .collect();

    // Connective-delimited pieces.
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    for sentence in sentence_spans(message) {
        for (fs, fe) in fragments(tokens, sentence) {
            let mut start = fs;
            for c in &accepted {
                if c.first > fs && c.first < fe {
                    pieces.push((start, c.first));
                    start = c.first;
                }
            }
            pieces.push((start, fe));
        }
    }

    // Emoticon runs become their own arguments.
    let mut args: Vec<DiscourseArgument> = Vec::new();
    for (ps, pe) in pieces {
        let mut i = ps;
        while i < pe {
            let emoji = tokens[i].is_emoticon();
            let mut j = i;
            while j + 1 < pe && tokens[j + 1].is_emoticon() == emoji {
                j += 1;
            }
            args.push(DiscourseArgument {
                first: i,
                last: j,
                kind: if emoji {
                    ArgumentKind::Emoji
                } else {
                    ArgumentKind::Plain
                },
                opens_with_connective: None,
            });
            i = j + 1;
        }
    }

    let args = absorb_punctuation(tokens, args);
    args.into_iter()
        .map(|mut a| {
            a.opens_with_connective = accepted
                .iter()
                .find(|c| c.first == a.first)
                .map(|c| c.connective.clone());
            a
        })
        .collect()
}

/// Attach punctuation-only plain arguments to the preceding plain argument,
/// or failing that to the following one.
fn absorb_punctuation(tokens: &[Token], args: Vec<DiscourseArgument>) -> Vec<DiscourseArgument> {
    let punct_only = |a: &DiscourseArgument| {
        a.kind == ArgumentKind::Plain && tokens[a.first..=a.last].iter().all(Token::is_punctuation)
    };
    let mut backward: Vec<DiscourseArgument> = Vec::with_capacity(args.len());
    for a in args {
        match backward.last_mut() {
            Some(prev) if punct_only(&a) && prev.kind == ArgumentKind::Plain => prev.last = a.last,
            _ => backward.push(a),
        }
    }
    let mut out: Vec<DiscourseArgument> = Vec::with_capacity(backward.len());
    let mut carry: Option<usize> = None;
    for a in backward {
        if punct_only(&a) {
            carry.get_or_insert(a.first);
            continue;
        }
        match carry.take() {
            Some(first) if a.kind == ArgumentKind::Plain => out.push(DiscourseArgument { first, ..a }),
            Some(first) => {
                out.push(DiscourseArgument {
                    first,
                    last: a.first - 1,
                    kind: ArgumentKind::Plain,
                    opens_with_connective: None,
                });
                out.push(a);
            }
            None => out.push(a),
        }
    }
    if let Some(first) = carry {
        out.push(DiscourseArgument {
            first,
            last: tokens.len() - 1,
            kind: ArgumentKind::Plain,
            opens_with_connective: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tag::*;

    pub(crate) fn tagged(pairs: &[(&str, Tag)]) -> Message {
        let text = pairs.iter().map(|p| p.0).collect::<Vec<_>>().join(" ");
        let mut m = Message::new("t", text);
        assert_eq!(m.tokens.len(), pairs.len(), "{pairs:?}");
        for (t, (_, tag)) in m.tokens.iter_mut().zip(pairs) {
            t.pos = Some(*tag);
        }
        m
    }

    fn spans(m: &Message, args: &[DiscourseArgument]) -> Vec<String> {
        args.iter().map(|a| a.text(m).to_string()).collect()
    }

    fn went_home() -> Message {
        tagged(&[
            ("I", Pronoun),
            ("went", Verb),
            ("home", Noun),
            (",", Punctuation),
            ("but", CoordConj),
            ("he", Pronoun),
            ("stayed", Verb),
        ])
    }

    fn apple() -> Message {
        tagged(&[
            ("I", Pronoun),
            ("like", Verb),
            ("apple", Noun),
            ("and", CoordConj),
            ("banana", Noun),
        ])
    }

    fn parser() -> Message {
        tagged(&[
            ("My", Determiner),
            ("parser", Noun),
            ("failed", Verb),
            ("because", Preposition),
            ("I", Pronoun),
            ("always", Adverb),
            ("have", Verb),
            ("bugs", Noun),
            (".", Punctuation),
        ])
    }

    #[test]
    fn detects_connectives() {
        let lex = ConnectiveLexicon::default();
        let found = detect_connectives(&went_home(), &lex);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].connective, "but");

        let m = tagged(&[("bcuz", Preposition), ("I", Pronoun), ("was", Verb), ("tired", Adjective)]);
        let found = detect_connectives(&m, &lex);
        assert_eq!(found.iter().map(|c| c.connective.as_str()).collect::<Vec<_>>(), ["bcuz"]);

        let m = tagged(&[("nice", Adjective), ("day", Noun)]);
        assert!(detect_connectives(&m, &lex).is_empty());

        // Out-of-lexicon conjunction-tagged token.
        let m = tagged(&[("bcoz", Preposition), ("rain", Noun)]);
        assert_eq!(detect_connectives(&m, &lex)[0].connective, "bcoz");

        // Multi-word entries match maximally.
        let m = tagged(&[("as", Preposition), ("a", Determiner), ("result", Noun), ("we", Pronoun), ("left", Verb)]);
        let found = detect_connectives(&m, &lex);
        assert_eq!((found[0].first, found[0].last), (0, 2));
    }

    #[test]
    fn verb_check() {
        let lex = ConnectiveLexicon::default();
        let m = went_home();
        let but = &detect_connectives(&m, &lex)[0];
        assert!(is_discourse_connective(&m, but));

        let m = apple();
        let and = &detect_connectives(&m, &lex)[0];
        assert!(!is_discourse_connective(&m, and));

        let m = tagged(&[
            ("Because", Preposition),
            ("I", Pronoun),
            ("was", Verb),
            ("late", Adjective),
            (",", Punctuation),
            ("I", Pronoun),
            ("ran", Verb),
        ]);
        let because = &detect_connectives(&m, &lex)[0];
        assert!(!is_discourse_connective(&m, because));
        // The comma still separates the clauses.
        assert_eq!(spans(&m, &segment(&m, &lex)), ["Because I was late ,", "I ran"]);
    }

    #[test]
    fn segments_figure_example() {
        let lex = ConnectiveLexicon::default();
        let m = parser();
        let args = segment(&m, &lex);
        assert_eq!(spans(&m, &args), ["My parser failed", "because I always have bugs ."]);
        assert_eq!(args[1].opens_with_connective.as_deref(), Some("because"));
        assert_eq!(args[0].opens_with_connective, None);
    }

    #[test]
    fn segments_emoji_example() {
        let lex = ConnectiveLexicon::default();
        let mut m = Message::new("e", "My test result... :(");
        let tags = [Determiner, Noun, Noun, Punctuation, Emoticon];
        for (t, tag) in m.tokens.iter_mut().zip(tags) {
            t.pos = Some(tag);
        }
        let args = segment(&m, &lex);
        assert_eq!(spans(&m, &args), ["My test result...", ":("]);
        assert_eq!(args[0].kind, ArgumentKind::Plain);
        assert_eq!(args[1].kind, ArgumentKind::Emoji);
    }

    #[test]
    fn and_between_nouns_is_one_argument() {
        let lex = ConnectiveLexicon::default();
        let m = apple();
        let args = segment(&m, &lex);
        assert_eq!(args.len(), 1);
        assert_eq!((args[0].first, args[0].last), (0, 4));
    }

    #[test]
    fn comma_split_and_connective() {
        let lex = ConnectiveLexicon::default();
        let m = went_home();
        let args = segment(&m, &lex);
        assert_eq!(spans(&m, &args), ["I went home ,", "but he stayed"]);
        assert_eq!(args[1].opens_with_connective.as_deref(), Some("but"));
    }

    #[test]
    fn verbless_fragments_merge() {
        let lex = ConnectiveLexicon::default();
        let m = tagged(&[
            ("John", ProperNoun),
            (",", Punctuation),
            ("I", Pronoun),
            ("miss", Verb),
            ("you", Pronoun),
            (",", Punctuation),
            ("buddy", Noun),
        ]);
        let args = segment(&m, &lex);
        assert_eq!(args.len(), 1);
    }

    #[test]
    fn emoji_runs_inside_clause() {
        let lex = ConnectiveLexicon::default();
        let m = tagged(&[
            ("I", Pronoun),
            ("failed", Verb),
            (":(", Emoticon),
            (":(", Emoticon),
            ("again", Adverb),
            ("!", Punctuation),
        ]);
        let args = segment(&m, &lex);
        assert_eq!(spans(&m, &args), ["I failed", ":( :(", "again !"]);
        assert_eq!(args[1].kind, ArgumentKind::Emoji);
    }

    #[test]
    fn empty_message() {
        let m = Message::new("x", "");
        assert!(segment(&m, &ConnectiveLexicon::default()).is_empty());
    }

    #[test]
    fn sentences_split_at_final_punctuation() {
        let m = tagged(&[
            ("hi", Interjection),
            ("!", Punctuation),
            ("?", Punctuation),
            ("ok", Interjection),
            (".", Punctuation),
        ]);
        assert_eq!(sentence_spans(&m), [(0, 3), (3, 5)]);
    }
}
