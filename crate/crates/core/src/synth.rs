//! Seeded generator for a synthetic social-media corpus with gold POS tags,
//! causality labels and explanation spans, plus a matching embedding table.
//!
//! Causal messages use explicit causal connectives ("because", "cuz", "b/c",
//! sentence-initial "Because ... ,", "... so ..."). Non-causal messages use
//! other connectives, multiple sentences or single clauses. Both carry the
//! same decoration noise (emoticons, mentions, URLs, slang that has no
//! embedding).

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Message, Split, Tag, Token};
use crate::error::{Error, Result};
use crate::neural::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_messages: usize,
    pub causal_fraction: f64,
    pub n_users: usize,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_messages: 2000,
            causal_fraction: 1.0 / 3.0,
            n_users: 100,
            embedding_dim: 25,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthUser {
    pub id: String,
    pub age: u32,
    pub group: String,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub embeddings: EmbeddingTable,
    pub users: Vec<SynthUser>,
}

const PRONOUNS: &[&str] = &["i", "we", "he", "she", "they"];
const DETERMINERS: &[&str] = &["the", "my", "our", "this"];
const NOUNS: &[&str] = &[
    "bus", "class", "work", "party", "game", "phone", "car", "dinner", "test", "movie",
    "flight", "meeting", "pizza", "coffee", "show",
];
const VERBS_OBJ: &[&str] = &[
    "missed", "skipped", "loved", "hated", "cancelled", "watched", "bought", "left",
    "finished", "enjoyed", "lost", "fixed",
];
const COPULA: &[&str] = &["was", "is", "felt", "got"];
const REASON_NEG: &[&str] = &["slow", "rude", "overpriced", "dirty", "cold", "broken", "late"];
const REASON_POS: &[&str] = &["friendly", "cheap", "fresh", "fast", "clean", "free", "early"];
const MOOD_NEG: &[&str] = &["sad", "tired", "upset", "bored", "angry"];
const MOOD_POS: &[&str] = &["happy", "glad", "excited", "proud", "relaxed"];
const CAUSAL_CONN: &[&str] = &["because", "cuz", "bcuz", "bc", "b/c", "since", "coz"];
const OTHER_CONN: &[(&str, Tag)] = &[
    ("but", Tag::CoordConj),
    ("and", Tag::CoordConj),
    ("when", Tag::Preposition),
    ("although", Tag::Preposition),
    ("while", Tag::Preposition),
    ("until", Tag::Preposition),
    ("or", Tag::CoordConj),
];
const EMOTICONS: &[&str] = &[":)", ":(", ":D", "😂", "😭", "❤️"];
const INTERJECTIONS: &[&str] = &["lol", "omg", "ugh", "yay"];
/// Slang that deliberately has no embedding.
const SLANG: &[&str] = &["sooo", "rly", "totes", "srsly"];

type Piece = Vec<(String, Tag)>;

fn w(s: &str, t: Tag) -> (String, Tag) {
    (s.to_string(), t)
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    fn subject(&mut self) -> Piece {
        if self.chance(0.7) {
            vec![w(self.pick(PRONOUNS), Tag::Pronoun)]
        } else {
            vec![w(self.pick(DETERMINERS), Tag::Determiner), w(self.pick(NOUNS), Tag::Noun)]
        }
    }

    /// A clause with one verb; `adjectives` feeds the copular form.
    fn clause(&mut self, adjectives: &[&str]) -> Piece {
        let mut out = self.subject();
        if self.chance(0.5) {
            out.push(w(self.pick(COPULA), Tag::Verb));
            if self.chance(0.2) {
                out.push(w(self.pick(SLANG), Tag::Adverb));
            }
            out.push(w(self.pick(adjectives), Tag::Adjective));
        } else {
            out.push(w(self.pick(VERBS_OBJ), Tag::Verb));
            out.push(w(self.pick(DETERMINERS), Tag::Determiner));
            out.push(w(self.pick(NOUNS), Tag::Noun));
        }
        out
    }

    fn decorate_front(&mut self) -> Piece {
        if self.chance(0.1) {
            vec![w("@friend", Tag::Mention)]
        } else {
            Vec::new()
        }
    }

    fn decorate_back(&mut self) -> Piece {
        let mut out = Vec::new();
        if self.chance(0.15) {
            out.push(w(self.pick(INTERJECTIONS), Tag::Interjection));
        }
        if self.chance(0.25) {
            out.push(w(self.pick(EMOTICONS), Tag::Emoticon));
        }
        if self.chance(0.05) {
            out.push(w("http://t.co/x1", Tag::Url));
        }
        out
    }
}

fn capitalize(piece: &mut Piece) {
    if let Some((first, _)) = piece.first_mut() {
        let mut c = first.chars();
        if let Some(h) = c.next() {
            *first = h.to_uppercase().collect::<String>() + c.as_str();
        }
    }
}

/// Joins the pieces with single spaces; piece `explanation` becomes the gold span.
fn assemble(id: String, parts: Vec<Piece>, explanation: Option<usize>) -> Message {
    let mut tokens = Vec::new();
    let mut text = String::new();
    let mut span = None;
    for (k, part) in parts.into_iter().enumerate() {
        let first_byte = if text.is_empty() { 0 } else { text.len() + 1 };
        for (word, tag) in part {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&word);
            tokens.push(Token {
                text: word,
                pos: Some(tag),
                start,
                end: text.len(),
            });
        }
        if explanation == Some(k) {
            span = Some((first_byte, text.len()));
        }
    }
    Message {
        id,
        raw_text: text,
        tokens,
        gold_causality: Some(explanation.is_some()),
        gold_explanation_span: span,
        user_id: None,
        label: None,
    }
}

fn causal_message(g: &mut Gen, id: String, negative: bool) -> Message {
    let (reason, mood) = if negative {
        (REASON_NEG, MOOD_NEG)
    } else {
        (REASON_POS, MOOD_POS)
    };
    let front = g.decorate_front();
    let back = g.decorate_back();
    let effect = g.clause(mood);
    let cause = g.clause(reason);
    match g.rng.random_range(0..10) {
        // "Because X , Y"
        0..=1 => {
            let mut because = vec![w("because", Tag::Preposition)];
            capitalize(&mut because);
            because.extend(cause);
            assemble(id, vec![front, because, vec![w(",", Tag::Punctuation)], effect, back], Some(1))
        }
        // "X so Y"
        2..=3 => assemble(
            id,
            vec![front, cause, vec![w("so", Tag::Preposition)], effect, back],
            Some(1),
        ),
        _ => {
            let mut expl = vec![w(g.pick(CAUSAL_CONN), Tag::Preposition)];
            expl.extend(cause);
            assemble(id, vec![front, effect, expl, back], Some(2))
        }
    }
}

fn plain_message(g: &mut Gen, id: String, negative: bool) -> Message {
    let (reason, mood) = if negative {
        (REASON_NEG, MOOD_NEG)
    } else {
        (REASON_POS, MOOD_POS)
    };
    let mixed: Vec<&str> = reason.iter().chain(mood).copied().collect();
    let front = g.decorate_front();
    let back = g.decorate_back();
    let a = g.clause(&mixed);
    let b = g.clause(&mixed);
    let middle = match g.rng.random_range(0..10) {
        0..=4 => {
            let &(c, t) = OTHER_CONN.choose(&mut g.rng).unwrap();
            vec![w(c, t)]
        }
        5..=6 => vec![w(".", Tag::Punctuation)],
        7 => vec![w(",", Tag::Punctuation)],
        _ => return assemble(id, vec![front, a, back], None),
    };
    assemble(id, vec![front, a, middle, b, back], None)
}

fn embeddings(dim: usize, rng: &mut ChaCha8Rng) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim);
    let connectives: Vec<&str> = OTHER_CONN.iter().map(|(c, _)| *c).collect();
    let groups: Vec<Vec<&str>> = vec![
        PRONOUNS.to_vec(),
        DETERMINERS.to_vec(),
        NOUNS.to_vec(),
        VERBS_OBJ.to_vec(),
        COPULA.to_vec(),
        REASON_NEG.to_vec(),
        REASON_POS.to_vec(),
        MOOD_NEG.to_vec(),
        MOOD_POS.to_vec(),
        CAUSAL_CONN.iter().chain(&["so"]).copied().collect(),
        connectives,
        vec![",", ".", "!", "?"],
        EMOTICONS[..3].to_vec(),
        INTERJECTIONS.to_vec(),
    ];
    for group in groups {
        let centroid: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for word in group {
            let v = centroid.iter().map(|c| c + rng.random_range(-0.5..0.5)).collect();
            table.insert(word, v)?;
        }
    }
    Ok(table)
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    if config.n_messages == 0 || config.n_users == 0 {
        return Err(Error::InvalidParameter("n_messages and n_users must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.causal_fraction) {
        return Err(Error::InvalidParameter("causal_fraction must be in [0, 1]".into()));
    }
    if config.embedding_dim == 0 {
        return Err(Error::InvalidParameter("embedding_dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let embeddings = embeddings(config.embedding_dim, &mut rng)?;

    // Older users explain more; the mean rate stays near causal_fraction.
    let users: Vec<SynthUser> = (0..config.n_users)
        .map(|k| SynthUser {
            id: format!("u{k:03}"),
            age: rng.random_range(18..=65),
            group: if rng.random::<bool>() { "a" } else { "b" }.to_string(),
        })
        .collect();
    let rate = |u: &SynthUser| {
        let t = (u.age - 18) as f64 / 47.0;
        (config.causal_fraction * (0.6 + 0.8 * t)).clamp(0.0, 1.0)
    };

    let mut g = Gen { rng };
    let mut messages = Vec::with_capacity(config.n_messages);
    for i in 0..config.n_messages {
        let user = users.choose(&mut g.rng).unwrap();
        let negative = g.chance(0.5);
        let id = format!("s{i:05}");
        let causal = g.chance(rate(user));
        let mut m = if causal {
            causal_message(&mut g, id, negative)
        } else {
            plain_message(&mut g, id, negative)
        };
        m.user_id = Some(user.id.clone());
        m.label = Some(if negative { "negative" } else { "positive" }.to_string());
        messages.push(m);
    }
    Ok(SynthData {
        corpus: Corpus::new(messages, Split::Unsplit)?,
        embeddings,
        users,
    })
}

/// `user_id,age,group` lines with a header.
pub fn demographics_csv(users: &[SynthUser]) -> String {
    let mut out = String::from("user_id,age,group\n");
    for u in users {
        out.push_str(&format!("{},{},{}\n", u.id, u.age, u.group));
    }
    out
}

/// Shuffled train/validation/test split by fractions of the corpus.
pub fn split_corpus(corpus: &Corpus, train: f64, validation: f64, seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
    if !(train > 0.0 && validation >= 0.0 && train + validation < 1.0) {
        return Err(Error::InvalidParameter(
            "split fractions must satisfy 0 < train, train + validation < 1".into(),
        ));
    }
    let mut messages = corpus.messages.clone();
    messages.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = messages.len();
    let n_train = (n as f64 * train).round() as usize;
    let n_val = (n as f64 * validation).round() as usize;
    let test = messages.split_off((n_train + n_val).min(n));
    let val = messages.split_off(n_train.min(messages.len()));
    Ok((
        Corpus::new(messages, Split::Train)?,
        Corpus::new(val, Split::Validation)?,
        Corpus::new(test, Split::Test)?,
    ))
}

/// Copy with every POS tag removed, so a tagger has to supply them.
pub fn strip_pos(corpus: &Corpus) -> Corpus {
    let messages = corpus
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.tokens.iter_mut().for_each(|t| t.pos = None);
            m
        })
        .collect();
    Corpus {
        messages,
        split: corpus.split,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::derive_cei_gold;
    use crate::segmenter::{segment, ConnectiveLexicon};

    fn small() -> SynthData {
        generate(&SynthConfig {
            n_messages: 300,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn deterministic_and_valid() {
        let a = small();
        let b = small();
        assert_eq!(a.corpus.messages, b.corpus.messages);
        assert_eq!(a.embeddings, b.embeddings);
        for m in &a.corpus {
            m.validate().unwrap();
            assert!(m.is_tagged());
        }
        let causal = a.corpus.iter().filter(|m| m.gold_causality == Some(true)).count();
        assert!((60..160).contains(&causal), "{causal}");
    }

    #[test]
    fn explanations_align_with_segments() {
        let data = small();
        let lex = ConnectiveLexicon::default();
        for m in data.corpus.iter().filter(|m| m.gold_causality == Some(true)) {
            let args = segment(m, &lex);
            let gold = derive_cei_gold(m, &args).unwrap();
            let (s, e) = m.gold_explanation_span.unwrap();
            let (a, b) = args[gold.chosen].byte_range(m);
            assert!(a <= s && e <= b, "{}", m.raw_text);
        }
    }

    #[test]
    fn split_partitions() {
        let data = small();
        let (tr, va, te) = split_corpus(&data.corpus, 0.8, 0.1, 1).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (240, 30, 30));
        assert!(strip_pos(&te).iter().all(|m| m.tokens.iter().all(|t| t.pos.is_none())));
    }
}
