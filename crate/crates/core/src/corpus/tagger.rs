//! Greedy averaged-perceptron POS tagger.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::{is_emoticon, is_mention, is_punctuation, is_url};
use super::{Corpus, Tag, Token};
use crate::error::{Error, Result};

const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

/// Tags fixed by surface form regardless of any model.
pub fn forced_tag(text: &str) -> Option<Tag> {
    if is_emoticon(text) {
        Some(Tag::Emoticon)
    } else if is_url(text) {
        Some(Tag::Url)
    } else if is_mention(text) {
        Some(Tag::Mention)
    } else if is_punctuation(text) {
        Some(Tag::Punctuation)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PosTagger {
    /// feature -> nonzero (tag, weight) pairs, sorted by tag.
    weights: BTreeMap<String, Vec<(Tag, f64)>>,
    tag_set: Vec<Tag>,
    averaged: bool,
}

fn normalize(word: &str) -> String {
    if !word.is_empty() && word.chars().all(|c| c.is_ascii_digit()) {
        if word.len() == 4 {
            "!YEAR".to_string()
        } else {
            "!DIGITS".to_string()
        }
    } else {
        word.to_lowercase()
    }
}

fn shape(word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if !out.ends_with(s) {
            out.push(s);
        }
    }
    out
}

fn suffix(word: &str, n: usize) -> &str {
    let start = word
        .char_indices()
        .rev()
        .nth(n.saturating_sub(1))
        .map_or(0, |(i, _)| i);
    &word[start..]
}

fn prefix(word: &str) -> &str {
    word.char_indices().nth(1).map_or(word, |(i, _)| &word[..i])
}

/// Padded context: `context[i + 2]` is word `i`.
fn context(words: &[&str]) -> Vec<String> {
    let mut ctx = Vec::with_capacity(words.len() + 4);
    ctx.extend(START.iter().map(|s| s.to_string()));
    ctx.extend(words.iter().map(|w| normalize(w)));
    ctx.extend(END.iter().map(|s| s.to_string()));
    ctx
}

fn features(i: usize, ctx: &[String], prev: &str, prev2: &str) -> Vec<String> {
    let w = &ctx[i + 2];
    vec![
        "bias".to_string(),
        format!("i suffix {}", suffix(w, 3)),
        format!("i pref1 {}", prefix(w)),
        format!("i shape {}", shape(w)),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {w}"),
        format!("i-1 tag+i word {prev} {w}"),
        format!("i-1 word {}", ctx[i + 1]),
        format!("i-1 suffix {}", suffix(&ctx[i + 1], 3)),
        format!("i-2 word {}", ctx[i]),
        format!("i+1 word {}", ctx[i + 3]),
        format!("i+1 suffix {}", suffix(&ctx[i + 3], 3)),
        format!("i+2 word {}", ctx[i + 4]),
    ]
}

/// Weights under training, with the bookkeeping needed for lazy averaging.
struct Learner {
    weights: HashMap<String, [f64; 25]>,
    totals: HashMap<String, [f64; 25]>,
    stamps: HashMap<String, [u64; 25]>,
    instances: u64,
}

impl Learner {
    fn new() -> Self {
        Learner {
            weights: HashMap::new(),
            totals: HashMap::new(),
            stamps: HashMap::new(),
            instances: 0,
        }
    }

    fn predict(&self, feats: &[String], tag_set: &[Tag]) -> Tag {
        let mut scores = [0.0f64; 25];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, v) in scores.iter_mut().zip(w) {
                    *s += v;
                }
            }
        }
        argmax(&scores, tag_set)
    }

    fn bump(&mut self, feat: &str, tag: Tag, delta: f64) {
        let k = tag.index();
        let w = self.weights.entry(feat.to_string()).or_insert([0.0; 25]);
        let total = self.totals.entry(feat.to_string()).or_insert([0.0; 25]);
        let stamp = self.stamps.entry(feat.to_string()).or_insert([0; 25]);
        total[k] += (self.instances - stamp[k]) as f64 * w[k];
        stamp[k] = self.instances;
        w[k] += delta;
    }

    /// Applies the update for the current instance, then closes it; the average
    /// runs over the weight vectors held after each instance.
    fn update(&mut self, truth: Tag, guess: Tag, feats: &[String]) {
        if truth != guess {
            for f in feats {
                self.bump(f, truth, 1.0);
                self.bump(f, guess, -1.0);
            }
        }
        self.instances += 1;
    }

    fn averaged(self) -> BTreeMap<String, Vec<(Tag, f64)>> {
        let n = self.instances.max(1) as f64;
        let mut out = BTreeMap::new();
        for (feat, w) in &self.weights {
            let total = &self.totals[feat];
            let stamp = &self.stamps[feat];
            let entries: Vec<(Tag, f64)> = (0..25)
                .filter_map(|k| {
                    let t = total[k] + (self.instances - stamp[k]) as f64 * w[k];
                    let avg = t / n;
                    (avg != 0.0).then(|| (Tag::ALL[k], avg))
                })
                .collect();
            if !entries.is_empty() {
                out.insert(feat.clone(), entries);
            }
        }
        out
    }
}

fn argmax(scores: &[f64; 25], tag_set: &[Tag]) -> Tag {
    let mut best = tag_set[0];
    for &t in &tag_set[1..] {
        if scores[t.index()] > scores[best.index()] {
            best = t;
        }
    }
    best
}

impl PosTagger {
    /// Trains an averaged perceptron on a fully tagged corpus.
    pub fn train(corpus: &Corpus, epochs: usize, seed: u64) -> Result<Self> {
        if epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut sentences: Vec<(Vec<&str>, Vec<Tag>)> = Vec::with_capacity(corpus.len());
        let mut present = [false; 25];
        for m in corpus {
            let mut tags = Vec::with_capacity(m.tokens.len());
            for t in &m.tokens {
                let tag = t.pos.ok_or_else(|| Error::UntaggedToken {
                    id: m.id.clone(),
                    token: t.text.clone(),
                })?;
                present[tag.index()] = true;
                tags.push(tag);
            }
            if !tags.is_empty() {
                sentences.push((m.tokens.iter().map(|t| t.text.as_str()).collect(), tags));
            }
        }
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let tag_set: Vec<Tag> = Tag::ALL.into_iter().filter(|t| present[t.index()]).collect();

        let mut learner = Learner::new();
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &s in &order {
                let (words, gold) = &sentences[s];
                let ctx = context(words);
                let mut prev = START[0].to_string();
                let mut prev2 = START[1].to_string();
                for (i, &truth) in gold.iter().enumerate() {
                    let feats = features(i, &ctx, &prev, &prev2);
                    let guess = learner.predict(&feats, &tag_set);
                    learner.update(truth, guess, &feats);
                    prev2 = std::mem::replace(&mut prev, guess.symbol().to_string());
                }
            }
        }
        Ok(PosTagger {
            weights: learner.averaged(),
            tag_set,
            averaged: true,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.averaged && !self.tag_set.is_empty()
    }

    pub fn tag_set(&self) -> &[Tag] {
        &self.tag_set
    }

    pub fn weights(&self) -> &BTreeMap<String, Vec<(Tag, f64)>> {
        &self.weights
    }

    fn score(&self, feats: &[String]) -> Tag {
        let mut scores = [0.0f64; 25];
        for f in feats {
            if let Some(ws) = self.weights.get(f) {
                for &(t, w) in ws {
                    scores[t.index()] += w;
                }
            }
        }
        argmax(&scores, &self.tag_set)
    }

    /// Tags a word sequence greedily; forced tags override the model.
    pub fn tag_words(&self, words: &[&str]) -> Vec<Tag> {
        let ctx = context(words);
        let mut prev = START[0].to_string();
        let mut prev2 = START[1].to_string();
        let mut out = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            let tag = forced_tag(w)
                .unwrap_or_else(|| self.score(&features(i, &ctx, &prev, &prev2)));
            out.push(tag);
            prev2 = std::mem::replace(&mut prev, tag.symbol().to_string());
        }
        out
    }
}

/// Fills in missing POS tags. Tokens that already carry a tag keep it.
pub fn tag_pos(tokens: &[Token], tagger: &PosTagger) -> Result<Vec<Token>> {
    if tokens.iter().all(|t| t.pos.is_some()) {
        return Ok(tokens.to_vec());
    }
    if !tagger.is_trained() {
        let mut out = tokens.to_vec();
        for t in &mut out {
            if t.pos.is_none() {
                t.pos = Some(forced_tag(&t.text).ok_or_else(|| Error::NoTagSource {
                    token: t.text.clone(),
                })?);
            }
        }
        return Ok(out);
    }
    let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let predicted = tagger.tag_words(&words);
    Ok(tokens
        .iter()
        .zip(predicted)
        .map(|(t, p)| Token {
            pos: Some(t.pos.unwrap_or(p)),
            ..t.clone()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Message, Split};

    fn tagged(id: &str, pairs: &[(&str, Tag)]) -> Message {
        let text = pairs.iter().map(|p| p.0).collect::<Vec<_>>().join(" ");
        let mut m = Message::new(id, text);
        assert_eq!(m.tokens.len(), pairs.len());
        for (t, (_, tag)) in m.tokens.iter_mut().zip(pairs) {
            t.pos = Some(*tag);
        }
        m
    }

    fn toy_corpus() -> Corpus {
        use Tag::*;
        let sents: Vec<Vec<(&str, Tag)>> = vec![
            vec![("the", Determiner), ("dog", Noun), ("barks", Verb)],
            vec![("a", Determiner), ("dog", Noun), ("runs", Verb)],
            vec![("i", Pronoun), ("love", Verb), ("my", Determiner), ("dog", Noun)],
            vec![("she", Pronoun), ("fed", Verb), ("the", Determiner), ("dog", Noun)],
            vec![("the", Determiner), ("cat", Noun), ("sleeps", Verb)],
            vec![("dog", Noun), ("food", Noun), ("is", Verb), ("cheap", Adjective)],
            vec![("we", Pronoun), ("walk", Verb), ("the", Determiner), ("dog", Noun), ("daily", Adverb)],
            vec![("my", Determiner), ("cat", Noun), ("hates", Verb), ("the", Determiner), ("dog", Noun)],
            vec![("he", Pronoun), ("runs", Verb), ("fast", Adverb)],
            vec![("the", Determiner), ("dog", Noun), ("and", CoordConj), ("cat", Noun), ("play", Verb)],
        ];
        let msgs = sents
            .iter()
            .enumerate()
            .map(|(i, s)| tagged(&i.to_string(), s))
            .collect();
        Corpus::new(msgs, Split::Train).unwrap()
    }

    #[test]
    fn fits_toy_corpus_exactly() {
        let corpus = toy_corpus();
        let tagger = PosTagger::train(&corpus, 5, 13).unwrap();
        for m in &corpus {
            let words: Vec<&str> = m.tokens.iter().map(|t| t.text.as_str()).collect();
            let gold: Vec<Tag> = m.tokens.iter().map(|t| t.pos.unwrap()).collect();
            assert_eq!(tagger.tag_words(&words), gold, "sentence {}", m.id);
        }
        assert_eq!(tagger.tag_words(&["dog"]), [Tag::Noun]);
        assert_eq!(tagger.tag_words(&["i", "love", "the", "dog"])[3], Tag::Noun);
    }

    #[test]
    fn single_sentence_one_epoch() {
        use Tag::*;
        let m = tagged("0", &[("the", Determiner), ("dog", Noun), ("barks", Verb)]);
        let corpus = Corpus::new(vec![m], Split::Train).unwrap();
        let tagger = PosTagger::train(&corpus, 1, 0).unwrap();
        assert_eq!(
            tagger.tag_words(&["the", "dog", "barks"]),
            [Determiner, Noun, Verb]
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let corpus = toy_corpus();
        let a = PosTagger::train(&corpus, 3, 7).unwrap();
        let b = PosTagger::train(&corpus, 3, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_and_untagged() {
        let empty = Corpus::default();
        assert!(matches!(PosTagger::train(&empty, 1, 0), Err(Error::EmptyCorpus)));
        let m = Message::new("u", "no tags here");
        let corpus = Corpus::new(vec![m], Split::Train).unwrap();
        assert!(matches!(
            PosTagger::train(&corpus, 1, 0),
            Err(Error::UntaggedToken { .. })
        ));
    }

    #[test]
    fn pass_through_and_forced_tags() {
        let mut m = Message::new("p", "sad :(");
        m.tokens[0].pos = Some(Tag::Adjective);
        m.tokens[1].pos = Some(Tag::Noun);
        let untrained = PosTagger::default();
        assert_eq!(tag_pos(&m.tokens, &untrained).unwrap(), m.tokens);

        let trained = PosTagger::train(&toy_corpus(), 2, 1).unwrap();
        let out = tag_pos(&Message::new("q", "the dog :( , ok").tokens, &trained).unwrap();
        assert_eq!(out[2].pos, Some(Tag::Emoticon));
        assert_eq!(out[3].pos, Some(Tag::Punctuation));
        // Pre-existing tags survive even a trained tagger.
        assert_eq!(tag_pos(&m.tokens, &trained).unwrap(), m.tokens);
    }

    #[test]
    fn untrained_tagger_needs_tags() {
        let toks = Message::new("x", "hello").tokens;
        assert!(matches!(
            tag_pos(&toks, &PosTagger::default()),
            Err(Error::NoTagSource { .. })
        ));
        // Purely forced tokens need no model.
        let toks = Message::new("y", ":( ...").tokens;
        let out = tag_pos(&toks, &PosTagger::default()).unwrap();
        assert_eq!(out[0].pos, Some(Tag::Emoticon));
        assert_eq!(out[1].pos, Some(Tag::Punctuation));
    }
}
