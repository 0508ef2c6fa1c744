use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Coarse Twitter part-of-speech tagset (25 symbols).
///
/// | symbol | meaning                                          |
/// |--------|--------------------------------------------------|
/// | `N`    | common noun                                      |
/// | `O`    | pronoun (personal/WH, not possessive)            |
/// | `^`    | proper noun                                      |
/// | `S`    | nominal + possessive                             |
/// | `Z`    | proper noun + possessive                         |
/// | `V`    | verb, including copula and auxiliaries           |
/// | `A`    | adjective                                        |
/// | `R`    | adverb                                           |
/// | `!`    | interjection                                     |
/// | `D`    | determiner                                       |
/// | `P`    | pre- or postposition, subordinating conjunction  |
/// | `&`    | coordinating conjunction                         |
/// | `T`    | verb particle                                    |
/// | `X`    | existential *there*, predeterminers              |
/// | `Y`    | `X` + verbal                                     |
/// | `#`    | hashtag                                          |
/// | `@`    | at-mention                                       |
/// | `~`    | discourse marker, retweet marker                 |
/// | `U`    | URL or email address                             |
/// | `E`    | emoticon or emoji                                |
/// | `$`    | numeral                                          |
/// | `,`    | punctuation                                      |
/// | `G`    | other abbreviations, foreign words, garbage      |
/// | `L`    | nominal + verbal (e.g. *i'm*)                    |
/// | `M`    | proper noun + verbal                             |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Noun,
    Pronoun,
    ProperNoun,
    NominalPossessive,
    ProperPossessive,
    Verb,
    Adjective,
    Adverb,
    Interjection,
    Determiner,
    Preposition,
    CoordConj,
    Particle,
    Existential,
    ExistentialVerbal,
    Hashtag,
    Mention,
    DiscourseMarker,
    Url,
    Emoticon,
    Numeral,
    Punctuation,
    Other,
    NominalVerbal,
    ProperVerbal,
}

impl Tag {
    pub const ALL: [Tag; 25] = [
        Tag::Noun,
        Tag::Pronoun,
        Tag::ProperNoun,
        Tag::NominalPossessive,
        Tag::ProperPossessive,
        Tag::Verb,
        Tag::Adjective,
        Tag::Adverb,
        Tag::Interjection,
        Tag::Determiner,
        Tag::Preposition,
        Tag::CoordConj,
        Tag::Particle,
        Tag::Existential,
        Tag::ExistentialVerbal,
        Tag::Hashtag,
        Tag::Mention,
        Tag::DiscourseMarker,
        Tag::Url,
        Tag::Emoticon,
        Tag::Numeral,
        Tag::Punctuation,
        Tag::Other,
        Tag::NominalVerbal,
        Tag::ProperVerbal,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Tag::Noun => "N",
            Tag::Pronoun => "O",
            Tag::ProperNoun => "^",
            Tag::NominalPossessive => "S",
            Tag::ProperPossessive => "Z",
            Tag::Verb => "V",
            Tag::Adjective => "A",
            Tag::Adverb => "R",
            Tag::Interjection => "!",
            Tag::Determiner => "D",
            Tag::Preposition => "P",
            Tag::CoordConj => "&",
            Tag::Particle => "T",
            Tag::Existential => "X",
            Tag::ExistentialVerbal => "Y",
            Tag::Hashtag => "#",
            Tag::Mention => "@",
            Tag::DiscourseMarker => "~",
            Tag::Url => "U",
            Tag::Emoticon => "E",
            Tag::Numeral => "$",
            Tag::Punctuation => ",",
            Tag::Other => "G",
            Tag::NominalVerbal => "L",
            Tag::ProperVerbal => "M",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Tag::ALL.get(i).copied()
    }

    /// Tags that can introduce a discourse connective not listed in the lexicon.
    pub fn is_conjunction(self) -> bool {
        matches!(self, Tag::Preposition | Tag::CoordConj)
    }

    pub fn is_verb(self) -> bool {
        self == Tag::Verb
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTag(pub String);

impl fmt::Display for UnknownTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown POS tag `{}`", self.0)
    }
}

impl std::error::Error for UnknownTag {}

impl FromStr for Tag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL
            .iter()
            .copied()
            .find(|t| t.symbol() == s)
            .ok_or_else(|| UnknownTag(s.to_string()))
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for (i, tag) in Tag::ALL.iter().enumerate() {
            assert_eq!(tag.index(), i);
            assert_eq!(tag.symbol().parse::<Tag>().unwrap(), *tag);
        }
        assert!("NOUN".parse::<Tag>().is_err());
    }
}
