//! Rule-based tokenizer for social-media text.
//!
//! Whitespace separates chunks. Inside a chunk, emoji clusters are split off,
//! whole-chunk URLs, mentions and emoticons stay intact, and leading/trailing
//! punctuation is detached from the word core. Runs of two or more periods form
//! a single ellipsis token.

use std::sync::LazyLock;

use regex::Regex;

use super::Token;

const EMOTICON: &str = r"(?:[<>]?[:;=][\-o\*'^]?[\)\]\(\[dDpPoO/\\\|@3\*\$}{]+|[\)\]\(\[/\\\|]+[\-o\*'^]?[:;=]|</?3+|\^[_\-.]?\^|[\-oOT>][_.][\-oOT<]|[xX][dD]+)";

static EMOTICON_WHOLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("^{EMOTICON}$")).expect("emoticon regex"));

static EMOTICON_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("^{EMOTICON}")).expect("emoticon regex"));

static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?i:https?://|www\.)\S+$|^[\w.+\-]+@[\w\-]+\.[\w.\-]+$").expect("url regex")
});

static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^@\w+$").expect("mention regex"));

/// True for single emoji code points (pictographs, dingbats, flags).
pub fn is_emoji_char(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2300..=0x23FF | 0x2B00..=0x2BFF | 0x3030 | 0x303D | 0x3297 | 0x3299)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F)
}

fn is_regional_indicator(c: char) -> bool {
    matches!(c as u32, 0x1F1E6..=0x1F1FF)
}

/// Emoticon (`:(`, `<3`, `xD`) or emoji cluster.
pub fn is_emoticon(text: &str) -> bool {
    if text.is_empty() {
        return false;
    }
    if EMOTICON_WHOLE.is_match(text) {
        return true;
    }
    let mut chars = text.chars();
    let first = chars.next().unwrap();
    is_emoji_char(first) && emoji_cluster_len(text) == text.len()
}

pub fn is_url(text: &str) -> bool {
    URL.is_match(text)
}

pub fn is_mention(text: &str) -> bool {
    MENTION.is_match(text)
}

fn is_peel_punct(c: char) -> bool {
    (c.is_ascii_punctuation() && !matches!(c, '@' | '#' | '_'))
        || matches!(
            c,
            '…' | '“' | '”' | '‘' | '’' | '«' | '»' | '¡' | '¿' | '–' | '—'
        )
}

/// True when every character is punctuation (and the token is not an emoticon).
pub fn is_punctuation(text: &str) -> bool {
    !text.is_empty() && text.chars().all(is_peel_punct) && !is_emoticon(text)
}

/// Byte length of the emoji cluster starting at `s[0]`.
fn emoji_cluster_len(s: &str) -> usize {
    let mut it = s.char_indices().peekable();
    let Some((_, first)) = it.next() else {
        return 0;
    };
    let mut end = first.len_utf8();
    if is_regional_indicator(first) {
        if let Some(&(i, c)) = it.peek() {
            if is_regional_indicator(c) {
                end = i + c.len_utf8();
                it.next();
            }
        }
    }
    while let Some(&(i, c)) = it.peek() {
        if is_emoji_modifier(c) {
            end = i + c.len_utf8();
            it.next();
        } else if c == '\u{200D}' {
            it.next();
            match it.peek() {
                Some(&(j, d)) if is_emoji_char(d) => {
                    end = j + d.len_utf8();
                    it.next();
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    end
}

fn push(out: &mut Vec<Token>, raw: &str, start: usize, end: usize) {
    debug_assert!(start < end);
    out.push(Token {
        text: raw[start..end].to_string(),
        pos: None,
        start,
        end,
    });
}

/// Split a chunk into emoji clusters and the text between them.
fn split_chunk(raw: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &raw[start..end];
    if is_url(chunk) || is_mention(chunk) || EMOTICON_WHOLE.is_match(chunk) {
        push(out, raw, start, end);
        return;
    }
    let mut seg_start = start;
    let mut i = start;
    while i < end {
        let c = raw[i..end].chars().next().unwrap();
        if is_emoji_char(c) {
            if seg_start < i {
                tokenize_piece(raw, seg_start, i, out);
            }
            let len = emoji_cluster_len(&raw[i..end]);
            push(out, raw, i, i + len);
            i += len;
            seg_start = i;
        } else {
            i += c.len_utf8();
        }
    }
    if seg_start < end {
        tokenize_piece(raw, seg_start, end, out);
    }
}

/// A piece has no whitespace and no emoji.
fn tokenize_piece(raw: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let piece = &raw[start..end];
    if is_url(piece) || is_mention(piece) || EMOTICON_WHOLE.is_match(piece) {
        push(out, raw, start, end);
        return;
    }
    let lead_len: usize = piece
        .chars()
        .take_while(|&c| is_peel_punct(c))
        .map(char::len_utf8)
        .sum();
    if lead_len == piece.len() {
        punct_region(raw, start, end, out);
        return;
    }
    let trail_len: usize = piece
        .chars()
        .rev()
        .take_while(|&c| is_peel_punct(c))
        .map(char::len_utf8)
        .sum();
    let core_start = start + lead_len;
    let core_end = end - trail_len;
    if lead_len > 0 {
        punct_region(raw, start, core_start, out);
    }
    push(out, raw, core_start, core_end);
    if trail_len > 0 {
        punct_region(raw, core_end, end, out);
    }
}

/// Tokenize a run made only of punctuation: emoticons, ellipses, single marks.
fn punct_region(raw: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let mut i = start;
    while i < end {
        let rest = &raw[i..end];
        if let Some(m) = EMOTICON_PREFIX.find(rest) {
            if m.end() >= 2 {
                push(out, raw, i, i + m.end());
                i += m.end();
                continue;
            }
        }
        if rest.starts_with("..") {
            let run = rest.bytes().take_while(|&b| b == b'.').count();
            push(out, raw, i, i + run);
            i += run;
            continue;
        }
        let c = rest.chars().next().unwrap();
        push(out, raw, i, i + c.len_utf8());
        i += c.len_utf8();
    }
}

/// Tokenize raw text. Tokens carry byte spans and no POS.
pub fn tokenize(raw: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chunk_start: Option<usize> = None;
    for (i, c) in raw.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                split_chunk(raw, s, i, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        split_chunk(raw, s, raw.len(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn ellipsis_and_emoticon() {
        assert_eq!(
            texts("My test result... :("),
            ["My", "test", "result", "...", ":("]
        );
        assert_eq!(texts("ok.. fine"), ["ok", "..", "fine"]);
        assert_eq!(texts("wow...:("), ["wow", "...", ":("]);
    }

    #[test]
    fn whitespace_only_split() {
        assert_eq!(
            texts("I like apple and banana"),
            ["I", "like", "apple", "and", "banana"]
        );
    }

    #[test]
    fn detaches_punctuation() {
        assert_eq!(
            texts("I went home, but he stayed."),
            ["I", "went", "home", ",", "but", "he", "stayed", "."]
        );
        assert_eq!(texts("(really?!)"), ["(", "really", "?", "!", ")"]);
        assert_eq!(texts("don't"), ["don't"]);
        assert_eq!(texts("b/c it rained"), ["b/c", "it", "rained"]);
    }

    #[test]
    fn urls_mentions_emoji() {
        assert_eq!(
            texts("@bob see http://x.co/a?b=1, ok"),
            ["@bob", "see", "http://x.co/a?b=1,", "ok"]
        );
        assert_eq!(texts("@bob,"), ["@bob", ","]);
        assert_eq!(texts("so happy😀😀"), ["so", "happy", "😀", "😀"]);
        assert_eq!(texts("👍🏽 nice"), ["👍🏽", "nice"]);
        assert_eq!(texts("love it <3"), ["love", "it", "<3"]);
        assert_eq!(texts("xD"), ["xD"]);
    }

    #[test]
    fn spans_are_byte_offsets() {
        let raw = "héllo, wörld";
        for t in tokenize(raw) {
            assert_eq!(&raw[t.start..t.end], t.text);
        }
    }

    #[test]
    fn emoticon_predicate() {
        assert!(is_emoticon(":("));
        assert!(is_emoticon(":-)"));
        assert!(is_emoticon("😀"));
        assert!(!is_emoticon("..."));
        assert!(!is_emoticon("dog"));
        assert!(is_punctuation("..."));
        assert!(is_punctuation(","));
        assert!(!is_punctuation(":("));
    }
}
