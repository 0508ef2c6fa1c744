//! One-message-per-line JSON corpus format.
//!
//! ```text
//! {"id": str, "text": str,
//!  "tokens": [{"t": str, "pos": str|null, "start": int, "end": int}] | null,
//!  "causality": bool|null, "explanation_span": [int, int]|null,
//!  "user_id": str|null, "label": str|null}
//! ```
//!
//! Lines without `tokens` are tokenized on load; their tokens carry no POS.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{tokenize, Corpus, Message, Split, Tag, Token};
use crate::error::{Error, Result};

fn opt_str(obj: &Map<String, Value>, field: &str, line: usize) -> Result<Option<String>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(Error::schema(line, field, "expected a string or null")),
    }
}

fn req_usize(obj: &Map<String, Value>, field: &str, line: usize) -> Result<usize> {
    obj.get(field)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::schema(line, field, "expected a non-negative integer"))
}

fn parse_token(v: &Value, line: usize, i: usize) -> Result<Token> {
    let field = format!("tokens[{i}]");
    let obj = v
        .as_object()
        .ok_or_else(|| Error::schema(line, &field, "expected an object"))?;
    let text = match obj.get("t") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(Error::schema(line, &format!("{field}.t"), "expected a string")),
    };
    let pos = match obj.get("pos") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(
            s.parse::<Tag>()
                .map_err(|e| Error::schema(line, &format!("{field}.pos"), e.to_string()))?,
        ),
        Some(_) => {
            return Err(Error::schema(
                line,
                &format!("{field}.pos"),
                "expected a tag symbol or null",
            ))
        }
    };
    let start = req_usize(obj, "start", line)
        .map_err(|_| Error::schema(line, &format!("{field}.start"), "expected a non-negative integer"))?;
    let end = req_usize(obj, "end", line)
        .map_err(|_| Error::schema(line, &format!("{field}.end"), "expected a non-negative integer"))?;
    Ok(Token {
        text,
        pos,
        start,
        end,
    })
}

/// Parses one JSON object into a validated message. `line` is used for errors.
pub fn message_from_json(value: &Value, line: usize) -> Result<Message> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema(line, "<root>", "expected a JSON object"))?;
    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(Error::schema(line, "id", "missing or not a string")),
    };
    let raw_text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(Error::schema(line, "text", "missing or not a string")),
    };
    let tokens = match obj.get("tokens") {
        None | Some(Value::Null) => tokenize(&raw_text),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| parse_token(v, line, i))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(Error::schema(line, "tokens", "expected an array or null")),
    };
    let gold_causality = match obj.get("causality") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => return Err(Error::schema(line, "causality", "expected a boolean or null")),
    };
    let gold_explanation_span = match obj.get("explanation_span") {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) if a.len() == 2 => {
            let s = a[0].as_u64();
            let e = a[1].as_u64();
            match (s, e) {
                (Some(s), Some(e)) => Some((s as usize, e as usize)),
                _ => {
                    return Err(Error::schema(
                        line,
                        "explanation_span",
                        "expected two non-negative integers",
                    ))
                }
            }
        }
        Some(_) => {
            return Err(Error::schema(
                line,
                "explanation_span",
                "expected [start, end] or null",
            ))
        }
    };
    let message = Message {
        id,
        raw_text,
        tokens,
        gold_causality,
        gold_explanation_span,
        user_id: opt_str(obj, "user_id", line)?,
        label: opt_str(obj, "label", line)?,
    };
    message.validate().map_err(|e| match e {
        Error::InvalidMessage { message: msg, .. } => {
            let field = if msg.contains("explanation span") {
                "explanation_span"
            } else {
                "tokens"
            };
            Error::schema(line, field, msg)
        }
        other => other,
    })?;
    Ok(message)
}

pub fn tokens_to_json(tokens: &[Token]) -> Value {
    Value::Array(
        tokens
            .iter()
            .map(|t| {
                json!({
                    "t": t.text,
                    "pos": t.pos.map(|p| p.symbol()),
                    "start": t.start,
                    "end": t.end,
                })
            })
            .collect(),
    )
}

pub fn message_to_json(m: &Message) -> Value {
    json!({
        "id": m.id,
        "text": m.raw_text,
        "tokens": tokens_to_json(&m.tokens),
        "causality": m.gold_causality,
        "explanation_span": m.gold_explanation_span.map(|(s, e)| [s, e]),
        "user_id": m.user_id,
        "label": m.label,
    })
}

/// Reads a corpus from any line-oriented reader. Blank lines are skipped.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut messages = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::Json {
            line: n,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Json {
            line: n,
            message: e.to_string(),
        })?;
        messages.push(message_from_json(&value, n)?);
    }
    Corpus::new(messages, Split::Unsplit)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file))
}

pub fn save_jsonl(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for m in corpus {
        serde_json::to_writer(&mut w, &message_to_json(m)).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
