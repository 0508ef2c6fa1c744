use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};

use causex::corpus::{parse_jsonl, message_from_json, Corpus, Message};
use causex::model_file::read_raw;
use causex::{EmbeddingTable, PipelineModel};

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        _ => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_jsonl(open_input(path)?).with_context(|| format!("loading corpus {}", path.display()))
}

/// Dimension from the first non-empty line of a GloVe-style text file.
fn sniff_dim(path: &Path) -> Result<usize> {
    for line in open_input(path)?.lines() {
        let line = line?;
        let fields = line.trim_end().split(' ').count();
        if !line.trim().is_empty() {
            if fields < 2 {
                bail!("{}: first line has no vector", path.display());
            }
            return Ok(fields - 1);
        }
    }
    bail!("{}: no embeddings", path.display())
}

pub fn load_embeddings(path: &Path, dim: Option<usize>) -> Result<Arc<EmbeddingTable>> {
    let dim = match dim {
        Some(d) => d,
        None => sniff_dim(path)?,
    };
    let table = EmbeddingTable::load(path, dim).with_context(|| format!("loading embeddings {}", path.display()))?;
    Ok(Arc::new(table))
}

pub fn load_pipeline(model: &Path, embeddings: &Path) -> Result<PipelineModel> {
    let raw = read_raw(model).with_context(|| format!("reading model {}", model.display()))?;
    let dim = raw.manifest.embedding_fingerprint.dim;
    let table = load_embeddings(embeddings, Some(dim))?;
    Ok(raw.into_model(table)?)
}

/// One parsed input line: the original object and the message built from it.
pub struct Record {
    pub object: Map<String, Value>,
    pub message: Message,
}

/// Reads up to `max` records; returns an empty batch at end of input.
pub fn read_batch(lines: &mut impl Iterator<Item = io::Result<String>>, line_no: &mut usize, max: usize) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    while out.len() < max {
        let Some(line) = lines.next() else { break };
        *line_no += 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).with_context(|| format!("line {line_no}: malformed JSON"))?;
        let message = message_from_json(&value, *line_no)?;
        let Value::Object(object) = value else { unreachable!() };
        out.push(Record { object, message });
    }
    Ok(out)
}

pub fn write_json_line(out: &mut dyn Write, value: &Value) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
