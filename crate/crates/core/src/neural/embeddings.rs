use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Pretrained word vectors in GloVe text format. Lookups are lowercased.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Adds or replaces a vector.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite embedding for `{word}`")));
        }
        self.vectors.insert(word.to_lowercase(), vector);
        Ok(())
    }

    pub fn parse(reader: impl BufRead, expected_dim: usize) -> Result<Self> {
        if expected_dim == 0 {
            return Err(Error::InvalidParameter("embedding dim must be positive".into()));
        }
        let mut table = EmbeddingTable::new(expected_dim);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Embedding {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let values: Vec<&str> = parts.collect();
            if values.len() != expected_dim {
                return Err(Error::Embedding {
                    line: line_no,
                    message: format!("expected {expected_dim} values, found {}", values.len()),
                });
            }
            let vector = values
                .iter()
                .map(|v| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Embedding {
                        line: line_no,
                        message: format!("bad number `{v}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            table.vectors.insert(word.to_lowercase(), vector);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, expected_dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), expected_dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        match self.vectors.get(word) {
            Some(v) => Some(v),
            None => self.vectors.get(&word.to_lowercase()).map(Vec::as_slice),
        }
    }

    /// SHA-256 over the sorted (word, vector bits) pairs, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for w in words {
            h.update((w.len() as u64).to_le_bytes());
            h.update(w.as_bytes());
            for v in &self.vectors[w] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes the table in GloVe text format, words sorted.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for v in &self.vectors[w] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Mean of the in-vocabulary word vectors, `None` when every word is missing.
pub fn da_average(embeddings: &EmbeddingTable, words: &[String]) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; embeddings.dim()];
    let mut n = 0usize;
    for w in words {
        if let Some(v) = embeddings.get(w) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    Some(sum)
}
