//! On-disk format for a trained [`PipelineModel`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  b"CAUSEXMD"
//! u32    format version
//! u64    manifest length, then that many bytes of JSON
//! u32    array count
//! per array: u32 name length, name bytes, u64 element count, f32 elements
//! ```
//!
//! The manifest carries configuration, tagger weights, lexicons, the feature
//! space and the linear model. Neural parameters are the named `f32` arrays.
//! Embeddings are not stored; the manifest records their SHA-256 fingerprint
//! and the caller supplies the table when loading.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::PosTagger;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, SentimentLexicon};
use crate::linsvm::LinearModel;
use crate::neural::{Affine, EmbeddingTable, LstmParams, LstmWeights, NeuralModel, Task, Variant};
use crate::pipeline::{PipelineModel, RunConfig};
use crate::segmenter::ConnectiveLexicon;

pub const MAGIC: &[u8; 8] = b"CAUSEXMD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFingerprint {
    pub sha256: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralDescriptor {
    pub task: Task,
    pub variant: Variant,
    pub hidden_dim: usize,
    pub dropout_p: f64,
    pub word_lstm_input: Option<usize>,
    pub da_lstm_input: Option<usize>,
    /// Array names in parameter order.
    pub tensors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: RunConfig,
    pub tagger: PosTagger,
    pub lexicon: ConnectiveLexicon,
    pub sentiment: SentimentLexicon,
    pub feature_config: FeatureConfig,
    pub cp_model: LinearModel,
    pub cei_model: NeuralDescriptor,
    pub embedding_fingerprint: EmbeddingFingerprint,
}

pub fn to_bytes(model: &PipelineModel) -> Result<Vec<u8>> {
    let cei = &model.cei;
    let tensors = cei.tensors();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: model.config,
        tagger: model.tagger.clone(),
        lexicon: model.lexicon.clone(),
        sentiment: model.sentiment.clone(),
        feature_config: model.feature_config.clone(),
        cp_model: model.cp.clone(),
        cei_model: NeuralDescriptor {
            task: cei.task,
            variant: cei.variant,
            hidden_dim: cei.hidden_dim,
            dropout_p: cei.dropout_p,
            word_lstm_input: cei.word_lstm.as_ref().map(|l| l.input_dim),
            da_lstm_input: cei.da_lstm.as_ref().map(|l| l.input_dim),
            tensors: tensors.iter().map(|(n, _)| n.clone()).collect(),
        },
        embedding_fingerprint: EmbeddingFingerprint {
            sha256: cei.embeddings.fingerprint(),
            dim: cei.embeddings.dim(),
        },
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::ModelFormat(e.to_string()))?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, data) in &tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for &v in *data {
            let f = v as f32;
            if f as f64 != v {
                return Err(Error::ModelFormat(format!(
                    "parameter in `{name}` is not representable as f32"
                )));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_model(model: &PipelineModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(model)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::ModelFormat(format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::ModelFormat(format!("{what} too large")))
    }
}

/// Parsed file contents before the embeddings are attached.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub manifest: Manifest,
    pub arrays: Vec<(String, Vec<f64>)>,
}

pub fn parse_bytes(bytes: &[u8]) -> Result<RawModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::ModelFormat("bad magic bytes".into()));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let n = r.len("manifest length")?;
    let json = r.take(n, "manifest")?;
    let manifest: Manifest =
        serde_json::from_slice(json).map_err(|e| Error::ModelFormat(format!("manifest: {e}")))?;
    if manifest.format_version != version {
        return Err(Error::ModelFormat("manifest version disagrees with header".into()));
    }
    let count = r.u32("array count")? as usize;
    let mut arrays = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let name_len = r.u32("array name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "array name")?)
            .map_err(|_| Error::ModelFormat("array name is not UTF-8".into()))?
            .to_string();
        let len = r.len("array length")?;
        let raw = r.take(len.checked_mul(4).ok_or_else(|| Error::ModelFormat("array too large".into()))?, &name)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        arrays.push((name, data));
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes after the last array",
            bytes.len() - r.pos
        )));
    }
    Ok(RawModel { manifest, arrays })
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bytes(&bytes)
}

fn lstm_from(
    arrays: &mut std::collections::HashMap<String, Vec<f64>>,
    prefix: &str,
    input_dim: usize,
    hidden_dim: usize,
) -> Result<LstmParams> {
    let mut take = |suffix: &str| {
        let key = format!("{prefix}.{suffix}");
        arrays
            .remove(&key)
            .ok_or_else(|| Error::ModelFormat(format!("missing array `{key}`")))
    };
    Ok(LstmParams {
        input_dim,
        hidden_dim,
        forward: LstmWeights {
            w: take("forward.w")?,
            b: take("forward.b")?,
        },
        backward: LstmWeights {
            w: take("backward.w")?,
            b: take("backward.b")?,
        },
    })
}

impl RawModel {
    /// Attaches `embeddings`, which must match the stored fingerprint.
    pub fn into_model(self, embeddings: Arc<EmbeddingTable>) -> Result<PipelineModel> {
        let m = self.manifest;
        let fp = &m.embedding_fingerprint;
        if embeddings.dim() != fp.dim {
            return Err(Error::EmbeddingMismatch(format!(
                "model expects dimension {}, table has {}",
                fp.dim,
                embeddings.dim()
            )));
        }
        if embeddings.fingerprint() != fp.sha256 {
            return Err(Error::EmbeddingMismatch(
                "fingerprint differs from the table used in training".into(),
            ));
        }
        let d = &m.cei_model;
        let mut arrays: std::collections::HashMap<String, Vec<f64>> = self.arrays.into_iter().collect();
        let word_lstm = d
            .word_lstm_input
            .map(|i| lstm_from(&mut arrays, "word_lstm", i, d.hidden_dim))
            .transpose()?;
        let da_lstm = d
            .da_lstm_input
            .map(|i| lstm_from(&mut arrays, "da_lstm", i, d.hidden_dim))
            .transpose()?;
        let mut take = |key: &str| {
            arrays
                .remove(key)
                .ok_or_else(|| Error::ModelFormat(format!("missing array `{key}`")))
        };
        let output = Affine {
            input_dim: 2 * d.hidden_dim,
            w: take("output.w")?,
            b: take("output.b")?,
        };
        if let Some(extra) = arrays.keys().next() {
            return Err(Error::ModelFormat(format!("unexpected array `{extra}`")));
        }
        let cei = NeuralModel {
            task: d.task,
            variant: d.variant,
            embeddings,
            hidden_dim: d.hidden_dim,
            dropout_p: d.dropout_p,
            word_lstm,
            da_lstm,
            output,
        };
        cei.validate()?;
        Ok(PipelineModel {
            config: m.config,
            tagger: m.tagger,
            lexicon: m.lexicon,
            sentiment: m.sentiment,
            feature_config: m.feature_config,
            cp: m.cp_model,
            cei,
        })
    }
}

pub fn load_model(path: impl AsRef<Path>, embeddings: Arc<EmbeddingTable>) -> Result<PipelineModel> {
    read_raw(path)?.into_model(embeddings)
}

pub fn from_bytes(bytes: &[u8], embeddings: Arc<EmbeddingTable>) -> Result<PipelineModel> {
    parse_bytes(bytes)?.into_model(embeddings)
}
