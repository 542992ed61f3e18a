//! Versioned model container.
//!
//! Layout: 8-byte magic, little-endian `u64` manifest length, manifest JSON,
//! then the payload of little-endian `f32` values for every tensor,
//! concatenated in manifest order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spamxai::baselines::{KnnClassifier, LinearSvm, NaiveBayes, NbClassifier, SparseVec, SvmClassifier, TfidfModel};
use spamxai::classifier::TextClassifier;
use spamxai::corpus::Label;
use spamxai::tokenizer::Vocab;
use spamxai::transformer::{ModelConfig, ModelParams, TransformerClassifier};

use crate::error::{CliError, CliResult};
use crate::ModelKind;

pub const MAGIC: &[u8; 8] = b"SPXCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset within the payload.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub seed: u64,
    pub config: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
    /// Kind-specific non-numeric state (vocabularies, hyperparameters).
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Transformer(TransformerClassifier),
    Nb(NbClassifier),
    Knn(KnnClassifier),
    Svm(SvmClassifier),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Transformer(_) => ModelKind::Transformer,
            Model::Nb(_) => ModelKind::Nb,
            Model::Knn(_) => ModelKind::Knn,
            Model::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn classifier(&self) -> &dyn TextClassifier {
        match self {
            Model::Transformer(m) => m,
            Model::Nb(m) => m,
            Model::Knn(m) => m,
            Model::Svm(m) => m,
        }
    }
}

struct Tensors(Vec<(String, Vec<usize>, Vec<f64>)>);

/// Decoded tensors by name: shape and values.
pub type TensorMap = HashMap<String, (Vec<usize>, Vec<f64>)>;

impl Tensors {
    fn push(&mut self, name: &str, shape: Vec<usize>, values: impl IntoIterator<Item = f64>) {
        self.0.push((name.to_string(), shape, values.into_iter().collect()));
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureMeta {
    terms: Vec<String>,
    n_docs: usize,
}

fn feature_meta(f: &TfidfModel) -> FeatureMeta {
    FeatureMeta {
        terms: f.terms().to_vec(),
        n_docs: f.n_docs(),
    }
}

fn exact_index(x: usize, what: &str) -> CliResult<f64> {
    if x > (1 << f32::MANTISSA_DIGITS) {
        return Err(CliError::Data(format!("{what} {x} is too large for the f32 payload")));
    }
    Ok(x as f64)
}

fn encode_model(model: &Model) -> CliResult<(Tensors, serde_json::Value)> {
    let mut t = Tensors(Vec::new());
    let meta = match model {
        Model::Transformer(m) => {
            for (name, view) in m.params.tensors() {
                t.push(&name, view.shape().to_vec(), view.iter().copied());
            }
            serde_json::json!({ "model": m.params.config, "vocab": m.vocab.to_text() })
        }
        Model::Nb(m) => {
            let v = m.features.n_features();
            t.push("tfidf.idf", vec![v], m.features.idf().iter().copied());
            t.push("nb.log_prior", vec![2], m.model.log_prior);
            t.push(
                "nb.log_likelihood",
                vec![2, v],
                m.model.log_likelihood.iter().flatten().copied(),
            );
            serde_json::json!({ "features": feature_meta(&m.features), "alpha": m.model.alpha })
        }
        Model::Knn(m) => {
            t.push("tfidf.idf", vec![m.features.n_features()], m.features.idf().iter().copied());
            let mut indptr = vec![0.0];
            let mut indices = Vec::new();
            let mut values = Vec::new();
            for v in &m.train_vectors {
                for &(i, x) in &v.0 {
                    indices.push(exact_index(i as usize, "feature index")?);
                    values.push(x);
                }
                indptr.push(exact_index(indices.len(), "nonzero count")?);
            }
            t.push("knn.indptr", vec![indptr.len()], indptr);
            t.push("knn.indices", vec![indices.len()], indices);
            t.push("knn.values", vec![values.len()], values);
            t.push(
                "knn.labels",
                vec![m.train_labels.len()],
                m.train_labels.iter().map(|l| l.index() as f64),
            );
            serde_json::json!({ "features": feature_meta(&m.features), "k": m.k })
        }
        Model::Svm(m) => {
            let v = m.features.n_features();
            t.push("tfidf.idf", vec![v], m.features.idf().iter().copied());
            t.push("svm.weights", vec![v], m.model.weights.iter().copied());
            t.push("svm.bias", vec![1], [m.model.bias]);
            serde_json::json!({ "features": feature_meta(&m.features) })
        }
    };
    Ok((t, meta))
}

/// Serializes `model` into the container format.
pub fn to_bytes(model: &Model, seed: u64, config: &impl Serialize) -> CliResult<Vec<u8>> {
    let (tensors, meta) = encode_model(model)?;
    let mut entries = Vec::new();
    let mut payload = Vec::new();
    for (name, shape, values) in &tensors.0 {
        if shape.iter().product::<usize>() != values.len() {
            return Err(CliError::Data(format!("tensor {name} does not match its shape")));
        }
        entries.push(TensorEntry {
            name: name.clone(),
            shape: shape.clone(),
            offset: payload.len() as u64,
        });
        for &x in values {
            let f = x as f32;
            if f64::from(f) != x && x.is_finite() {
                log::debug!("tensor {name} holds a value that is not f32-exact");
            }
            payload.extend_from_slice(&f.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        model_kind: model.kind(),
        seed,
        config: serde_json::to_value(config)?,
        tensors: entries,
        meta,
    };
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(16 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok(out)
}

fn format_err(msg: impl Into<String>) -> CliError {
    CliError::Core(spamxai::Error::Format(msg.into()))
}

/// Splits a container into its manifest and named tensors.
pub fn parse(bytes: &[u8]) -> CliResult<(Manifest, TensorMap)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(format_err("not a spamxai checkpoint"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if len > body.len() {
        return Err(format_err("checkpoint manifest is truncated"));
    }
    let version: serde_json::Value = serde_json::from_slice(&body[..len])?;
    let found = version.get("format_version").and_then(|v| v.as_u64());
    if found != Some(u64::from(FORMAT_VERSION)) {
        return Err(format_err(format!(
            "unsupported checkpoint format version {} (expected {FORMAT_VERSION})",
            found.map_or_else(|| "missing".to_string(), |v| v.to_string())
        )));
    }
    let manifest: Manifest = serde_json::from_slice(&body[..len])?;
    let payload = &body[len..];
    let expected: usize = manifest.tensors.iter().map(|t| t.shape.iter().product::<usize>() * 4).sum();
    if expected != payload.len() {
        return Err(format_err(format!(
            "payload holds {} bytes but the manifest describes {expected}",
            payload.len()
        )));
    }
    let mut tensors = HashMap::new();
    let mut cursor = 0u64;
    for entry in &manifest.tensors {
        if entry.offset != cursor {
            return Err(format_err(format!("tensor {} is not contiguous", entry.name)));
        }
        let n = entry.shape.iter().product::<usize>();
        let start = cursor as usize;
        let values = payload[start..start + 4 * n]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        cursor += 4 * n as u64;
        tensors.insert(entry.name.clone(), (entry.shape.clone(), values));
    }
    Ok((manifest, tensors))
}

fn take(
    tensors: &mut TensorMap,
    name: &str,
    shape: &[usize],
) -> CliResult<Vec<f64>> {
    let (s, v) = tensors
        .remove(name)
        .ok_or_else(|| format_err(format!("checkpoint lacks tensor {name}")))?;
    if s != shape {
        return Err(format_err(format!("tensor {name} has shape {s:?}, expected {shape:?}")));
    }
    Ok(v)
}

fn meta_field<T: serde::de::DeserializeOwned>(meta: &serde_json::Value, key: &str) -> CliResult<T> {
    let v = meta
        .get(key)
        .cloned()
        .ok_or_else(|| format_err(format!("checkpoint metadata lacks {key}")))?;
    Ok(serde_json::from_value(v)?)
}

fn features(
    meta: &serde_json::Value,
    tensors: &mut TensorMap,
) -> CliResult<TfidfModel> {
    let f: FeatureMeta = meta_field(meta, "features")?;
    let idf = take(tensors, "tfidf.idf", &[f.terms.len()])?;
    Ok(TfidfModel::from_parts(f.terms, idf, f.n_docs))
}

fn label(x: f64) -> CliResult<Label> {
    Label::from_index(x as usize)
        .filter(|_| x == 0.0 || x == 1.0)
        .ok_or_else(|| format_err(format!("invalid stored label {x}")))
}

pub fn from_bytes(bytes: &[u8]) -> CliResult<(Manifest, Model)> {
    let (manifest, mut t) = parse(bytes)?;
    let meta = &manifest.meta;
    let model = match manifest.model_kind {
        ModelKind::Transformer => {
            let config: ModelConfig = meta_field(meta, "model")?;
            config.validate()?;
            let vocab = Vocab::from_text(&meta_field::<String>(meta, "vocab")?)?;
            if vocab.len() != config.vocab_size {
                return Err(format_err("vocabulary size disagrees with the model config"));
            }
            let mut params = ModelParams::zeros(&config);
            for (name, mut view) in params.tensors_mut() {
                let shape = view.shape().to_vec();
                let values = take(&mut t, &name, &shape)?;
                for (dst, src) in view.iter_mut().zip(values) {
                    *dst = src;
                }
            }
            Model::Transformer(TransformerClassifier { params, vocab })
        }
        ModelKind::Nb => {
            let features = features(meta, &mut t)?;
            let v = features.n_features();
            let prior = take(&mut t, "nb.log_prior", &[2])?;
            let ll = take(&mut t, "nb.log_likelihood", &[2, v])?;
            Model::Nb(NbClassifier {
                features,
                model: NaiveBayes {
                    log_prior: [prior[0], prior[1]],
                    log_likelihood: [ll[..v].to_vec(), ll[v..].to_vec()],
                    alpha: meta_field(meta, "alpha")?,
                },
            })
        }
        ModelKind::Knn => {
            let features = features(meta, &mut t)?;
            let n_ptr = t.get("knn.indptr").map_or(0, |(s, _)| s.iter().product());
            let indptr = take(&mut t, "knn.indptr", &[n_ptr])?;
            let nnz = indptr.last().copied().unwrap_or(0.0) as usize;
            let indices = take(&mut t, "knn.indices", &[nnz])?;
            let values = take(&mut t, "knn.values", &[nnz])?;
            let labels = take(&mut t, "knn.labels", &[n_ptr.saturating_sub(1)])?;
            let mut train_vectors = Vec::with_capacity(labels.len());
            for w in indptr.windows(2) {
                let (a, b) = (w[0] as usize, w[1] as usize);
                if a > b || b > nnz {
                    return Err(format_err("corrupt knn row pointers"));
                }
                train_vectors.push(SparseVec(
                    indices[a..b].iter().zip(&values[a..b]).map(|(&i, &x)| (i as u32, x)).collect(),
                ));
            }
            Model::Knn(KnnClassifier {
                features,
                train_vectors,
                train_labels: labels.into_iter().map(label).collect::<CliResult<_>>()?,
                k: meta_field(meta, "k")?,
            })
        }
        ModelKind::Svm => {
            let features = features(meta, &mut t)?;
            let v = features.n_features();
            let weights = take(&mut t, "svm.weights", &[v])?;
            let bias = take(&mut t, "svm.bias", &[1])?[0];
            Model::Svm(SvmClassifier {
                features,
                model: LinearSvm { weights, bias },
            })
        }
    };
    if let Some(extra) = t.keys().next() {
        return Err(format_err(format!("unexpected tensor {extra}")));
    }
    Ok((manifest, model))
}

pub fn save(path: &Path, model: &Model, seed: u64, config: &impl Serialize) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, to_bytes(model, seed, config)?).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<(Manifest, Model)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    from_bytes(&bytes)
}
