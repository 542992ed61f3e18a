use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// One encoder block. Matrices are stored `[in, out]` so that a row of
/// activations is multiplied on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub pooler_w: Array2<f64>,
    pub pooler_b: Array1<f64>,
    pub classifier_w: Array2<f64>,
    pub classifier_b: Array1<f64>,
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl LayerParams {
    fn zeros(d: usize, ff: usize) -> Self {
        let m = |r, c| Array2::zeros((r, c));
        let v = |n| Array1::zeros(n);
        LayerParams {
            wq: m(d, d),
            bq: v(d),
            wk: m(d, d),
            bk: v(d),
            wv: m(d, d),
            bv: v(d),
            wo: m(d, d),
            bo: v(d),
            ln1_gain: v(d),
            ln1_bias: v(d),
            w1: m(d, ff),
            b1: v(ff),
            w2: m(ff, d),
            b2: v(d),
            ln2_gain: v(d),
            ln2_bias: v(d),
        }
    }

    fn named(&self) -> [(&'static str, ArrayViewD<'_, f64>); 16] {
        [
            ("wq", self.wq.view().into_dyn()),
            ("bq", self.bq.view().into_dyn()),
            ("wk", self.wk.view().into_dyn()),
            ("bk", self.bk.view().into_dyn()),
            ("wv", self.wv.view().into_dyn()),
            ("bv", self.bv.view().into_dyn()),
            ("wo", self.wo.view().into_dyn()),
            ("bo", self.bo.view().into_dyn()),
            ("ln1_gain", self.ln1_gain.view().into_dyn()),
            ("ln1_bias", self.ln1_bias.view().into_dyn()),
            ("w1", self.w1.view().into_dyn()),
            ("b1", self.b1.view().into_dyn()),
            ("w2", self.w2.view().into_dyn()),
            ("b2", self.b2.view().into_dyn()),
            ("ln2_gain", self.ln2_gain.view().into_dyn()),
            ("ln2_bias", self.ln2_bias.view().into_dyn()),
        ]
    }

    fn named_mut(&mut self) -> [(&'static str, ArrayViewMutD<'_, f64>); 16] {
        [
            ("wq", self.wq.view_mut().into_dyn()),
            ("bq", self.bq.view_mut().into_dyn()),
            ("wk", self.wk.view_mut().into_dyn()),
            ("bk", self.bk.view_mut().into_dyn()),
            ("wv", self.wv.view_mut().into_dyn()),
            ("bv", self.bv.view_mut().into_dyn()),
            ("wo", self.wo.view_mut().into_dyn()),
            ("bo", self.bo.view_mut().into_dyn()),
            ("ln1_gain", self.ln1_gain.view_mut().into_dyn()),
            ("ln1_bias", self.ln1_bias.view_mut().into_dyn()),
            ("w1", self.w1.view_mut().into_dyn()),
            ("b1", self.b1.view_mut().into_dyn()),
            ("w2", self.w2.view_mut().into_dyn()),
            ("b2", self.b2.view_mut().into_dyn()),
            ("ln2_gain", self.ln2_gain.view_mut().into_dyn()),
            ("ln2_bias", self.ln2_bias.view_mut().into_dyn()),
        ]
    }
}

impl ModelParams {
    /// All-zero tensors with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.d_model;
        ModelParams {
            config: *config,
            token_embedding: Array2::zeros((config.vocab_size, d)),
            position_embedding: Array2::zeros((config.max_len, d)),
            layers: (0..config.n_layers)
                .map(|_| LayerParams::zeros(d, config.d_ff))
                .collect(),
            pooler_w: Array2::zeros((d, d)),
            pooler_b: Array1::zeros(d),
            classifier_w: Array2::zeros((d, config.n_classes)),
            classifier_b: Array1::zeros(config.n_classes),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Tensors in a fixed order with dotted names such as `layers.0.wq`.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view().into_dyn()),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.named().into_iter().map(|(n, t)| (format!("layers.{i}.{n}"), t)));
        }
        out.push(("pooler_w".to_string(), self.pooler_w.view().into_dyn()));
        out.push(("pooler_b".to_string(), self.pooler_b.view().into_dyn()));
        out.push(("classifier_w".to_string(), self.classifier_w.view().into_dyn()));
        out.push(("classifier_b".to_string(), self.classifier_b.view().into_dyn()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view_mut().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view_mut().into_dyn()),
        ];
        for (i, layer) in self.layers.iter_mut().enumerate() {
            out.extend(
                layer
                    .named_mut()
                    .into_iter()
                    .map(|(n, t)| (format!("layers.{i}.{n}"), t)),
            );
        }
        out.push(("pooler_w".to_string(), self.pooler_w.view_mut().into_dyn()));
        out.push(("pooler_b".to_string(), self.pooler_b.view_mut().into_dyn()));
        out.push(("classifier_w".to_string(), self.classifier_w.view_mut().into_dyn()));
        out.push(("classifier_b".to_string(), self.classifier_b.view_mut().into_dyn()));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &ModelParams) -> Result<()> {
        let theirs = other.tensors();
        let mut mine = self.tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::ShapeMismatch("parameter sets differ in layout".into()));
        }
        for ((name, a), (_, b)) in mine.iter_mut().zip(&theirs) {
            if a.shape() != b.shape() {
                return Err(Error::ShapeMismatch(format!("tensor {name}")));
            }
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, mut t) in self.tensors_mut() {
            t.mapv_inplace(|x| x * factor);
        }
    }

    /// Rounds every value to the nearest `f32`.
    pub fn snap_f32(&mut self) {
        for (_, mut t) in self.tensors_mut() {
            t.mapv_inplace(|x| x as f32 as f64);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

/// Glorot-uniform projection and feed-forward matrices, `N(0, 0.02)`
/// embeddings, zero biases and unit layer-norm gains. Each tensor draws from
/// its own stream keyed by its position in [`ModelParams::tensors`].
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut params = ModelParams::zeros(config);
    let normal = Normal::new(0.0, 0.02).expect("valid normal");
    for (index, (name, mut t)) in params.tensors_mut().into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[tag::INIT, index as u64]);
        let leaf = name.rsplit('.').next().unwrap_or(&name);
        if name.ends_with("embedding") {
            t.mapv_inplace(|_| normal.sample(&mut rng));
        } else if leaf.starts_with("ln") && leaf.ends_with("gain") {
            t.fill(1.0);
        } else if t.ndim() == 2 {
            let bound = glorot_bound(t.shape()[0], t.shape()[1]);
            t.mapv_inplace(|_| rng.gen_range(-bound..=bound));
        }
    }
    params.snap_f32();
    Ok(params)
}
