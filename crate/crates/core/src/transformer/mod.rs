//! Small post-layer-norm transformer encoder classifier with hand-written
//! backpropagation.
//!
//! All arithmetic is done in `f64`. Trainable tensors are rounded to `f32`
//! precision after initialization and after every optimizer step, which is
//! what the checkpoint format stores.

mod model;
mod params;

pub use model::{
    backward, backward_example, embed, forward, forward_embedded, logits, predict_proba, softmax,
    ExampleCache, ForwardCache, Mode,
};
pub use params::{init_params, glorot_bound, LayerParams, ModelParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub dropout_rate: f64,
    pub n_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 128,
            max_len: 64,
            vocab_size: 2000,
            dropout_rate: 0.1,
            n_classes: 2,
        }
    }
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_layers", self.n_layers),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("max_len", self.max_len),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("model {name} must be positive")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::invalid(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid("dropout_rate must lie in [0, 1)"));
        }
        if self.n_classes != 2 {
            return Err(Error::invalid("only binary classification is supported"));
        }
        Ok(())
    }
}

/// Transformer parameters bundled with the vocabulary used to encode text.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerClassifier {
    pub params: ModelParams,
    pub vocab: crate::tokenizer::Vocab,
}

impl crate::classifier::TextClassifier for TransformerClassifier {
    fn predict_proba(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>> {
        let seqs = texts
            .iter()
            .map(|t| crate::tokenizer::encode_str(&self.vocab, t, self.params.config.max_len))
            .collect::<Result<Vec<_>>>()?;
        predict_proba(&self.params, &seqs)
    }
}
