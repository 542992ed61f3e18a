//! Cross-entropy loss, AdamW with decoupled weight decay and the epoch loop
//! for the transformer classifier.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::tokenizer::{encode_str, TokenSeq, Vocab};
use crate::transformer::{self, Mode, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub train_batch: usize,
    pub eval_batch: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            train_batch: 32,
            eval_batch: 64,
            learning_rate: 3e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.train_batch == 0 || self.eval_batch == 0 {
            return Err(Error::invalid("epochs and batch sizes must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("learning_rate and weight_decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::invalid("betas must lie in [0, 1) and epsilon must be positive"));
        }
        Ok(())
    }
}

/// Encoded texts with their labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub seqs: Vec<TokenSeq>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn encode(vocab: &Vocab, corpus: &Corpus, max_len: usize) -> Result<Dataset> {
        let seqs = corpus
            .iter()
            .map(|m| encode_str(vocab, &m.text, max_len))
            .collect::<Result<_>>()?;
        Ok(Dataset {
            seqs,
            labels: corpus.labels(),
        })
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }
}

/// Mean negative log-likelihood over the batch and its gradient with
/// respect to the logits.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[Label]) -> Result<(f64, Array2<f64>)> {
    if logits.nrows() != labels.len() || logits.ncols() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?} for {} labels",
            logits.dim(),
            labels.len()
        )));
    }
    let b = labels.len().max(1) as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for (i, label) in labels.iter().enumerate() {
        let row = [logits[[i, 0]], logits[[i, 1]]];
        let m = row[0].max(row[1]);
        let lse = m + ((row[0] - m).exp() + (row[1] - m).exp()).ln();
        let y = label.index();
        loss += lse - row[y];
        for c in 0..2 {
            let p = (row[c] - lse).exp();
            grad[[i, c]] = (p - f64::from(u8::from(c == y))) / b;
        }
    }
    Ok((loss / b, grad))
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        OptimizerState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One AdamW update of a flat tensor; `t` is the step number after
/// incrementing (starting at 1).
#[allow(clippy::too_many_arguments)]
pub fn adamw_update(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    config: &TrainConfig,
) {
    let c1 = 1.0 - config.beta1.powi(t as i32);
    let c2 = 1.0 - config.beta2.powi(t as i32);
    for i in 0..p.len() {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        p[i] -= config.learning_rate * (m_hat / (v_hat.sqrt() + config.epsilon) + config.weight_decay * p[i]);
    }
}

/// AdamW step over every tensor, followed by rounding the parameters to
/// `f32`. Nothing is modified when a gradient is not finite.
pub fn adamw_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<()> {
    let g = grads.tensors();
    if let Some((name, _)) = g.iter().find(|(_, t)| t.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFiniteGradient(name.clone()));
    }
    state.t += 1;
    let mut p = params.tensors_mut();
    let mut m = state.m.tensors_mut();
    let mut v = state.v.tensors_mut();
    if p.len() != g.len() || m.len() != g.len() || v.len() != g.len() {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }
    for i in 0..p.len() {
        if p[i].1.shape() != g[i].1.shape() || m[i].1.shape() != g[i].1.shape() {
            return Err(Error::ShapeMismatch(format!("tensor {}", p[i].0)));
        }
        let slice = |name: &str| Error::ShapeMismatch(format!("tensor {name} is not contiguous"));
        let gs = g[i].1.as_slice().ok_or_else(|| slice(&g[i].0))?;
        let name = p[i].0.clone();
        let ps = p[i].1.as_slice_mut().ok_or_else(|| slice(&name))?;
        let ms = m[i].1.as_slice_mut().ok_or_else(|| slice(&name))?;
        let vs = v[i].1.as_slice_mut().ok_or_else(|| slice(&name))?;
        adamw_update(ps, gs, ms, vs, state.t, config);
    }
    drop(p);
    params.snap_f32();
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// Eval-mode mean loss and accuracy; both are NaN for an empty dataset.
pub fn evaluate(params: &ModelParams, data: &Dataset, eval_batch: usize) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (seqs, labels) in data.seqs.chunks(eval_batch.max(1)).zip(data.labels.chunks(eval_batch.max(1))) {
        let rows = transformer::logits(params, seqs)?;
        let logits = Array2::from_shape_fn((rows.len(), 2), |(i, c)| rows[i][c]);
        let (l, _) = cross_entropy(&logits, labels)?;
        loss += l * labels.len() as f64;
        correct += rows
            .iter()
            .zip(labels)
            .filter(|(r, &y)| Label::from_index(usize::from(r[1] > r[0])) == Some(y))
            .count();
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Runs `config.epochs` epochs of shuffled mini-batch AdamW and records
/// eval-mode loss and accuracy on both sets after each epoch. The test set
/// is only read for those measurements.
pub fn train_loop(
    mut params: ModelParams,
    train: &Dataset,
    test: &Dataset,
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochLog>)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if train.seqs.len() != train.labels.len() || test.seqs.len() != test.labels.len() {
        return Err(Error::ShapeMismatch("sequences and labels differ in length".into()));
    }
    let mut state = OptimizerState::new(&params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, &[tag::SHUFFLE, epoch as u64]));
        for (b, idx) in order.chunks(config.train_batch).enumerate() {
            let seqs: Vec<TokenSeq> = idx.iter().map(|&i| train.seqs[i].clone()).collect();
            let labels: Vec<Label> = idx.iter().map(|&i| train.labels[i]).collect();
            let key = rng::derive(config.seed, &[tag::DROPOUT, epoch as u64, b as u64]);
            let (logits, cache) = transformer::forward(&params, &seqs, Mode::Train { key })?;
            let (_, dlogits) = cross_entropy(&logits, &labels)?;
            let grads = transformer::backward(&params, &cache, &dlogits)?;
            adamw_step(&mut params, &grads, &mut state, config)?;
        }
        let (train_loss, train_acc) = evaluate(&params, train, config.eval_batch)?;
        let (test_loss, test_acc) = evaluate(&params, test, config.eval_batch)?;
        let row = EpochLog {
            epoch: epoch + 1,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
        };
        log::info!(
            "epoch {}: train loss {:.4} acc {:.4}, test loss {:.4} acc {:.4}",
            row.epoch,
            train_loss,
            train_acc,
            test_loss,
            test_acc
        );
        log.push(row);
    }
    Ok((params, log))
}
