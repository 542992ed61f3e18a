use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sort_by_magnitude, Explanation, Method, WordScore};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::tokenizer::{TokenSeq, Vocab, CLS, CONTINUATION, PAD, SEP, SPECIALS};
use crate::transformer::{self, ModelParams};

/// A classifier whose first stage is a token-embedding lookup.
pub trait EmbeddingModel: Sync {
    fn embed(&self, ids: &[u32]) -> Result<Array2<f64>>;

    /// Probability of `target` and its gradient with respect to the
    /// embedding rows.
    fn target_prob_grad(&self, input: ArrayView2<'_, f64>, mask: &[u8], target: Label) -> Result<(f64, Array2<f64>)>;
}

impl EmbeddingModel for ModelParams {
    fn embed(&self, ids: &[u32]) -> Result<Array2<f64>> {
        transformer::embed(self, ids)
    }

    fn target_prob_grad(&self, input: ArrayView2<'_, f64>, mask: &[u8], target: Label) -> Result<(f64, Array2<f64>)> {
        let (logits, cache) = transformer::forward_embedded(self, input, mask, None)?;
        let p = transformer::softmax(logits);
        let c = target.index();
        let dlogits = [0, 1].map(|j| p[c] * (f64::from(u8::from(j == c)) - p[j]));
        let (_, dinput) = transformer::backward_example(self, &cache, dlogits);
        Ok((p[c], dinput))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgResult {
    pub ids: Vec<u32>,
    /// One value per position of the sequence.
    pub attributions: Vec<f64>,
    pub raw_sum: f64,
    pub input_prob: f64,
    pub baseline_prob: f64,
}

/// Left Riemann approximation of integrated gradients along the straight
/// path from the baseline embeddings to the input embeddings.
///
/// The baseline replaces every token except `[CLS]`, `[SEP]` and padding
/// with `[PAD]` and keeps the attention mask of the input.
pub fn integrated_gradients<M: EmbeddingModel + ?Sized>(
    model: &M,
    seq: &TokenSeq,
    target: Label,
    steps: usize,
) -> Result<IgResult> {
    if steps == 0 {
        return Err(Error::invalid("integrated gradients needs at least one step"));
    }
    let baseline_ids: Vec<u32> = seq
        .ids
        .iter()
        .map(|&id| if id == CLS || id == SEP { id } else { PAD })
        .collect();
    let x = model.embed(&seq.ids)?;
    let base = model.embed(&baseline_ids)?;
    let diff = &x - &base;
    let grads: Vec<Array2<f64>> = (0..steps)
        .into_par_iter()
        .map(|k| {
            let alpha = k as f64 / steps as f64;
            let point = &base + &(&diff * alpha);
            model.target_prob_grad(point.view(), &seq.mask, target).map(|(_, g)| g)
        })
        .collect::<Result<_>>()?;
    let mut mean = Array2::zeros(diff.raw_dim());
    for g in &grads {
        mean += g;
    }
    mean /= steps as f64;
    let attributions: Vec<f64> = (&diff * &mean).rows().into_iter().map(|r| r.sum()).collect();
    let (input_prob, _) = model.target_prob_grad(x.view(), &seq.mask, target)?;
    let (baseline_prob, _) = model.target_prob_grad(base.view(), &seq.mask, target)?;
    Ok(IgResult {
        ids: seq.ids.clone(),
        raw_sum: attributions.iter().sum(),
        attributions,
        input_prob,
        baseline_prob,
    })
}

/// Adds each `##` piece's score to the word it continues and drops `[PAD]`,
/// `[CLS]` and `[SEP]`.
pub fn merge_subwords(tokens: &[(String, f64)]) -> Result<Vec<(String, f64)>> {
    let dropped = [SPECIALS[PAD as usize], SPECIALS[CLS as usize], SPECIALS[SEP as usize]];
    let mut words: Vec<(String, f64)> = Vec::new();
    for (piece, score) in tokens {
        if dropped.contains(&piece.as_str()) {
            continue;
        }
        match (piece.strip_prefix(CONTINUATION), words.last_mut()) {
            (Some(rest), Some(last)) => {
                last.0.push_str(rest);
                last.1 += score;
            }
            (Some(_), None) => return Err(Error::OrphanContinuation(piece.clone())),
            (None, _) => words.push((piece.clone(), *score)),
        }
    }
    Ok(words)
}

/// Integrated-gradients explanation with word scores scaled to unit l2
/// norm; the unscaled total is kept in `raw_sum`.
pub fn intgrad_explain(
    params: &ModelParams,
    vocab: &Vocab,
    seq: &TokenSeq,
    target: Label,
    steps: usize,
) -> Result<Explanation> {
    let ig = integrated_gradients(params, seq, target, steps)?;
    let pieces: Vec<(String, f64)> = seq
        .ids
        .iter()
        .zip(&ig.attributions)
        .zip(&seq.mask)
        .filter(|(_, &m)| m == 1)
        .map(|((&id, &a), _)| vocab.piece(id).map(|p| (p.to_string(), a)))
        .collect::<Result<_>>()?;
    let merged = merge_subwords(&pieces)?;
    let norm = merged.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
    let mut words: Vec<WordScore> = merged
        .into_iter()
        .map(|(word, a)| WordScore {
            word,
            coefficient: if norm > 0.0 { a / norm } else { 0.0 },
        })
        .collect();
    sort_by_magnitude(&mut words);
    Ok(Explanation {
        method: Method::Intgrad,
        target_class: target,
        prediction: ig.input_prob,
        words,
        raw_sum: Some(ig.raw_sum),
    })
}
