use crate::corpus::Label;
use crate::error::Result;

/// Anything that maps texts to class probabilities `[p(ham), p(spam)]`.
pub trait TextClassifier: Sync {
    fn predict_proba(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>>;

    /// Argmax of [`predict_proba`](Self::predict_proba); ties go to ham.
    fn predict(&self, texts: &[&str]) -> Result<Vec<Label>> {
        Ok(self
            .predict_proba(texts)?
            .into_iter()
            .map(argmax)
            .collect())
    }
}

pub fn argmax(p: [f64; 2]) -> Label {
    if p[1] > p[0] {
        Label::Spam
    } else {
        Label::Ham
    }
}

/// Mean negative log-likelihood with probabilities clipped to `[1e-15, 1]`.
pub fn log_loss(probs: &[[f64; 2]], labels: &[Label]) -> f64 {
    if probs.is_empty() {
        return f64::NAN;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, l)| -p[l.index()].clamp(1e-15, 1.0).ln())
        .sum();
    // adding 0.0 turns a -0.0 from perfect predictions into 0.0
    total / probs.len() as f64 + 0.0
}
