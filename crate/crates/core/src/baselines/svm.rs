use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tfidf::{SparseVec, TfidfModel};
use crate::classifier::TextClassifier;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 10,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn score(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

fn sign(label: Label) -> f64 {
    match label {
        Label::Spam => 1.0,
        Label::Ham => -1.0,
    }
}

/// `lambda/2 (|w|^2 + b^2) + mean hinge loss`.
pub fn svm_objective(model: &LinearSvm, vectors: &[SparseVec], labels: &[Label], lambda: f64) -> f64 {
    let reg = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = vectors
        .iter()
        .zip(labels)
        .map(|(x, &l)| (1.0 - sign(l) * model.score(x)).max(0.0))
        .sum();
    0.5 * lambda * reg + hinge / vectors.len() as f64
}

/// Primal sub-gradient descent (Pegasos) on the regularized hinge loss.
///
/// Step size is `1/(lambda t)`; each step is followed by projection onto the
/// ball of radius `1/sqrt(lambda)`. The bias is handled as the weight of a
/// constant feature. Returns the average of all iterates together with the
/// objective of that average after every epoch.
pub fn svm_train(
    vectors: &[SparseVec],
    labels: &[Label],
    n_features: usize,
    config: &SvmConfig,
) -> Result<(LinearSvm, Vec<f64>)> {
    if vectors.len() != labels.len() {
        return Err(Error::ShapeMismatch("vectors and labels differ in length".into()));
    }
    if !(config.lambda > 0.0) || config.epochs == 0 {
        return Err(Error::invalid("svm needs lambda > 0 and at least one epoch"));
    }
    if !labels.contains(&Label::Ham) || !labels.contains(&Label::Spam) {
        return Err(Error::invalid("svm training set must contain both classes"));
    }
    if vectors.iter().any(|v| v.max_index().is_some_and(|i| i as usize >= n_features)) {
        return Err(Error::ShapeMismatch(format!("feature index outside {n_features} features")));
    }
    let lambda = config.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; n_features];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; n_features];
    let mut avg_b = 0.0;
    let mut t = 0usize;
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::stream(config.seed, &[tag::SVM, epoch as u64]));
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let (x, y) = (&vectors[i], sign(labels[i]));
            let margin = y * (x.dot_dense(&w) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            b *= shrink;
            if margin < 1.0 {
                for &(j, v) in &x.0 {
                    w[j as usize] += eta * y * v;
                }
                b += eta * y;
            }
            let norm = (w.iter().map(|v| v * v).sum::<f64>() + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
            let rate = 1.0 / t as f64;
            for (a, v) in avg_w.iter_mut().zip(&w) {
                *a += (v - *a) * rate;
            }
            avg_b += (b - avg_b) * rate;
        }
        let current = LinearSvm {
            weights: avg_w.clone(),
            bias: avg_b,
        };
        trace.push(svm_objective(&current, vectors, labels, lambda));
    }
    Ok((
        LinearSvm {
            weights: avg_w,
            bias: avg_b,
        },
        trace,
    ))
}

/// Spam when the decision value is strictly positive.
pub fn svm_predict(model: &LinearSvm, vector: &SparseVec) -> Label {
    if model.score(vector) > 0.0 {
        Label::Spam
    } else {
        Label::Ham
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmClassifier {
    pub features: TfidfModel,
    pub model: LinearSvm,
}

impl SvmClassifier {
    pub fn fit(texts: &[&str], labels: &[Label], config: &SvmConfig) -> Result<Self> {
        let mut features = TfidfModel::fit(texts.iter().copied())?;
        features.snap_f32();
        let vectors: Vec<SparseVec> = texts.iter().map(|t| features.transform(t)).collect();
        let (mut model, _) = svm_train(&vectors, labels, features.n_features(), config)?;
        super::snap(&mut model.weights);
        model.bias = model.bias as f32 as f64;
        Ok(SvmClassifier { features, model })
    }
}

impl TextClassifier for SvmClassifier {
    /// Logistic squashing of the decision value, so that the argmax agrees
    /// with [`svm_predict`].
    fn predict_proba(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>> {
        Ok(texts
            .iter()
            .map(|t| {
                let s = self.model.score(&self.features.transform(t));
                let p = 1.0 / (1.0 + (-s).exp());
                [1.0 - p, p]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u32) -> SparseVec {
        SparseVec(vec![(i, 1.0)])
    }

    #[test]
    fn separable_pair() {
        let vectors = vec![e(0), e(1)];
        let labels = [Label::Spam, Label::Ham];
        let (m, _) = svm_train(&vectors, &labels, 2, &SvmConfig::default()).unwrap();
        assert_eq!(svm_predict(&m, &e(0)), Label::Spam);
        assert_eq!(svm_predict(&m, &e(1)), Label::Ham);
    }

    #[test]
    fn zero_vector_falls_to_bias() {
        let vectors = vec![e(0), e(1), e(2)];
        let labels = [Label::Spam, Label::Ham, Label::Ham];
        let (m, _) = svm_train(&vectors, &labels, 3, &SvmConfig::default()).unwrap();
        let expected = if m.bias > 0.0 { Label::Spam } else { Label::Ham };
        assert_eq!(svm_predict(&m, &SparseVec::default()), expected);
        assert_eq!(svm_predict(&m, &SparseVec::default()), expected);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let vectors = vec![e(0), e(1), SparseVec(vec![(0, 0.6), (2, 0.8)]), e(2)];
        let labels = [Label::Spam, Label::Ham, Label::Spam, Label::Ham];
        let cfg = SvmConfig { epochs: 5, ..SvmConfig::default() };
        let a = svm_train(&vectors, &labels, 3, &cfg).unwrap();
        let b = svm_train(&vectors, &labels, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let vectors = vec![e(0), e(1)];
        assert!(svm_train(&vectors, &[Label::Ham, Label::Ham], 2, &SvmConfig::default()).is_err());
    }

    #[test]
    fn averaged_objective_non_increasing_on_separable_data() {
        let vectors: Vec<SparseVec> = (0..8)
            .map(|i| SparseVec(vec![(i % 2, 1.0), (2 + i, 0.3)]))
            .collect();
        let labels: Vec<Label> = (0..8)
            .map(|i| if i % 2 == 0 { Label::Spam } else { Label::Ham })
            .collect();
        for seed in 0..5 {
            let cfg = SvmConfig { lambda: 0.5, epochs: 20, seed };
            let (_, trace) = svm_train(&vectors, &labels, 10, &cfg).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "objective rose: {trace:?}");
            }
        }
    }

    #[test]
    fn fits_text() {
        let texts = ["win cash now", "free cash prize", "see you later", "home for dinner"];
        let labels = [Label::Spam, Label::Spam, Label::Ham, Label::Ham];
        let clf = SvmClassifier::fit(&texts, &labels, &SvmConfig::default()).unwrap();
        assert_eq!(clf.predict(&texts).unwrap(), labels.to_vec());
    }
}
