use serde::{Deserialize, Serialize};

use super::tfidf::{SparseVec, TfidfModel};
use crate::classifier::TextClassifier;
use crate::corpus::Label;
use crate::error::{Error, Result};

/// Multinomial naive Bayes with Laplace/Lidstone smoothing `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub log_prior: [f64; 2],
    /// `log_likelihood[c][t]` = log p(term t | class c).
    pub log_likelihood: [Vec<f64>; 2],
    pub alpha: f64,
}

impl NaiveBayes {
    pub fn n_features(&self) -> usize {
        self.log_likelihood[0].len()
    }
}

pub fn nb_train(
    vectors: &[SparseVec],
    labels: &[Label],
    n_features: usize,
    alpha: f64,
) -> Result<NaiveBayes> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    if vectors.len() != labels.len() {
        return Err(Error::ShapeMismatch("vectors and labels differ in length".into()));
    }
    if vectors.is_empty() || n_features == 0 {
        return Err(Error::invalid("naive Bayes needs at least one document and feature"));
    }
    let mut class_docs = [0usize; 2];
    let mut counts = [vec![0.0; n_features], vec![0.0; n_features]];
    for (v, l) in vectors.iter().zip(labels) {
        let c = l.index();
        class_docs[c] += 1;
        for &(i, x) in &v.0 {
            let slot = counts[c].get_mut(i as usize).ok_or_else(|| {
                Error::ShapeMismatch(format!("feature {i} outside {n_features} features"))
            })?;
            *slot += x;
        }
    }
    let n = vectors.len() as f64;
    let log_prior = [
        (class_docs[0] as f64 / n).ln(),
        (class_docs[1] as f64 / n).ln(),
    ];
    let log_likelihood = counts.map(|row| {
        let denom = row.iter().sum::<f64>() + alpha * n_features as f64;
        row.iter().map(|&c| ((c + alpha) / denom).ln()).collect()
    });
    Ok(NaiveBayes {
        log_prior,
        log_likelihood,
        alpha,
    })
}

/// Predicted label and posterior probabilities `[p(ham), p(spam)]`.
pub fn nb_predict(model: &NaiveBayes, vector: &SparseVec) -> Result<(Label, [f64; 2])> {
    if model.n_features() == 0 {
        return Err(Error::NotFitted);
    }
    if let Some(i) = vector.max_index() {
        if i as usize >= model.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "feature {i} outside {} features",
                model.n_features()
            )));
        }
    }
    let joint: [f64; 2] =
        [0, 1].map(|c| model.log_prior[c] + vector.dot_dense(&model.log_likelihood[c]));
    let max = joint[0].max(joint[1]);
    let e = joint.map(|j| (j - max).exp());
    let z = e[0] + e[1];
    let probs = [e[0] / z, e[1] / z];
    Ok((crate::classifier::argmax(probs), probs))
}

/// Naive Bayes over raw term counts of a fitted vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbClassifier {
    pub features: TfidfModel,
    pub model: NaiveBayes,
}

impl NbClassifier {
    pub fn fit(texts: &[&str], labels: &[Label], alpha: f64) -> Result<Self> {
        let mut features = TfidfModel::fit(texts.iter().copied())?;
        features.snap_f32();
        let counts: Vec<SparseVec> = texts.iter().map(|t| features.counts(t)).collect();
        let mut model = nb_train(&counts, labels, features.n_features(), alpha)?;
        super::snap(&mut model.log_prior);
        for row in &mut model.log_likelihood {
            super::snap(row);
        }
        Ok(NbClassifier { features, model })
    }
}

impl TextClassifier for NbClassifier {
    fn predict_proba(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>> {
        texts
            .iter()
            .map(|t| nb_predict(&self.model, &self.features.counts(t)).map(|(_, p)| p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cash_is_spam() {
        let texts = ["cash cash", "hello"];
        let labels = [Label::Spam, Label::Ham];
        let clf = NbClassifier::fit(&texts, &labels, 1.0).unwrap();
        // Hand computation: V = {cash, hello}. Spam: p(cash) = (2+1)/(2+2) = 3/4.
        // Ham: p(cash) = (0+1)/(1+2) = 1/3. Equal priors, so
        // p(spam | cash) = (3/4) / (3/4 + 1/3) = 9/13.
        let p = clf.predict_proba(&["cash"]).unwrap()[0];
        assert!((p[1] - 9.0 / 13.0).abs() < 1e-6);
        assert_eq!(clf.predict(&["cash"]).unwrap(), vec![Label::Spam]);
    }

    #[test]
    fn symmetric_corpus_is_uniform() {
        let texts = ["same words", "same words"];
        let clf = NbClassifier::fit(&texts, &[Label::Ham, Label::Spam], 1.0).unwrap();
        let p = clf.predict_proba(&["same words"]).unwrap()[0];
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_alpha_approaches_priors() {
        let counts = vec![
            SparseVec(vec![(0, 3.0)]),
            SparseVec(vec![(1, 1.0)]),
            SparseVec(vec![(1, 2.0)]),
        ];
        let labels = [Label::Spam, Label::Ham, Label::Ham];
        let query = SparseVec(vec![(0, 2.0)]);
        let small = nb_train(&counts, &labels, 2, 1.0).unwrap();
        let large = nb_train(&counts, &labels, 2, 1e9).unwrap();
        let (_, p_small) = nb_predict(&small, &query).unwrap();
        let (_, p_large) = nb_predict(&large, &query).unwrap();
        assert!(p_small[1] > 0.5);
        assert!((p_large[1] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn likelihoods_normalize_and_posteriors_sum_to_one() {
        let texts = ["win cash now", "see you soon", "cash prize", "call me"];
        let labels = [Label::Spam, Label::Ham, Label::Spam, Label::Ham];
        let clf = NbClassifier::fit(&texts, &labels, 0.5).unwrap();
        for row in &clf.model.log_likelihood {
            let s: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
        for p in clf.predict_proba(&["cash", "you", "", "unknown"]).unwrap() {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_inputs() {
        let v = vec![SparseVec(vec![(0, 1.0)])];
        assert!(nb_train(&v, &[Label::Ham], 1, 0.0).is_err());
        assert!(nb_train(&v, &[], 1, 1.0).is_err());
        assert!(nb_train(&v, &[Label::Ham], 0, 1.0).is_err());
        let m = nb_train(&v, &[Label::Ham], 1, 1.0).unwrap();
        assert!(nb_predict(&m, &SparseVec(vec![(4, 1.0)])).is_err());
        let empty = NaiveBayes {
            log_prior: [0.0; 2],
            log_likelihood: [vec![], vec![]],
            alpha: 1.0,
        };
        assert!(matches!(nb_predict(&empty, &SparseVec::default()), Err(Error::NotFitted)));
    }
}
