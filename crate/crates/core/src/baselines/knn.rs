use serde::{Deserialize, Serialize};

use super::tfidf::{SparseVec, TfidfModel};
use crate::classifier::TextClassifier;
use crate::corpus::Label;
use crate::error::{Error, Result};

fn cosine_distance(a: &SparseVec, b: &SparseVec) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        1.0 - a.dot(b) / (na * nb)
    }
}

/// Spam votes among the `k` nearest neighbours by cosine distance.
/// Equidistant neighbours are ordered by training index.
pub fn knn_vote(
    train_vectors: &[SparseVec],
    train_labels: &[Label],
    query: &SparseVec,
    k: usize,
) -> Result<usize> {
    if train_vectors.len() != train_labels.len() {
        return Err(Error::ShapeMismatch("vectors and labels differ in length".into()));
    }
    if k == 0 || k > train_vectors.len() {
        return Err(Error::invalid(format!(
            "k must lie in 1..={}, got {k}",
            train_vectors.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train_vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (cosine_distance(v, query), i))
        .collect();
    dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(dist[..k]
        .iter()
        .filter(|&&(_, i)| train_labels[i] == Label::Spam)
        .count())
}

/// Majority vote of the `k` nearest neighbours; a tied vote goes to ham.
pub fn knn_predict(
    train_vectors: &[SparseVec],
    train_labels: &[Label],
    query: &SparseVec,
    k: usize,
) -> Result<Label> {
    let spam = knn_vote(train_vectors, train_labels, query, k)?;
    Ok(if 2 * spam > k { Label::Spam } else { Label::Ham })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnClassifier {
    pub features: TfidfModel,
    pub train_vectors: Vec<SparseVec>,
    pub train_labels: Vec<Label>,
    pub k: usize,
}

impl KnnClassifier {
    pub fn fit(texts: &[&str], labels: &[Label], k: usize) -> Result<Self> {
        if k == 0 || k > texts.len() {
            return Err(Error::invalid(format!("k must lie in 1..={}, got {k}", texts.len())));
        }
        let mut features = TfidfModel::fit(texts.iter().copied())?;
        features.snap_f32();
        let train_vectors = texts
            .iter()
            .map(|t| {
                let mut v = features.transform(t);
                for (_, x) in &mut v.0 {
                    *x = *x as f32 as f64;
                }
                v
            })
            .collect();
        Ok(KnnClassifier {
            features,
            train_vectors,
            train_labels: labels.to_vec(),
            k,
        })
    }
}

impl TextClassifier for KnnClassifier {
    /// Vote fractions. Ties in the vote resolve to ham, matching
    /// [`knn_predict`].
    fn predict_proba(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>> {
        use rayon::prelude::*;
        texts
            .par_iter()
            .map(|t| {
                let q = self.features.transform(t);
                let spam = knn_vote(&self.train_vectors, &self.train_labels, &q, self.k)?;
                let p = spam as f64 / self.k as f64;
                Ok([1.0 - p, p])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(u32, f64)]) -> SparseVec {
        SparseVec(pairs.to_vec())
    }

    #[test]
    fn exact_match_with_k1() {
        let train = vec![v(&[(0, 1.0)]), v(&[(1, 1.0)]), v(&[(2, 1.0)])];
        let labels = [Label::Ham, Label::Spam, Label::Ham];
        assert_eq!(knn_predict(&train, &labels, &v(&[(1, 1.0)]), 1).unwrap(), Label::Spam);
    }

    #[test]
    fn k_equals_n_gives_majority() {
        let train = vec![v(&[(0, 1.0)]), v(&[(1, 1.0)]), v(&[(2, 1.0)]), v(&[(3, 1.0)])];
        let labels = [Label::Spam, Label::Spam, Label::Ham, Label::Spam];
        assert_eq!(knn_predict(&train, &labels, &v(&[(2, 1.0)]), 4).unwrap(), Label::Spam);
    }

    #[test]
    fn tied_vote_goes_to_ham() {
        // Query sits at 45 degrees between two opposite-label neighbours.
        let train = vec![v(&[(0, 1.0)]), v(&[(1, 1.0)]), v(&[(2, 1.0)])];
        let labels = [Label::Spam, Label::Ham, Label::Spam];
        let q = v(&[(0, 1.0), (1, 1.0)]);
        assert_eq!(knn_vote(&train, &labels, &q, 2).unwrap(), 1);
        assert_eq!(knn_predict(&train, &labels, &q, 2).unwrap(), Label::Ham);
    }

    #[test]
    fn invalid_k() {
        let train = vec![v(&[(0, 1.0)])];
        assert!(knn_predict(&train, &[Label::Ham], &v(&[]), 0).is_err());
        assert!(knn_predict(&train, &[Label::Ham], &v(&[]), 2).is_err());
    }

    #[test]
    fn k1_memorizes_distinct_training_set() {
        let texts = ["win cash", "see you", "free prize now", "lunch later", "call me"];
        let labels = [Label::Spam, Label::Ham, Label::Spam, Label::Ham, Label::Ham];
        let clf = KnnClassifier::fit(&texts, &labels, 1).unwrap();
        assert_eq!(clf.predict(&texts).unwrap(), labels.to_vec());
    }
}
