use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse vector as `(feature index, value)` pairs sorted by index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec(pub Vec<(u32, f64)>);

impl SparseVec {
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.0.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&(_, v)| v == 0.0)
    }

    pub fn max_index(&self) -> Option<u32> {
        self.0.last().map(|&(i, _)| i)
    }
}

/// Smooth-idf TF-IDF: `idf = ln((1+N)/(1+df)) + 1`, raw term counts,
/// l2-normalized rows. Terms are whitespace tokens; the vocabulary is
/// sorted so feature indices do not depend on document order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TfidfParts")]
pub struct TfidfModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

#[derive(Deserialize)]
struct TfidfParts {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
}

impl From<TfidfParts> for TfidfModel {
    fn from(p: TfidfParts) -> Self {
        TfidfModel::from_parts(p.terms, p.idf, p.n_docs)
    }
}

impl TfidfModel {
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<TfidfModel> {
        let mut df: HashMap<&str, usize> = HashMap::new();
        let mut n_docs = 0;
        for text in texts {
            n_docs += 1;
            let mut seen: Vec<&str> = text.split_whitespace().collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::invalid("cannot fit TF-IDF on an empty corpus"));
        }
        let mut terms: Vec<&str> = df.keys().copied().collect();
        terms.sort_unstable();
        let idf = terms
            .iter()
            .map(|t| ((1.0 + n_docs as f64) / (1.0 + df[t] as f64)).ln() + 1.0)
            .collect();
        Ok(TfidfModel::from_parts(
            terms.into_iter().map(str::to_string).collect(),
            idf,
            n_docs,
        ))
    }

    pub fn from_parts(terms: Vec<String>, idf: Vec<f64>, n_docs: usize) -> TfidfModel {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        TfidfModel {
            terms,
            idf,
            n_docs,
            index,
        }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_features(&self) -> usize {
        self.terms.len()
    }

    pub fn term_index(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// Raw term counts over the fitted vocabulary; unseen terms are dropped.
    pub fn counts(&self, text: &str) -> SparseVec {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for t in text.split_whitespace() {
            if let Some(i) = self.term_index(t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v: Vec<(u32, f64)> = counts.into_iter().collect();
        v.sort_unstable_by_key(|&(i, _)| i);
        SparseVec(v)
    }

    pub fn transform(&self, text: &str) -> SparseVec {
        let mut v = self.counts(text);
        for (i, x) in &mut v.0 {
            *x *= self.idf[*i as usize];
        }
        let norm = v.norm();
        if norm > 0.0 {
            for (_, x) in &mut v.0 {
                *x /= norm;
            }
        }
        v
    }

    pub(crate) fn snap_f32(&mut self) {
        super::snap(&mut self.idf);
    }
}

pub fn tfidf_fit_transform(texts: &[&str]) -> Result<(TfidfModel, Vec<SparseVec>)> {
    let model = TfidfModel::fit(texts.iter().copied())?;
    let vectors = texts.iter().map(|t| model.transform(t)).collect();
    Ok((model, vectors))
}
