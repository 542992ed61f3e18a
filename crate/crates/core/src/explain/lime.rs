use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sort_by_magnitude, Explanation, Method, WordScore};
use crate::classifier::TextClassifier;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::CleanText;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub num_features: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: 1000,
            num_features: 15,
            kernel_width: 25.0,
            ridge_lambda: 1.0,
            seed: 42,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 10 {
            return Err(Error::invalid("lime needs at least 10 samples"));
        }
        if self.num_features == 0 {
            return Err(Error::invalid("lime needs at least one feature"));
        }
        if !(self.kernel_width > 0.0) || !(self.ridge_lambda >= 0.0) {
            return Err(Error::invalid("kernel width must be positive and ridge lambda non-negative"));
        }
        Ok(())
    }
}

/// Weighted ridge regression with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Weighted coefficient of determination.
    pub score: f64,
}

/// Minimizes `sum_i w_i (y_i - b - x_i.beta)^2 + lambda |beta|^2`.
///
/// The intercept is removed by centering on the weighted means. Standard
/// errors use the sandwich `s^2 A^-1 X'WX A^-1` with `A = X'WX + lambda I`
/// and `s^2` the weighted residual variance.
pub fn weighted_ridge(x: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> Result<RidgeFit> {
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    if y.len() != n || w.len() != n || x.iter().any(|r| r.len() != p) {
        return Err(Error::ShapeMismatch("ridge design, targets and weights disagree".into()));
    }
    let wsum: f64 = w.iter().sum();
    if n == 0 || !(wsum > 0.0) {
        return Err(Error::invalid("ridge needs rows with positive total weight"));
    }
    let xbar: Vec<f64> = (0..p)
        .map(|j| x.iter().zip(w).map(|(r, wi)| wi * r[j]).sum::<f64>() / wsum)
        .collect();
    let ybar = y.iter().zip(w).map(|(yi, wi)| wi * yi).sum::<f64>() / wsum;
    let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - xbar[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ybar);
    let wv = DVector::from_column_slice(w);
    let xw = DMatrix::from_fn(n, p, |i, j| xc[(i, j)] * wv[i]);
    let gram = xw.transpose() * &xc;
    let a = &gram + DMatrix::identity(p, p) * lambda;
    let a_inv = a
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| a.clone().try_inverse())
        .ok_or_else(|| Error::invalid("ridge system is singular"))?;
    let beta = &a_inv * (xw.transpose() * &yc);
    let fitted = &xc * &beta;
    let resid = &yc - &fitted;
    let rss: f64 = (0..n).map(|i| w[i] * resid[i] * resid[i]).sum();
    let tss: f64 = (0..n).map(|i| w[i] * yc[i] * yc[i]).sum();
    let dof = (n as f64 - p as f64 - 1.0).max(1.0);
    let s2 = rss / dof;
    let cov = &a_inv * &gram * &a_inv * s2;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - coefficients.iter().zip(&xbar).map(|(b, m)| b * m).sum::<f64>();
    Ok(RidgeFit {
        intercept,
        std_errors: (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        score: if tss > 0.0 { 1.0 - rss / tss } else { 0.0 },
        coefficients,
    })
}

/// Cosine-distance kernel between a binary mask and the all-ones vector.
pub fn proximity(z: &[u8], kernel_width: f64) -> f64 {
    let kept = z.iter().filter(|&&b| b == 1).count();
    let distance = if kept == 0 || z.is_empty() {
        1.0
    } else {
        1.0 - (kept as f64 / z.len() as f64).sqrt()
    };
    (-(distance * distance) / (kernel_width * kernel_width)).exp()
}

/// Row 0 keeps every word. Row `i > 0` removes `k ~ U{1..d}` distinct
/// words drawn from the stream `(seed, LIME, i)`.
pub fn perturbations(d: usize, num_samples: usize, seed: u64) -> Vec<Vec<u8>> {
    (0..num_samples)
        .map(|i| {
            let mut z = vec![1u8; d];
            if i > 0 && d > 0 {
                let mut r = rng::stream(seed, &[tag::LIME, i as u64]);
                let k = r.gen_range(1..=d);
                for pos in index::sample(&mut r, d, k) {
                    z[pos] = 0;
                }
            }
            z
        })
        .collect()
}

fn check_probabilities(probs: &[[f64; 2]], expected: usize) -> Result<()> {
    if probs.len() != expected {
        return Err(Error::InvalidProbabilities(format!(
            "{} rows for {expected} inputs",
            probs.len()
        )));
    }
    for p in probs {
        let ok = p.iter().all(|x| x.is_finite() && (0.0..=1.0).contains(x)) && (p[0] + p[1] - 1.0).abs() <= 1e-6;
        if !ok {
            return Err(Error::InvalidProbabilities(format!("{p:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeReport {
    pub words: Vec<String>,
    /// Indices into `words` of the selected features, in selection order.
    pub selected: Vec<usize>,
    /// Fit over every word.
    pub full_fit: RidgeFit,
    /// Refit over the selected words; coefficients follow `selected`.
    pub fit: RidgeFit,
    pub prediction: f64,
}

/// Samples perturbations of `text`, queries `model` and fits the weighted
/// surrogate. Features are the word positions of the text.
pub fn lime_fit<M: TextClassifier + ?Sized>(
    model: &M,
    text: &CleanText,
    target: Label,
    config: &LimeConfig,
) -> Result<LimeReport> {
    config.validate()?;
    let words: Vec<String> = text.words().map(str::to_string).collect();
    let d = words.len();
    if d == 0 {
        return Err(Error::invalid("cannot explain an empty text"));
    }
    let zs = perturbations(d, config.num_samples, config.seed);
    let rendered: Vec<String> = zs
        .par_iter()
        .map(|z| {
            words
                .iter()
                .zip(z)
                .filter(|(_, &b)| b == 1)
                .map(|(w, _)| w.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let refs: Vec<&str> = rendered.iter().map(String::as_str).collect();
    let probs = model.predict_proba(&refs)?;
    check_probabilities(&probs, refs.len())?;
    let y: Vec<f64> = probs.iter().map(|p| p[target.index()]).collect();
    let weights: Vec<f64> = zs.iter().map(|z| proximity(z, config.kernel_width)).collect();
    let design: Vec<Vec<f64>> = zs.iter().map(|z| z.iter().map(|&b| f64::from(b)).collect()).collect();
    let full_fit = weighted_ridge(&design, &y, &weights, config.ridge_lambda)?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        full_fit.coefficients[b]
            .abs()
            .total_cmp(&full_fit.coefficients[a].abs())
            .then(a.cmp(&b))
    });
    order.truncate(config.num_features.min(d));
    let fit = if order.len() == d {
        let mut reordered = full_fit.clone();
        reordered.coefficients = order.iter().map(|&j| full_fit.coefficients[j]).collect();
        reordered.std_errors = order.iter().map(|&j| full_fit.std_errors[j]).collect();
        reordered
    } else {
        let sub: Vec<Vec<f64>> = design
            .iter()
            .map(|r| order.iter().map(|&j| r[j]).collect())
            .collect();
        weighted_ridge(&sub, &y, &weights, config.ridge_lambda)?
    };
    Ok(LimeReport {
        words,
        selected: order,
        full_fit,
        fit,
        prediction: y[0],
    })
}

pub fn lime_explain<M: TextClassifier + ?Sized>(
    model: &M,
    text: &CleanText,
    target: Label,
    config: &LimeConfig,
) -> Result<Explanation> {
    let report = lime_fit(model, text, target, config)?;
    let mut words: Vec<WordScore> = report
        .selected
        .iter()
        .zip(&report.fit.coefficients)
        .map(|(&j, &c)| WordScore {
            word: report.words[j].clone(),
            coefficient: c,
        })
        .collect();
    sort_by_magnitude(&mut words);
    Ok(Explanation {
        method: Method::Lime,
        target_class: target,
        prediction: report.prediction,
        words,
        raw_sum: None,
    })
}
