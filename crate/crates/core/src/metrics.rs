//! Confusion matrix and per-class precision, recall, F1 and accuracy.
//! Spam is the positive class.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same matrix seen with `positive` as the positive class.
    pub fn oriented(&self, positive: Label) -> ConfusionMatrix {
        match positive {
            Label::Spam => *self,
            Label::Ham => ConfusionMatrix {
                tp: self.tn,
                tn: self.tp,
                fp: self.fn_,
                fn_: self.fp,
            },
        }
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Spam, Label::Spam) => self.tp += 1,
            (Label::Ham, Label::Ham) => self.tn += 1,
            (Label::Spam, Label::Ham) => self.fp += 1,
            (Label::Ham, Label::Spam) => self.fn_ += 1,
        }
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &a) in predictions.iter().zip(labels) {
        m.record(p, a);
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(m: &ConfusionMatrix, class: Label) -> f64 {
    let m = m.oriented(class);
    ratio(m.tp, m.tp + m.fp)
}

pub fn recall(m: &ConfusionMatrix, class: Label) -> f64 {
    let m = m.oriented(class);
    ratio(m.tp, m.tp + m.fn_)
}

pub fn f1(m: &ConfusionMatrix, class: Label) -> f64 {
    let p = precision(m, class);
    let r = recall(m, class);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn accuracy(m: &ConfusionMatrix) -> Result<f64> {
    if m.total() == 0 {
        return Err(Error::invalid("accuracy of an empty evaluation"));
    }
    Ok(ratio(m.tp + m.tn, m.total()))
}

/// Rounds to `places` decimals using the exact binary value of `x`.
pub fn round_to(x: f64, places: usize) -> f64 {
    format!("{x:.places$}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ClassMetrics {
    pub fn of(m: &ConfusionMatrix, class: Label) -> Self {
        let o = m.oriented(class);
        ClassMetrics {
            precision: precision(m, class),
            recall: recall(m, class),
            f1: f1(m, class),
            support: o.tp + o.fn_,
        }
    }

    pub fn rounded(&self) -> ClassMetrics {
        ClassMetrics {
            precision: round_to(self.precision, 2),
            recall: round_to(self.recall, 2),
            f1: round_to(self.f1, 2),
            support: self.support,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedMetrics {
    pub ham: ClassMetrics,
    pub spam: ClassMetrics,
    /// Accuracy in percent, two decimals.
    pub accuracy_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub matrix: ConfusionMatrix,
    pub ham: ClassMetrics,
    pub spam: ClassMetrics,
    pub accuracy: f64,
    pub rounded: RoundedMetrics,
    /// Zero-denominator notes; metrics affected by them are reported as 0.
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn from_matrix(matrix: ConfusionMatrix) -> Result<Self> {
        let accuracy = accuracy(&matrix)?;
        let ham = ClassMetrics::of(&matrix, Label::Ham);
        let spam = ClassMetrics::of(&matrix, Label::Spam);
        let mut warnings = Vec::new();
        for class in Label::ALL {
            let o = matrix.oriented(class);
            if o.tp + o.fp == 0 {
                warnings.push(format!("no {class} predictions: {class} precision set to 0"));
            }
            if o.tp + o.fn_ == 0 {
                warnings.push(format!("no {class} examples: {class} recall set to 0"));
            }
        }
        Ok(MetricsReport {
            matrix,
            ham,
            spam,
            accuracy,
            rounded: RoundedMetrics {
                ham: ham.rounded(),
                spam: spam.rounded(),
                accuracy_percent: round_to(accuracy * 100.0, 2),
            },
            warnings,
        })
    }

    pub fn from_predictions(predictions: &[Label], labels: &[Label]) -> Result<Self> {
        Self::from_matrix(confusion(predictions, labels)?)
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Ham => &self.ham,
            Label::Spam => &self.spam,
        }
    }
}
