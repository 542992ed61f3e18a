//! Classical classifiers over bag-of-words features: multinomial naive
//! Bayes on raw counts, k-nearest neighbours and a linear SVM on TF-IDF.

mod knn;
mod nb;
mod svm;
mod tfidf;

pub use knn::{knn_predict, knn_vote, KnnClassifier};
pub use nb::{nb_predict, nb_train, NaiveBayes, NbClassifier};
pub use svm::{svm_objective, svm_predict, svm_train, LinearSvm, SvmClassifier, SvmConfig};
pub use tfidf::{tfidf_fit_transform, SparseVec, TfidfModel};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Nb,
    Knn,
    Svm,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Nb => "nb",
            BaselineKind::Knn => "knn",
            BaselineKind::Svm => "svm",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "nb" => Ok(BaselineKind::Nb),
            "knn" => Ok(BaselineKind::Knn),
            "svm" => Ok(BaselineKind::Svm),
            other => Err(Error::invalid(format!("unknown baseline kind {other:?}"))),
        }
    }
}

/// Rounds every value to the nearest `f32` so persisted models reproduce
/// in-memory predictions bit for bit.
pub(crate) fn snap(values: &mut [f64]) {
    for v in values {
        *v = *v as f32 as f64;
    }
}
