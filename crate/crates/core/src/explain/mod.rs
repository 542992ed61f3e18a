//! Word attributions for individual predictions: a sampled local linear
//! surrogate (LIME) for any [`TextClassifier`](crate::classifier::TextClassifier)
//! and integrated gradients over the transformer's token embeddings.

mod html;
mod intgrad;
mod lime;

pub use html::render_html;
pub use intgrad::{
    integrated_gradients, intgrad_explain, merge_subwords, EmbeddingModel, IgResult,
};
pub use lime::{
    lime_explain, lime_fit, perturbations, proximity, weighted_ridge, LimeConfig, LimeReport,
    RidgeFit,
};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lime,
    Intgrad,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Lime => "lime",
            Method::Intgrad => "intgrad",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "lime" => Ok(Method::Lime),
            "intgrad" => Ok(Method::Intgrad),
            other => Err(crate::Error::invalid(format!("unknown explanation method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    pub target_class: Label,
    /// Model probability of `target_class` for the unperturbed input.
    pub prediction: f64,
    /// Sorted by descending absolute coefficient.
    pub words: Vec<WordScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub raw_sum: Option<f64>,
}

/// Sorts by descending |coefficient|, keeping input order among ties.
pub(crate) fn sort_by_magnitude(words: &mut [WordScore]) {
    words.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()));
}
