//! SMS spam detection: cleaning, back-translation balancing, BPE
//! tokenization, a from-scratch transformer classifier, classical
//! baselines, evaluation metrics, and LIME / integrated-gradients word
//! attributions.

pub mod augment;
pub mod baselines;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod preprocess;
pub mod rng;
pub mod tokenizer;
pub mod train;
pub mod transformer;

pub use error::{Error, Result};
