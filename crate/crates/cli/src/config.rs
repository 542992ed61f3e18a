use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spamxai::augment::{AugmentConfig, RestProviderConfig};
use spamxai::baselines::SvmConfig;
use spamxai::explain::{LimeConfig, Method};
use spamxai::train::TrainConfig;
use spamxai::transformer::ModelConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub vocab_size: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig { vocab_size: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    #[default]
    Offline,
    Rest(RestProviderConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub nb_alpha: f64,
    pub knn_k: usize,
    pub svm: SvmConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            nb_alpha: 1.0,
            knn_k: 5,
            svm: SvmConfig::default(),
        }
    }
}

/// Everything a run needs. The top-level `seed` is copied into every
/// component by [`RunConfig::resolved`], and artifacts record the resolved
/// form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub workdir: PathBuf,
    pub seed: u64,
    pub train_fraction: f64,
    pub lowercase: bool,
    pub tokenizer: TokenizerConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub provider: ProviderConfig,
    pub baselines: BaselineConfig,
    pub lime: LimeConfig,
    pub intgrad_steps: usize,
    pub explain_method: Method,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::from("data/SMSSpamCollection"),
            workdir: PathBuf::from("work"),
            seed: 42,
            train_fraction: 0.8,
            lowercase: false,
            tokenizer: TokenizerConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
            provider: ProviderConfig::default(),
            baselines: BaselineConfig::default(),
            lime: LimeConfig::default(),
            intgrad_steps: 50,
            explain_method: Method::Lime,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn resolved(mut self) -> RunConfig {
        self.train.seed = self.seed;
        self.augment.seed = self.seed;
        self.lime.seed = self.seed;
        self.baselines.svm.seed = self.seed;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(CliError::Usage("train_fraction must lie in (0, 1]".into()));
        }
        if self.intgrad_steps == 0 {
            return Err(CliError::Usage("intgrad_steps must be positive".into()));
        }
        let usage = |e: spamxai::Error| CliError::Usage(format!("invalid config: {e}"));
        self.train.validate().map_err(usage)?;
        self.augment.validate().map_err(usage)?;
        self.lime.validate().map_err(usage)?;
        Ok(())
    }

    pub fn models_dir(&self) -> PathBuf {
        self.workdir.join("models")
    }

    pub fn train_path(&self) -> PathBuf {
        self.workdir.join("train.tsv")
    }

    pub fn test_path(&self) -> PathBuf {
        self.workdir.join("test.tsv")
    }
}
