use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use spamxai::explain::Method;

#[derive(Debug, Parser)]
#[command(name = "spamxai", version, about = "SMS spam detection with explanations")]
pub struct Cli {
    /// JSON run configuration; unspecified fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean the raw collection and write the train/test split.
    Prepare {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Oversample the minority class before splitting.
        #[arg(long)]
        balanced: bool,
    },
    /// Balance a raw collection by back-translation.
    Augment {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
    },
    Evaluate {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Labelled TSV to score instead of the prepared test split.
        #[arg(long)]
        test: Option<PathBuf>,
    },
    Explain {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        text: String,
    },
    /// Score every trained model on both splits.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Transformer,
    Nb,
    Knn,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Nb, ModelKind::Knn, ModelKind::Svm, ModelKind::Transformer];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Transformer => "transformer",
            ModelKind::Nb => "nb",
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lime,
    Intgrad,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Lime => Method::Lime,
            MethodArg::Intgrad => Method::Intgrad,
        }
    }
}
