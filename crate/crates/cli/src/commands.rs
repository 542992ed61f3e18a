use std::path::{Path, PathBuf};

use serde::Serialize;
use spamxai::augment::{balance_with_stats, BalanceStats, OfflineProvider, RestProvider, TranslationProvider};
use spamxai::baselines::{KnnClassifier, NbClassifier, SvmClassifier};
use spamxai::classifier::{argmax, log_loss, TextClassifier};
use spamxai::corpus::{load_prepared_tsv, load_tsv, split, ClassCounts, Corpus, Label};
use spamxai::explain::{intgrad_explain, lime_explain, render_html, Explanation, Method};
use spamxai::metrics::MetricsReport;
use spamxai::preprocess::preprocess_with;
use spamxai::tokenizer::{encode, train_bpe};
use spamxai::train::{train_loop, Dataset};
use spamxai::transformer::{init_params, TransformerClassifier};

use crate::artifacts::Recorder;
use crate::checkpoint::{self, Model};
use crate::config::{ProviderConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::ModelKind;

pub fn checkpoint_path(config: &RunConfig, kind: ModelKind) -> PathBuf {
    config.models_dir().join(format!("{kind}.ckpt"))
}

fn clean_corpus(corpus: &Corpus, lowercase: bool) -> Corpus {
    corpus.map_texts(|t| preprocess_with(t, lowercase).into_string())
}

fn provider(config: &RunConfig) -> CliResult<(Box<dyn TranslationProvider + Send>, String)> {
    Ok(match &config.provider {
        ProviderConfig::Offline => (Box::new(OfflineProvider::new()), "offline tables".to_string()),
        ProviderConfig::Rest(rest) => {
            let p = RestProvider::new(rest.clone().with_env_key())?;
            let endpoint = p.endpoint().to_string();
            (Box::new(p), endpoint)
        }
    })
}

fn balance(corpus: &Corpus, config: &RunConfig) -> CliResult<(Corpus, BalanceStats)> {
    let (provider, endpoint) = provider(config)?;
    balance_with_stats(corpus, &provider, &config.augment).map_err(|e| match e {
        spamxai::Error::Translation { language, message } => CliError::Core(spamxai::Error::Translation {
            language,
            message: format!("{endpoint}: {message}"),
        }),
        other => other.into(),
    })
}

#[derive(Serialize)]
struct PrepareStats {
    dataset: PathBuf,
    total: usize,
    counts: ClassCounts,
    balanced: bool,
    augmentation: Option<BalanceStats>,
    train: usize,
    train_counts: ClassCounts,
    test: usize,
    test_counts: ClassCounts,
}

pub fn prepare(config: &RunConfig, rec: &Recorder<'_>, balanced: bool) -> CliResult<()> {
    let raw = load_tsv(&config.dataset)?;
    let mut corpus = clean_corpus(&raw, config.lowercase);
    let mut augmentation = None;
    if balanced {
        let (b, stats) = balance(&corpus, config)?;
        corpus = clean_corpus(&b, config.lowercase);
        augmentation = Some(stats);
    }
    let (train, test) = split(&corpus, config.train_fraction, config.seed)?;
    rec.file(&config.train_path(), train.to_tsv()?.as_bytes())?;
    rec.file(&config.test_path(), test.to_tsv()?.as_bytes())?;
    let stats = PrepareStats {
        dataset: config.dataset.clone(),
        total: corpus.len(),
        counts: corpus.class_counts(),
        balanced,
        augmentation,
        train: train.len(),
        train_counts: train.class_counts(),
        test: test.len(),
        test_counts: test.class_counts(),
    };
    rec.json(&config.workdir.join("stats.json"), &stats)?;
    log::info!(
        "prepared {} messages: {} train, {} test",
        stats.total,
        stats.train,
        stats.test
    );
    Ok(())
}

#[derive(Serialize)]
struct AugmentStats {
    input: PathBuf,
    before: ClassCounts,
    after: ClassCounts,
    augmentation: BalanceStats,
}

pub fn augment(config: &RunConfig, rec: &Recorder<'_>, input: Option<&Path>, output: Option<&Path>) -> CliResult<()> {
    let input = input.unwrap_or(&config.dataset).to_path_buf();
    let output = output.map_or_else(|| config.workdir.join("balanced.tsv"), Path::to_path_buf);
    let corpus = load_tsv(&input)?;
    let before = corpus.class_counts();
    if before.ham == before.spam {
        log::warn!("{} is already balanced; writing it unchanged", input.display());
    }
    let (balanced, stats) = balance(&corpus, config)?;
    rec.file(&output, balanced.to_tsv()?.as_bytes())?;
    let after = balanced.class_counts();
    rec.json(
        &output.with_extension("stats.json"),
        &AugmentStats {
            input,
            before,
            after,
            augmentation: stats,
        },
    )?;
    log::info!(
        "balanced to {} ham / {} spam ({} translated, {} duplicated)",
        after.ham,
        after.spam,
        stats.translated,
        stats.duplicated
    );
    Ok(())
}

fn load_split(path: &Path, what: &str) -> CliResult<Corpus> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{what} split {} not found; run `prepare` first",
            path.display()
        )));
    }
    Ok(load_prepared_tsv(path)?)
}

pub fn train(config: &RunConfig, rec: &Recorder<'_>, kind: ModelKind) -> CliResult<()> {
    let train = load_split(&config.train_path(), "training")?;
    if train.is_empty() {
        return Err(CliError::Data("training split is empty".into()));
    }
    let texts = train.texts();
    let labels = train.labels();
    let model = match kind {
        ModelKind::Transformer => {
            let test = load_split(&config.test_path(), "test")?;
            let vocab = train_bpe(texts.iter().copied(), config.tokenizer.vocab_size)?;
            let mut model_config = config.model;
            model_config.vocab_size = vocab.len();
            model_config.validate()?;
            let max_len = model_config.max_len;
            let train_data = Dataset::encode(&vocab, &train, max_len)?;
            let test_data = Dataset::encode(&vocab, &test, max_len)?;
            let params = init_params(&model_config, config.seed)?;
            let (params, log) = train_loop(params, &train_data, &test_data, &config.train)?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            for row in &log {
                csv.serialize(row)?;
            }
            let bytes = csv.into_inner().map_err(|e| CliError::Data(format!("csv: {e}")))?;
            rec.file(&config.models_dir().join("transformer_epochs.csv"), &bytes)?;
            rec.file(&config.models_dir().join("vocab.txt"), vocab.to_text().as_bytes())?;
            Model::Transformer(TransformerClassifier { params, vocab })
        }
        ModelKind::Nb => Model::Nb(NbClassifier::fit(&texts, &labels, config.baselines.nb_alpha)?),
        ModelKind::Knn => Model::Knn(KnnClassifier::fit(&texts, &labels, config.baselines.knn_k)?),
        ModelKind::Svm => Model::Svm(SvmClassifier::fit(&texts, &labels, &config.baselines.svm)?),
    };
    let path = checkpoint_path(config, kind);
    checkpoint::save(&path, &model, config.seed, config)?;
    log::info!("saved {}", path.display());
    Ok(())
}

fn load_model(config: &RunConfig, kind: ModelKind) -> CliResult<Model> {
    let path = checkpoint_path(config, kind);
    if !path.exists() {
        return Err(CliError::Data(format!(
            "no {kind} checkpoint at {}; run `train --model {kind}` first",
            path.display()
        )));
    }
    let (manifest, model) = checkpoint::load(&path)?;
    if manifest.model_kind != kind {
        return Err(CliError::Data(format!(
            "{} holds a {} model, not {kind}",
            path.display(),
            manifest.model_kind
        )));
    }
    Ok(model)
}

#[derive(Serialize)]
struct EvalReport {
    model: ModelKind,
    test_file: PathBuf,
    log_loss: f64,
    metrics: MetricsReport,
}

pub fn evaluate(config: &RunConfig, rec: &Recorder<'_>, kind: ModelKind, test: Option<&Path>) -> CliResult<()> {
    let model = load_model(config, kind)?;
    let test_file = test.map_or_else(|| config.test_path(), Path::to_path_buf);
    let corpus = if test.is_some() {
        clean_corpus(&load_prepared_tsv(&test_file)?, config.lowercase)
    } else {
        load_split(&test_file, "test")?
    };
    if corpus.is_empty() {
        return Err(CliError::Data(format!("{} holds no messages", test_file.display())));
    }
    let labels = corpus.labels();
    let probs = model.classifier().predict_proba(&corpus.texts())?;
    let predictions: Vec<Label> = probs.iter().copied().map(argmax).collect();
    let report = EvalReport {
        model: kind,
        test_file,
        log_loss: log_loss(&probs, &labels),
        metrics: MetricsReport::from_predictions(&predictions, &labels)?,
    };
    for w in &report.metrics.warnings {
        log::warn!("{w}");
    }
    rec.json(&config.workdir.join("reports").join(format!("{kind}_metrics.json")), &report)?;
    println!(
        "{kind}: accuracy {:.2}%  spam P/R/F1 {:.2}/{:.2}/{:.2}",
        report.metrics.rounded.accuracy_percent,
        report.metrics.rounded.spam.precision,
        report.metrics.rounded.spam.recall,
        report.metrics.rounded.spam.f1
    );
    Ok(())
}

pub fn explain(
    config: &RunConfig,
    rec: &Recorder<'_>,
    kind: ModelKind,
    method: Option<Method>,
    text: &str,
) -> CliResult<()> {
    let method = method.unwrap_or(config.explain_method);
    let clean = preprocess_with(text, config.lowercase);
    if clean.is_empty() {
        return Err(CliError::Usage("text is empty after cleaning".into()));
    }
    if method == Method::Intgrad && kind != ModelKind::Transformer {
        return Err(CliError::Usage(format!(
            "integrated gradients need the transformer, not {kind}"
        )));
    }
    let model = load_model(config, kind)?;
    let probs = model.classifier().predict_proba(&[clean.as_str()])?;
    let target = argmax(probs[0]);
    let explanation: Explanation = match (&model, method) {
        (Model::Transformer(t), Method::Intgrad) => {
            let seq = encode(&t.vocab, &clean, t.params.config.max_len)?;
            intgrad_explain(&t.params, &t.vocab, &seq, target, config.intgrad_steps)?
        }
        (_, Method::Intgrad) => unreachable!("checked above"),
        (m, Method::Lime) => lime_explain(m.classifier(), &clean, target, &config.lime)?,
    };
    let dir = config.workdir.join("explanations");
    rec.json(&dir.join(format!("{kind}_{method}.json")), &explanation)?;
    rec.file(
        &dir.join(format!("{kind}_{method}.html")),
        render_html(&explanation, clean.as_str()).as_bytes(),
    )?;
    println!("{target} (p = {:.4})", explanation.prediction);
    for w in explanation.words.iter().take(10) {
        println!("{:>+10.4}  {}", w.coefficient, w.word);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: ModelKind,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

fn loss_and_accuracy(model: &dyn TextClassifier, corpus: &Corpus) -> CliResult<(f64, f64)> {
    if corpus.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let labels = corpus.labels();
    let probs = model.predict_proba(&corpus.texts())?;
    let correct = probs.iter().zip(&labels).filter(|(p, &l)| argmax(**p) == l).count();
    Ok((log_loss(&probs, &labels), correct as f64 / labels.len() as f64))
}

pub fn compare(config: &RunConfig, rec: &Recorder<'_>) -> CliResult<()> {
    let train = load_split(&config.train_path(), "training")?;
    let test = load_split(&config.test_path(), "test")?;
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        if !checkpoint_path(config, kind).exists() {
            continue;
        }
        let model = load_model(config, kind)?;
        let (train_loss, train_acc) = loss_and_accuracy(model.classifier(), &train)?;
        let (test_loss, test_acc) = loss_and_accuracy(model.classifier(), &test)?;
        rows.push(ComparisonRow {
            model: kind,
            train_loss,
            train_acc,
            test_loss,
            test_acc,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!(
            "no checkpoints in {}; train at least one model first",
            config.models_dir().display()
        )));
    }
    let mut csv = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        csv.serialize(row)?;
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Data(format!("csv: {e}")))?;
    rec.file(&config.workdir.join("comparison.csv"), &bytes)?;
    rec.json(&config.workdir.join("comparison.json"), &rows)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}
