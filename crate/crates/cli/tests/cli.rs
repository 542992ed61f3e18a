mod common;

use std::fs;

use common::{run_in, run_ok, synthetic_tsv, TINY_CONFIG};
use spamxai_cli::checkpoint::{self, Model, FORMAT_VERSION, MAGIC};
use spamxai_cli::RunConfig;
use tempfile::TempDir;

fn setup(n_ham: usize, n_spam: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.tsv"), synthetic_tsv(n_ham, n_spam, 3)).unwrap();
    fs::write(dir.path().join("c.json"), TINY_CONFIG).unwrap();
    dir
}

const BASE: &[&str] = &["--config", "c.json", "--workdir", "w"];

fn args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    BASE.iter().copied().chain(extra.iter().copied()).collect()
}

#[test]
fn usage_errors_exit_1() {
    let dir = setup(10, 5);
    for bad in [
        vec!["frobnicate"],
        vec!["train", "--model", "xgb"],
        vec!["explain", "--model", "nb"],
        vec!["--seed", "abc", "compare"],
    ] {
        let out = run_in(dir.path(), &bad);
        assert_eq!(out.status.code(), Some(1), "{bad:?}");
    }
    assert_eq!(run_in(dir.path(), &["--help"]).status.code(), Some(0));
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = run_in(dir.path(), &["--config", "bad.json", "compare"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = setup(10, 5);
    let out = run_in(dir.path(), &args(&["prepare", "--dataset", "missing.tsv"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tsv"));

    let out = run_in(dir.path(), &args(&["train", "--model", "nb"]));
    assert_eq!(out.status.code(), Some(2), "train before prepare");

    fs::write(dir.path().join("garbage.tsv"), "maybe\thello\n").unwrap();
    let out = run_in(dir.path(), &args(&["prepare", "--dataset", "garbage.tsv"]));
    assert_eq!(out.status.code(), Some(2));

    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    let out = run_in(dir.path(), &args(&["compare"]));
    assert_eq!(out.status.code(), Some(2), "compare without checkpoints");
    let out = run_in(dir.path(), &args(&["evaluate", "--model", "svm"]));
    assert_eq!(out.status.code(), Some(2), "evaluate without checkpoint");
}

#[test]
fn unreachable_rest_provider_exits_3() {
    let dir = setup(12, 4);
    let endpoint = "http://127.0.0.1:9/translate";
    let config = format!(
        r#"{{"provider": {{"kind": "rest", "endpoint": "{endpoint}", "timeout_secs": 2, "retries": 0}}}}"#
    );
    fs::write(dir.path().join("rest.json"), config).unwrap();
    let out = run_in(dir.path(), &["--config", "rest.json", "--workdir", "w", "augment", "--input", "d.tsv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains(endpoint));
}

#[test]
fn explain_rejects_bad_requests() {
    let dir = setup(30, 10);
    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    run_ok(dir.path(), &args(&["train", "--model", "nb"]));
    let out = run_in(dir.path(), &args(&["explain", "--model", "nb", "--text", "!!! ???"]));
    assert_eq!(out.status.code(), Some(1), "empty after cleaning");
    let out = run_in(
        dir.path(),
        &args(&["explain", "--model", "nb", "--method", "intgrad", "--text", "free prize"]),
    );
    assert_eq!(out.status.code(), Some(1), "intgrad on a baseline");
}

#[test]
fn full_pipeline_and_four_row_comparison() {
    let dir = setup(120, 40);
    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    for model in ["transformer", "nb", "knn", "svm"] {
        run_ok(dir.path(), &args(&["train", "--model", model]));
        run_ok(dir.path(), &args(&["evaluate", "--model", model]));
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join(format!("w/reports/{model}_metrics.json"))).unwrap())
                .unwrap();
        assert_eq!(report["seed"], 42);
        assert_eq!(report["result"]["metrics"]["matrix"]["tp"].as_u64().unwrap()
            + report["result"]["metrics"]["matrix"]["fn"].as_u64().unwrap()
            + report["result"]["metrics"]["matrix"]["tn"].as_u64().unwrap()
            + report["result"]["metrics"]["matrix"]["fp"].as_u64().unwrap(), 32);
    }
    run_ok(dir.path(), &args(&["explain", "--model", "transformer", "--method", "intgrad", "--text", "WIN a FREE prize now!!"]));
    run_ok(dir.path(), &args(&["explain", "--model", "svm", "--method", "lime", "--text", "WIN a FREE prize now!!"]));
    let html = fs::read_to_string(dir.path().join("w/explanations/svm_lime.html")).unwrap();
    assert!(html.contains("prize"));
    assert!(dir.path().join("w/explanations/svm_lime.html.manifest.json").exists());
    let ig: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("w/explanations/transformer_intgrad.json")).unwrap()).unwrap();
    let norm: f64 = ig["result"]["words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["coefficient"].as_f64().unwrap().powi(2))
        .sum();
    assert!((norm - 1.0).abs() < 1e-9);

    let out = run_ok(dir.path(), &args(&["compare"]));
    let csv = fs::read_to_string(dir.path().join("w/comparison.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "model,train_loss,train_acc,test_loss,test_acc");
    let models: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["nb", "knn", "svm", "transformer"]);

    let epochs = fs::read_to_string(dir.path().join("w/models/transformer_epochs.csv")).unwrap();
    assert_eq!(epochs.lines().count(), 3);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("w/train.tsv.manifest.json")).unwrap()).unwrap();
    let body = fs::read(dir.path().join("w/train.tsv")).unwrap();
    assert_eq!(sidecar["sha256"], spamxai_cli::artifacts::sha256_hex(&body));
}

#[test]
fn checkpoints_round_trip_bitwise_for_every_kind() {
    let dir = setup(60, 20);
    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    for model in ["transformer", "nb", "knn", "svm"] {
        run_ok(dir.path(), &args(&["train", "--model", model]));
        let path = dir.path().join(format!("w/models/{model}.ckpt"));
        let bytes = fs::read(&path).unwrap();
        let (manifest, loaded) = checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(manifest.format_version, FORMAT_VERSION);
        assert_eq!(manifest.model_kind.as_str(), model);
        let config: RunConfig = serde_json::from_value(manifest.config.clone()).unwrap();
        assert_eq!(config.seed, manifest.seed);
        let again = checkpoint::to_bytes(&loaded, manifest.seed, &config).unwrap();
        assert_eq!(again, bytes, "{model} checkpoint is not a fixed point");
        let (_, reloaded) = checkpoint::from_bytes(&again).unwrap();
        assert_eq!(reloaded, loaded);
        let texts = ["free prize call now", "see you at home later"];
        assert_eq!(
            reloaded.classifier().predict_proba(&texts).unwrap(),
            loaded.classifier().predict_proba(&texts).unwrap()
        );
        if let Model::Transformer(t) = &loaded {
            assert!(t.params.is_finite());
        }
    }
}

#[test]
fn checkpoint_rejects_wrong_version_and_corruption() {
    let dir = setup(40, 10);
    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    run_ok(dir.path(), &args(&["train", "--model", "svm"]));
    let path = dir.path().join("w/models/svm.ckpt");
    let bytes = fs::read(&path).unwrap();
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let manifest = String::from_utf8(bytes[16..16 + len].to_vec()).unwrap();

    let bumped = manifest.replacen("\"format_version\":1", "\"format_version\":9", 1);
    assert_eq!(bumped.len(), manifest.len());
    let mut wrong = bytes.clone();
    wrong[16..16 + len].copy_from_slice(bumped.as_bytes());
    let err = checkpoint::from_bytes(&wrong).unwrap_err().to_string();
    assert!(err.contains("version 9"), "{err}");
    fs::write(&path, &wrong).unwrap();
    let out = run_in(dir.path(), &args(&["evaluate", "--model", "svm"]));
    assert_eq!(out.status.code(), Some(2));

    let unknown = manifest.replacen("\"model_kind\":\"svm\"", "\"model_kind\":\"xgb\"", 1);
    let mut alien = bytes[..16].to_vec();
    alien[8..16].copy_from_slice(&(unknown.len() as u64).to_le_bytes());
    alien.extend_from_slice(unknown.as_bytes());
    alien.extend_from_slice(&bytes[16 + len..]);
    assert!(checkpoint::from_bytes(&alien).is_err());

    assert!(checkpoint::from_bytes(&bytes[..bytes.len() - 4]).is_err());
    let mut magic = bytes.clone();
    magic[..8].copy_from_slice(b"NOTACKPT");
    assert!(checkpoint::from_bytes(&magic).is_err());
    assert_eq!(&bytes[..8], MAGIC);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = setup(50, 15);
    let b = setup(50, 15);
    for dir in [&a, &b] {
        run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv", "--balanced"]));
        run_ok(dir.path(), &args(&["train", "--model", "transformer"]));
        run_ok(dir.path(), &args(&["train", "--model", "knn"]));
        run_ok(dir.path(), &args(&["explain", "--model", "knn", "--text", "claim your prize"]));
    }
    let files = common::list_files(&a.path().join("w"));
    assert_eq!(files, common::list_files(&b.path().join("w")));
    for f in files {
        assert_eq!(
            fs::read(a.path().join("w").join(&f)).unwrap(),
            fs::read(b.path().join("w").join(&f)).unwrap(),
            "{}",
            f.display()
        );
    }
}

#[test]
fn seed_flag_changes_the_split() {
    let dir = setup(50, 15);
    run_ok(dir.path(), &args(&["prepare", "--dataset", "d.tsv"]));
    let first = fs::read(dir.path().join("w/test.tsv")).unwrap();
    run_ok(dir.path(), &args(&["--seed", "7", "prepare", "--dataset", "d.tsv"]));
    assert_ne!(fs::read(dir.path().join("w/test.tsv")).unwrap(), first);
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["seed"], 7);
    assert_eq!(stats["config"]["train"]["seed"], 7);
}

#[test]
fn augment_preserves_originals_and_reaches_parity() {
    let dir = setup(40, 9);
    run_ok(dir.path(), &args(&["augment", "--input", "d.tsv", "--output", "bal.tsv"]));
    let raw = fs::read_to_string(dir.path().join("d.tsv")).unwrap();
    let out = fs::read_to_string(dir.path().join("bal.tsv")).unwrap();
    assert!(out.starts_with(&raw));
    let spam = out.lines().filter(|l| l.starts_with("spam\t")).count();
    let ham = out.lines().filter(|l| l.starts_with("ham\t")).count();
    assert_eq!((ham, spam), (40, 40));
    assert!(dir.path().join("bal.stats.json").exists());
}
