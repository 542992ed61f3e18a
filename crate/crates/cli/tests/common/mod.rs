#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::Rng;
use spamxai::rng;

const HAM_OPENERS: &[&str] = &["Hey", "Hi", "Ok", "Sorry", "Yeah", "Lol", "Hmm", "Morning", "Dear", "Babe"];
const HAM_WORDS: &[&str] = &[
    "home", "later", "tonight", "dinner", "lunch", "tomorrow", "meeting", "mum", "dad", "work", "bus",
    "class", "movie", "sleep", "love", "miss", "sure", "going", "wait", "there", "coming", "class",
    "pick", "up", "soon", "when", "where", "what", "time", "shopping", "friend", "party", "done",
    "thanks", "ready", "leave", "office", "gym", "coffee", "weekend", "night", "walk", "dog",
];
const SPAM_OPENERS: &[&str] = &["URGENT", "Congratulations", "FREE", "WINNER", "Dear customer", "SIX chances", "Claim"];
const SPAM_WORDS: &[&str] = &[
    "prize", "claim", "cash", "award", "guaranteed", "win", "winner", "txt", "mobile", "reply", "stop",
    "offer", "ringtone", "voucher", "bonus", "selected", "entry", "draw", "valid", "apply", "collect",
    "code", "customer", "service", "network", "camera", "delivery", "unsubscribe", "holiday", "rate",
];
const SHARED: &[&str] = &["call", "now", "free", "text", "you", "today", "your", "the", "to", "a", "for", "me", "is", "get"];

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

fn message<R: Rng>(rng: &mut R, spam: bool) -> String {
    let mut words = vec![pick(rng, if spam { SPAM_OPENERS } else { HAM_OPENERS }).to_string()];
    let n = rng.gen_range(4..16);
    for _ in 0..n {
        let w = if rng.gen_bool(0.3) {
            pick(rng, SHARED)
        } else if rng.gen_bool(0.1) {
            // cross-class vocabulary keeps the problem from being trivially separable
            pick(rng, if spam { HAM_WORDS } else { SPAM_WORDS })
        } else {
            pick(rng, if spam { SPAM_WORDS } else { HAM_WORDS })
        };
        words.push(w.to_string());
    }
    if spam && rng.gen_bool(0.6) {
        words.push(format!("0{}", rng.gen_range(8_000_000_000u64..9_000_000_000)));
    }
    if spam && rng.gen_bool(0.4) {
        words.insert(rng.gen_range(1..words.len()), format!("£{}", [100, 250, 500, 1000, 2000][rng.gen_range(0..5)]));
    }
    if !spam && rng.gen_bool(0.3) {
        words.push([":)", "x", "xx", ";-)", "..."][rng.gen_range(0..5)].to_string());
    }
    let mut text = words.join(" ");
    text.push_str(["", ".", "!", "!!", "?"][rng.gen_range(0..5)]);
    text
}

/// Labelled SMS-like TSV with exactly `n_ham` ham and `n_spam` spam lines,
/// interleaved pseudo-randomly.
pub fn synthetic_tsv(n_ham: usize, n_spam: usize, seed: u64) -> String {
    let mut rng = rng::stream(seed, &[0x5e7]);
    let mut labels: Vec<bool> = std::iter::repeat_n(false, n_ham).chain(std::iter::repeat_n(true, n_spam)).collect();
    labels.shuffle(&mut rng);
    let mut out = String::new();
    for spam in labels {
        out.push_str(if spam { "spam\t" } else { "ham\t" });
        out.push_str(&message(&mut rng, spam));
        out.push('\n');
    }
    out
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_spamxai")
}

/// Runs the binary with `dir` as working directory.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn spamxai")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "spamxai {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small model settings that keep CLI tests fast.
pub const TINY_CONFIG: &str = r#"{
  "model": {"n_layers": 1, "d_model": 16, "n_heads": 2, "d_ff": 32, "max_len": 24},
  "train": {"epochs": 2, "train_batch": 16},
  "tokenizer": {"vocab_size": 300},
  "lime": {"num_samples": 200},
  "intgrad_steps": 20
}"#;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every regular file under `root`, as sorted relative paths.
pub fn list_files(root: &Path) -> Vec<PathBuf> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).expect("read_dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push(path.strip_prefix(root).expect("prefix").to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
