//! Labeled SMS corpus: loading, class statistics and train/test splitting.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Ham = 0,
    Spam = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Ham, Label::Spam];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Ham),
            1 => Some(Label::Spam),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ham => "ham",
            Label::Spam => "spam",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Ham => Label::Spam,
            Label::Spam => Label::Ham,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ham" => Ok(Label::Ham),
            "spam" => Ok(Label::Spam),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub id: usize,
    pub text: String,
    pub label: Label,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub ham: usize,
    pub spam: usize,
}

impl ClassCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Ham => self.ham,
            Label::Spam => self.spam,
        }
    }

    pub fn total(&self) -> usize {
        self.ham + self.spam
    }
}

/// Ordered collection of messages.
///
/// Loaded corpora have ids `0..len`. Splits keep the ids of their source so
/// that the two sides can be checked for disjointness.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub messages: Vec<Message>,
}

impl Corpus {
    pub fn new(messages: Vec<Message>) -> Self {
        Corpus { messages }
    }

    /// Builds a corpus of original messages with ids assigned in order.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (Label, S)>) -> Self {
        let messages = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (label, text))| Message {
                id,
                text: text.into(),
                label,
                origin: Origin::Original,
            })
            .collect();
        Corpus { messages }
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.messages.iter().map(|m| m.text.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.messages.iter().map(|m| m.label).collect()
    }

    pub fn class_counts(&self) -> ClassCounts {
        class_counts(self)
    }

    /// Applies `f` to every text, keeping ids, labels and origins.
    pub fn map_texts(&self, f: impl Fn(&str) -> String) -> Corpus {
        Corpus {
            messages: self
                .messages
                .iter()
                .map(|m| Message {
                    text: f(&m.text),
                    ..m.clone()
                })
                .collect(),
        }
    }

    pub fn to_tsv(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            if m.text.contains(['\n', '\r']) {
                return Err(Error::Format(format!(
                    "message {} contains a line break and cannot be written as TSV",
                    m.id
                )));
            }
            out.push_str(m.label.as_str());
            out.push('\t');
            out.push_str(&m.text);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = self.to_tsv()?;
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(body.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Parses `label<TAB>text` records. Invalid UTF-8 is replaced with U+FFFD.
pub fn parse_tsv(bytes: &[u8]) -> Result<Corpus> {
    parse_records(bytes, false)
}

/// Like [`parse_tsv`] but accepts records whose text is empty, as produced
/// when preprocessing strips a message down to nothing.
pub fn parse_prepared_tsv(bytes: &[u8]) -> Result<Corpus> {
    parse_records(bytes, true)
}

fn parse_records(bytes: &[u8], allow_empty: bool) -> Result<Corpus> {
    let content = String::from_utf8_lossy(bytes);
    let mut messages = Vec::new();
    for (idx, raw) in content.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
            line: line_no,
            reason: "missing tab separator".into(),
        })?;
        let label = label.parse::<Label>().map_err(|_| Error::UnknownLabel {
            line: line_no,
            label: label.to_string(),
        })?;
        if !allow_empty && text.trim().is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                reason: "empty text".into(),
            });
        }
        messages.push(Message {
            id: messages.len(),
            text: text.to_string(),
            label,
            origin: Origin::Original,
        });
    }
    Ok(Corpus { messages })
}

pub fn load_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&bytes)
}

pub fn load_prepared_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_prepared_tsv(&bytes)
}

pub fn class_counts(corpus: &Corpus) -> ClassCounts {
    corpus
        .messages
        .iter()
        .fold(ClassCounts::default(), |mut acc, m| {
            match m.label {
                Label::Ham => acc.ham += 1,
                Label::Spam => acc.spam += 1,
            }
            acc
        })
}

/// Number of training messages for a corpus of `n` at `fraction`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).floor() as usize
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "train fraction must lie in (0, 1], got {fraction}"
        )))
    }
}

/// Seeded shuffle followed by a cut at `floor(fraction * N)`.
pub fn split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    check_fraction(train_fraction)?;
    if corpus.is_empty() {
        return Err(Error::invalid("cannot split an empty corpus"));
    }
    let mut messages = corpus.messages.clone();
    messages.shuffle(&mut rng::stream(seed, &[tag::SPLIT]));
    let cut = train_size(messages.len(), train_fraction);
    let test = messages.split_off(cut);
    Ok((Corpus::new(messages), Corpus::new(test)))
}

/// Per-class variant of [`split`]: each class is shuffled and cut on its
/// own, then the two sides are re-shuffled.
pub fn split_stratified(
    corpus: &Corpus,
    train_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    check_fraction(train_fraction)?;
    if corpus.is_empty() {
        return Err(Error::invalid("cannot split an empty corpus"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in Label::ALL {
        let mut class: Vec<Message> = corpus
            .messages
            .iter()
            .filter(|m| m.label == label)
            .cloned()
            .collect();
        class.shuffle(&mut rng::stream(seed, &[tag::SPLIT, label.index() as u64]));
        let cut = train_size(class.len(), train_fraction);
        test.extend(class.split_off(cut));
        train.extend(class);
    }
    train.shuffle(&mut rng::stream(seed, &[tag::SPLIT, 10]));
    test.shuffle(&mut rng::stream(seed, &[tag::SPLIT, 11]));
    Ok((Corpus::new(train), Corpus::new(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn synthetic(ham: usize, spam: usize) -> Corpus {
        Corpus::from_pairs(
            (0..ham)
                .map(|i| (Label::Ham, format!("ham {i}")))
                .chain((0..spam).map(|i| (Label::Spam, format!("spam {i}")))),
        )
    }

    #[test]
    fn single_line() {
        let c = parse_tsv(b"ham\thello").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.messages[0].label, Label::Ham);
        assert_eq!(c.messages[0].text, "hello");
        assert_eq!(c.messages[0].origin, Origin::Original);
    }

    #[test]
    fn unknown_label_names_line() {
        let err = parse_tsv(b"maybe\thello").unwrap_err();
        assert_eq!(err.to_string(), "unknown label at line 1: \"maybe\"");
        let err = parse_tsv(b"ham\tok\nspam\tyes\nHAM\tno\n").unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { line: 3, .. }));
    }

    #[test]
    fn empty_text_rejected() {
        assert!(matches!(
            parse_tsv(b"ham\t\n").unwrap_err(),
            Error::MalformedRecord { line: 1, .. }
        ));
        assert!(parse_tsv(b"ham hello\n").is_err());
        let c = parse_prepared_tsv(b"ham\t\nspam\twin\n").unwrap();
        assert_eq!(c.texts(), vec!["", "win"]);
    }

    #[test]
    fn crlf_and_invalid_utf8() {
        let c = parse_tsv(b"ham\thi\r\nspam\tbad \xff byte\r\n").unwrap();
        assert_eq!(c.messages[0].text, "hi");
        assert_eq!(c.messages[1].text, "bad \u{FFFD} byte");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_tsv("/nonexistent/sms.tsv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn counts() {
        assert_eq!(class_counts(&Corpus::default()), ClassCounts { ham: 0, spam: 0 });
        assert_eq!(synthetic(0, 3).class_counts(), ClassCounts { ham: 0, spam: 3 });
        assert_eq!(synthetic(4825, 747).class_counts().total(), 5572);
    }

    #[test]
    fn reference_split_sizes() {
        let (tr, te) = split(&synthetic(4825, 4825), 0.8, 42).unwrap();
        assert_eq!((tr.len(), te.len()), (7720, 1930));
        let (tr, te) = split(&synthetic(4825, 747), 0.8, 42).unwrap();
        assert_eq!((tr.len(), te.len()), (4457, 1115));
    }

    #[test]
    fn full_fraction_keeps_everything() {
        let c = synthetic(5, 5);
        let (tr, te) = split(&c, 1.0, 3).unwrap();
        assert_eq!(tr.len(), 10);
        assert!(te.is_empty());
    }

    #[test]
    fn bad_fraction() {
        let c = synthetic(2, 2);
        for f in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(split(&c, f, 0).is_err());
        }
        assert!(split(&Corpus::default(), 0.5, 0).is_err());
    }

    #[test]
    fn stratified_keeps_proportions() {
        let (tr, te) = split_stratified(&synthetic(100, 20), 0.8, 9).unwrap();
        assert_eq!(tr.class_counts(), ClassCounts { ham: 80, spam: 16 });
        assert_eq!(te.class_counts(), ClassCounts { ham: 20, spam: 4 });
    }

    #[test]
    fn tsv_round_trip() {
        let c = synthetic(3, 2);
        let back = parse_tsv(c.to_tsv().unwrap().as_bytes()).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn split_is_a_deterministic_partition(
            ham in 0usize..60, spam in 0usize..60,
            fraction in 0.01f64..=1.0, seed in any::<u64>()
        ) {
            prop_assume!(ham + spam > 0);
            let c = synthetic(ham, spam);
            let (tr, te) = split(&c, fraction, seed).unwrap();
            let (tr2, te2) = split(&c, fraction, seed).unwrap();
            prop_assert_eq!(&tr, &tr2);
            prop_assert_eq!(&te, &te2);
            prop_assert_eq!(tr.len(), train_size(c.len(), fraction));
            let a: BTreeSet<usize> = tr.iter().map(|m| m.id).collect();
            let b: BTreeSet<usize> = te.iter().map(|m| m.id).collect();
            prop_assert!(a.is_disjoint(&b));
            prop_assert_eq!(a.len() + b.len(), c.len());
        }
    }
}
