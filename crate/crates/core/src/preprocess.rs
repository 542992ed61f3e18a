//! Text normalization applied to every message before augmentation,
//! tokenization and feature extraction.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized text: ASCII alphanumerics separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CleanText(String);

impl CleanText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|w| !w.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the alphabet and spacing invariants.
    pub fn is_valid(s: &str) -> bool {
        !s.starts_with(' ')
            && !s.ends_with(' ')
            && !s.contains("  ")
            && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b' ')
    }

    /// Wraps an already normalized string.
    pub fn parse(s: &str) -> Result<CleanText> {
        if Self::is_valid(s) {
            Ok(CleanText(s.to_string()))
        } else {
            Err(Error::invalid(format!("text is not normalized: {s:?}")))
        }
    }
}

impl fmt::Display for CleanText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CleanText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Replaces every character outside `[A-Za-z0-9]` with a space, collapses
/// whitespace runs (including tabs, newlines and carriage returns) and trims.
pub fn clean_text(text: &str) -> CleanText {
    let replaced: String = text
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect();
    CleanText(replaced.split_whitespace().collect::<Vec<_>>().join(" "))
}

/// Keeps a word only while its count among the words kept so far is below
/// `repeat`. Comparison is case-sensitive.
pub fn remove_repeat(text: &CleanText, repeat: usize) -> Result<CleanText> {
    if repeat < 1 {
        return Err(Error::invalid("repeat must be at least 1"));
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut kept = Vec::new();
    for word in text.words() {
        let count = seen.entry(word).or_insert(0);
        if *count < repeat {
            *count += 1;
            kept.push(word);
        }
    }
    Ok(CleanText(kept.join(" ")))
}

pub fn preprocess(text: &str) -> CleanText {
    remove_repeat(&clean_text(text), 1).expect("repeat of 1 is valid")
}

/// Variant used when lowercasing is switched on in the run configuration.
pub fn preprocess_with(text: &str, lowercase: bool) -> CleanText {
    if lowercase {
        preprocess(&text.to_ascii_lowercase())
    } else {
        preprocess(text)
    }
}
