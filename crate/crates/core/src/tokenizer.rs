//! Byte-pair-encoding subword vocabulary with WordPiece-style rendering.
//!
//! Words are split on spaces. Inside a word the first symbol is bare and
//! every following symbol carries a `##` prefix, so `ab` starts out as
//! `a ##b`. Merging `a` with `##b` yields `ab`; merging `##a` with `##b`
//! yields `##ab`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::CleanText;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const SPECIALS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];
pub const CONTINUATION: &str = "##";

const FILE_HEADER: &str = "#spamxai-vocab v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pieces: Vec<String>,
    merges: Vec<(String, String)>,
    index: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
}

/// Fixed-length encoded text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
    pub n_real: usize,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids of the non-pad prefix.
    pub fn real_ids(&self) -> &[u32] {
        &self.ids[..self.n_real]
    }

    /// Checks the cls/sep/mask invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ShapeMismatch(format!("token sequence: {m}")));
        if self.ids.len() != self.mask.len() {
            return bad("ids and mask lengths differ");
        }
        if self.n_real == 0 || self.n_real > self.ids.len() || self.ids[0] != CLS {
            return bad("missing leading cls");
        }
        if self.ids[self.n_real - 1] != SEP {
            return bad("missing sep before padding");
        }
        for (i, (&id, &m)) in self.ids.iter().zip(&self.mask).enumerate() {
            let real = i < self.n_real;
            if (m == 1) != real || (id == PAD) == real {
                return bad("mask inconsistent with padding");
            }
        }
        Ok(())
    }
}

fn word_symbols(word: &str) -> Vec<String> {
    word.chars()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                c.to_string()
            } else {
                format!("{CONTINUATION}{c}")
            }
        })
        .collect()
}

fn merged_piece(left: &str, right: &str) -> String {
    format!("{left}{}", right.strip_prefix(CONTINUATION).unwrap_or(right))
}

fn apply_merge(symbols: &mut Vec<String>, left: &str, right: &str, merged: &str) {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(merged.to_string());
            i += 2;
        } else {
            out.push(std::mem::take(&mut symbols[i]));
            i += 1;
        }
    }
    *symbols = out;
}

/// Learns a vocabulary by greedily merging the most frequent adjacent pair.
///
/// Ties between equally frequent pairs go to the lexicographically smallest
/// `(left, right)`. Training stops at `vocab_size` pieces or when no pair
/// occurs more than once.
pub fn train_bpe<'a>(texts: impl IntoIterator<Item = &'a str>, vocab_size: usize) -> Result<Vocab> {
    let mut word_counts: HashMap<&str, usize> = HashMap::new();
    for text in texts {
        for w in text.split_whitespace() {
            *word_counts.entry(w).or_insert(0) += 1;
        }
    }
    if word_counts.is_empty() {
        return Err(Error::invalid("cannot train a vocabulary on an empty corpus"));
    }
    let mut words: Vec<(&str, usize)> = word_counts.into_iter().collect();
    words.sort_unstable();
    let mut words: Vec<(Vec<String>, usize)> = words
        .into_iter()
        .map(|(w, c)| (word_symbols(w), c))
        .collect();

    let chars: BTreeSet<char> = words
        .iter()
        .flat_map(|(s, _)| s.iter())
        .map(|s| s.chars().last().expect("symbols are non-empty"))
        .collect();
    let base: BTreeSet<String> = words.iter().flat_map(|(s, _)| s.iter().cloned()).collect();
    let minimum = SPECIALS.len() + chars.len().max(base.len());
    if vocab_size <= minimum {
        return Err(Error::VocabTooSmall {
            requested: vocab_size,
            minimum,
        });
    }

    let mut pieces: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    pieces.extend(base);
    let mut known: BTreeSet<String> = pieces.iter().cloned().collect();
    let mut merges = Vec::new();

    while pieces.len() < vocab_size {
        let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
        for (symbols, count) in &words {
            for w in symbols.windows(2) {
                *pairs.entry((w[0].as_str(), w[1].as_str())).or_insert(0) += count;
            }
        }
        let best = pairs
            .into_iter()
            .filter(|&(_, c)| c > 1)
            .min_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then_with(|| pa.cmp(pb)));
        let Some(((left, right), _)) = best else {
            break;
        };
        let (left, right) = (left.to_string(), right.to_string());
        let merged = merged_piece(&left, &right);
        for (symbols, _) in &mut words {
            apply_merge(symbols, &left, &right, &merged);
        }
        if known.insert(merged.clone()) {
            pieces.push(merged);
        }
        merges.push((left, right));
    }
    Vocab::from_parts(pieces, merges)
}

impl Vocab {
    pub fn from_parts(pieces: Vec<String>, merges: Vec<(String, String)>) -> Result<Vocab> {
        if pieces.len() < SPECIALS.len() || pieces[..4] != SPECIALS {
            return Err(Error::Format("vocabulary must start with the special pieces".into()));
        }
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() || p.contains(char::is_whitespace) {
                return Err(Error::Format(format!("invalid piece {p:?}")));
            }
            if index.insert(p.clone(), i as u32).is_some() {
                return Err(Error::Format(format!("duplicate piece {p:?}")));
            }
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            if !index.contains_key(&merged_piece(l, r)) {
                return Err(Error::Format(format!("merge {l} {r} produces an unknown piece")));
            }
            ranks.entry((l.clone(), r.clone())).or_insert(rank);
        }
        Ok(Vocab {
            pieces,
            merges,
            index,
            ranks,
        })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Result<&str> {
        self.pieces
            .get(id as usize)
            .map(String::as_str)
            .ok_or(Error::TokenOutOfRange {
                id,
                size: self.pieces.len(),
            })
    }

    pub fn is_special(id: u32) -> bool {
        id < SPECIALS.len() as u32
    }

    /// BPE pieces of a single word. Symbols missing from the vocabulary
    /// become `[UNK]` and never take part in merges.
    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        let mut symbols: Vec<Option<String>> = word_symbols(word)
            .into_iter()
            .map(|s| self.index.contains_key(&s).then_some(s))
            .collect();
        loop {
            let best = symbols
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| match (&w[0], &w[1]) {
                    (Some(l), Some(r)) => self.ranks.get(&(l.clone(), r.clone())).map(|&k| (k, i)),
                    _ => None,
                })
                .min();
            let Some((rank, _)) = best else { break };
            let (l, r) = &self.merges[rank];
            let merged = merged_piece(l, r);
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                let hit = i + 1 < symbols.len()
                    && symbols[i].as_deref() == Some(l.as_str())
                    && symbols[i + 1].as_deref() == Some(r.as_str());
                if hit {
                    out.push(Some(merged.clone()));
                    i += 2;
                } else {
                    out.push(symbols[i].take());
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
            .into_iter()
            .map(|s| s.map_or(UNK, |s| self.index[&s]))
            .collect()
    }

    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .flat_map(|w| self.tokenize_word(w))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FILE_HEADER}");
        let _ = writeln!(out, "pieces {}", self.pieces.len());
        for p in &self.pieces {
            let _ = writeln!(out, "{p}");
        }
        let _ = writeln!(out, "merges {}", self.merges.len());
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocab> {
        let fmt_err = |m: &str| Error::Format(format!("vocabulary file: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(FILE_HEADER) {
            return Err(fmt_err("missing or unsupported header"));
        }
        let count = |line: Option<&str>, key: &str| -> Result<usize> {
            line.and_then(|l| l.strip_prefix(key))
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| fmt_err(&format!("expected `{key}<count>`")))
        };
        let n = count(lines.next(), "pieces ")?;
        let pieces: Vec<String> = lines.by_ref().take(n).map(str::to_string).collect();
        if pieces.len() != n {
            return Err(fmt_err("truncated piece list"));
        }
        let m = count(lines.next(), "merges ")?;
        let mut merges = Vec::with_capacity(m);
        for line in lines.by_ref().take(m) {
            let (l, r) = line
                .split_once(' ')
                .ok_or_else(|| fmt_err("malformed merge rule"))?;
            merges.push((l.to_string(), r.to_string()));
        }
        if merges.len() != m {
            return Err(fmt_err("truncated merge list"));
        }
        Vocab::from_parts(pieces, merges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocab> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocab::from_text(&text)
    }
}

/// `[CLS] pieces [SEP]`, truncated to `max_len` with `[SEP]` forced into the
/// last kept slot, then padded.
pub fn encode(vocab: &Vocab, text: &CleanText, max_len: usize) -> Result<TokenSeq> {
    encode_str(vocab, text.as_str(), max_len)
}

pub fn encode_str(vocab: &Vocab, text: &str, max_len: usize) -> Result<TokenSeq> {
    if max_len < 3 {
        return Err(Error::invalid("max_len must be at least 3"));
    }
    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS);
    ids.extend(vocab.tokenize(text).into_iter().take(max_len - 2));
    ids.push(SEP);
    let n_real = ids.len();
    let mut mask = vec![1u8; n_real];
    ids.resize(max_len, PAD);
    mask.resize(max_len, 0);
    Ok(TokenSeq { ids, mask, n_real })
}

/// Strips specials, glues `##` continuations onto the preceding piece and
/// joins words with single spaces.
pub fn decode(vocab: &Vocab, seq: &TokenSeq) -> Result<String> {
    decode_ids(vocab, &seq.ids)
}

pub fn decode_ids(vocab: &Vocab, ids: &[u32]) -> Result<String> {
    let mut words: Vec<String> = Vec::new();
    for &id in ids {
        let piece = vocab.piece(id)?;
        if Vocab::is_special(id) {
            continue;
        }
        match (piece.strip_prefix(CONTINUATION), words.last_mut()) {
            (Some(rest), Some(last)) => last.push_str(rest),
            (Some(rest), None) => words.push(rest.to_string()),
            (None, _) => words.push(piece.to_string()),
        }
    }
    Ok(words.join(" "))
}
