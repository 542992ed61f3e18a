//! Back-translation augmentation and minority-class oversampling.

mod offline;
mod rest;

pub use offline::OfflineProvider;
pub use rest::{RestProvider, RestProviderConfig, API_KEY_ENV};

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Message, Origin};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// A machine translation service.
pub trait TranslationProvider: Sync {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String>;
}

impl<T: TranslationProvider + ?Sized> TranslationProvider for &T {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        (**self).translate(text, source_lang, target_lang)
    }
}

impl<T: TranslationProvider + ?Sized + Send> TranslationProvider for Box<T> {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        (**self).translate(text, source_lang, target_lang)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub languages: Vec<String>,
    pub source_language: String,
    pub seed: u64,
    pub max_rounds: usize,
    /// Fill a deficit left after `max_rounds` by duplicating minority originals.
    pub allow_duplication: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            languages: vec!["fr".into(), "de".into(), "es".into()],
            source_language: "en".into(),
            seed: 42,
            max_rounds: 8,
            allow_duplication: true,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::invalid("at least one pivot language is required"));
        }
        let mut seen = HashSet::new();
        for lang in &self.languages {
            if !seen.insert(lang.as_str()) {
                return Err(Error::invalid(format!("duplicate pivot language {lang:?}")));
            }
            if *lang == self.source_language {
                return Err(Error::invalid(format!(
                    "pivot language {lang:?} equals the source language"
                )));
            }
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be positive"));
        }
        Ok(())
    }
}

/// Translates `text` into a randomly chosen pivot language and back.
pub fn back_translate<P, R>(
    text: &str,
    provider: &P,
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<String>
where
    P: TranslationProvider + ?Sized,
    R: Rng + ?Sized,
{
    if text.is_empty() {
        return Err(Error::invalid("cannot back-translate empty text"));
    }
    let language = config
        .languages
        .choose(rng)
        .ok_or_else(|| Error::invalid("no pivot languages configured"))?;
    let wrap = |e: Error| match e {
        Error::Translation { .. } => e,
        other => Error::Translation {
            language: language.clone(),
            message: other.to_string(),
        },
    };
    let forward = provider
        .translate(text, &config.source_language, language)
        .map_err(wrap)?;
    let back = provider
        .translate(&forward, language, &config.source_language)
        .map_err(wrap)?;
    if back.trim().is_empty() {
        return Err(Error::Translation {
            language: language.clone(),
            message: "provider returned an empty translation".into(),
        });
    }
    Ok(back)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceStats {
    pub rounds: usize,
    pub translated: usize,
    pub duplicated: usize,
}

pub fn balance<P: TranslationProvider + ?Sized>(
    corpus: &Corpus,
    provider: &P,
    config: &AugmentConfig,
) -> Result<Corpus> {
    balance_with_stats(corpus, provider, config).map(|(c, _)| c)
}

/// Oversamples the minority class to parity.
///
/// Each round shuffles the minority messages and back-translates them one
/// variant each until the deficit is covered. Whatever remains after
/// `max_rounds` is filled with seeded duplicates of minority originals.
pub fn balance_with_stats<P: TranslationProvider + ?Sized>(
    corpus: &Corpus,
    provider: &P,
    config: &AugmentConfig,
) -> Result<(Corpus, BalanceStats)> {
    config.validate()?;
    let counts = corpus.class_counts();
    let mut stats = BalanceStats::default();
    if counts.ham == counts.spam {
        return Ok((corpus.clone(), stats));
    }
    let minority = if counts.ham < counts.spam {
        Label::Ham
    } else {
        Label::Spam
    };
    let pool: Vec<&Message> = corpus.iter().filter(|m| m.label == minority).collect();
    if pool.is_empty() {
        return Err(Error::invalid(format!(
            "no {minority} messages to oversample from"
        )));
    }

    let mut out = corpus.messages.clone();
    let mut next_id = corpus.iter().map(|m| m.id + 1).max().unwrap_or(0);
    let mut deficit = counts.get(minority.other()) - counts.get(minority);
    let mut push = |out: &mut Vec<Message>, text: String| {
        out.push(Message {
            id: next_id,
            text,
            label: minority,
            origin: Origin::Augmented,
        });
        next_id += 1;
    };

    for round in 0..config.max_rounds {
        if deficit == 0 {
            break;
        }
        let mut order = pool.clone();
        order.shuffle(&mut rng::stream(config.seed, &[tag::AUGMENT, round as u64]));
        order.truncate(deficit);
        let variants: Vec<String> = order
            .par_iter()
            .map(|m| {
                let mut rng = rng::stream(config.seed, &[tag::AUGMENT, round as u64, m.id as u64]);
                back_translate(&m.text, provider, config, &mut rng)
            })
            .collect::<Result<_>>()?;
        deficit -= variants.len();
        stats.translated += variants.len();
        stats.rounds = round + 1;
        for text in variants {
            push(&mut out, text);
        }
    }

    if deficit > 0 {
        if !config.allow_duplication {
            return Err(Error::RoundsExhausted {
                rounds: config.max_rounds,
                deficit,
            });
        }
        let mut rng = rng::stream(config.seed, &[tag::DUPLICATE]);
        for _ in 0..deficit {
            let source = pool.choose(&mut rng).expect("pool is non-empty");
            push(&mut out, source.text.clone());
        }
        stats.duplicated = deficit;
    }
    Ok((Corpus::new(out), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct Identity;

    impl TranslationProvider for Identity {
        fn translate(&self, text: &str, _: &str, _: &str) -> Result<String> {
            Ok(text.to_string())
        }
    }

    /// en→xx swaps words from a table, xx→en is the identity.
    struct Dictionary(HashMap<&'static str, &'static str>);

    impl TranslationProvider for Dictionary {
        fn translate(&self, text: &str, source: &str, _: &str) -> Result<String> {
            if source != "en" {
                return Ok(text.to_string());
            }
            Ok(text
                .split(' ')
                .map(|w| self.0.get(w).copied().unwrap_or(w))
                .collect::<Vec<_>>()
                .join(" "))
        }
    }

    struct Failing;

    impl TranslationProvider for Failing {
        fn translate(&self, _: &str, _: &str, _: &str) -> Result<String> {
            Err(Error::Format("service unavailable".into()))
        }
    }

    fn single_language(lang: &str) -> AugmentConfig {
        AugmentConfig {
            languages: vec![lang.into()],
            ..AugmentConfig::default()
        }
    }

    fn corpus(ham: usize, spam: usize) -> Corpus {
        Corpus::from_pairs(
            (0..ham)
                .map(|i| (Label::Ham, format!("hello friend {i}")))
                .chain((0..spam).map(|i| (Label::Spam, format!("free cash prize {i}")))),
        )
    }

    #[test]
    fn identity_round_trip() {
        let mut rng = rng::stream(1, &[]);
        let out = back_translate("any text", &Identity, &AugmentConfig::default(), &mut rng);
        assert_eq!(out.unwrap(), "any text");
    }

    #[test]
    fn dictionary_round_trip() {
        let provider = Dictionary(HashMap::from([("cash", "money")]));
        let mut rng = rng::stream(1, &[]);
        let out = back_translate("free cash now", &provider, &single_language("xx"), &mut rng);
        assert_eq!(out.unwrap(), "free money now");
    }

    #[test]
    fn failure_carries_language() {
        let mut rng = rng::stream(1, &[]);
        let err = back_translate("hi", &Failing, &single_language("de"), &mut rng).unwrap_err();
        match err {
            Error::Translation { language, message } => {
                assert_eq!(language, "de");
                assert!(message.contains("service unavailable"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_text_rejected() {
        let mut rng = rng::stream(1, &[]);
        assert!(back_translate("", &Identity, &AugmentConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = AugmentConfig::default();
        assert!(c.validate().is_ok());
        c.languages = vec![];
        assert!(c.validate().is_err());
        c.languages = vec!["fr".into(), "fr".into()];
        assert!(c.validate().is_err());
        c.languages = vec!["en".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn ten_nine_gets_one_copy() {
        let c = corpus(10, 9);
        let (out, stats) = balance_with_stats(&c, &Identity, &AugmentConfig::default()).unwrap();
        let counts = out.class_counts();
        assert_eq!((counts.ham, counts.spam), (10, 10));
        let added = &out.messages[19];
        assert_eq!(added.origin, Origin::Augmented);
        assert_eq!(added.label, Label::Spam);
        assert_eq!(added.id, 19);
        assert!(c.iter().any(|m| m.text == added.text));
        assert_eq!(stats.translated + stats.duplicated, 1);
    }

    #[test]
    fn balanced_input_unchanged() {
        let c = corpus(5, 5);
        assert_eq!(balance(&c, &Failing, &AugmentConfig::default()).unwrap(), c);
    }

    #[test]
    fn deficit_beyond_rounds_is_duplicated() {
        let c = corpus(20, 3);
        let config = AugmentConfig {
            max_rounds: 2,
            ..AugmentConfig::default()
        };
        let (out, stats) = balance_with_stats(&c, &Identity, &config).unwrap();
        assert_eq!(out.class_counts().spam, 20);
        assert_eq!(stats.translated, 6);
        assert_eq!(stats.duplicated, 11);

        let strict = AugmentConfig {
            allow_duplication: false,
            ..config
        };
        assert!(matches!(
            balance(&c, &Identity, &strict),
            Err(Error::RoundsExhausted { rounds: 2, deficit: 11 })
        ));
    }

    #[test]
    fn provider_failure_propagates() {
        assert!(matches!(
            balance(&corpus(4, 2), &Failing, &AugmentConfig::default()),
            Err(Error::Translation { .. })
        ));
    }

    #[test]
    fn minority_ham_is_oversampled_too() {
        let out = balance(&corpus(2, 7), &OfflineProvider::new(), &AugmentConfig::default()).unwrap();
        assert_eq!(out.class_counts().ham, 7);
    }

    #[test]
    fn balance_invariants_with_offline_provider() {
        let c = corpus(60, 7);
        let config = AugmentConfig::default();
        let out = balance(&c, &OfflineProvider::new(), &config).unwrap();
        let again = balance(&c, &OfflineProvider::new(), &config).unwrap();
        assert_eq!(out, again);
        assert_eq!(&out.messages[..c.len()], &c.messages[..]);
        let augmented = out.iter().filter(|m| m.origin == Origin::Augmented).count();
        assert_eq!(augmented, 60 - 7);
        let ids: Vec<usize> = out.iter().map(|m| m.id).collect();
        assert_eq!(ids, (0..out.len()).collect::<Vec<_>>());
    }
}
