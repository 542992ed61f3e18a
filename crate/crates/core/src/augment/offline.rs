//! Deterministic word-table translator for offline runs and tests.

use std::collections::HashMap;

use super::TranslationProvider;
use crate::error::{Error, Result};

// (english, pivot, english read back). The third column differs from the
// first where the round trip lands on a synonym.
const FRENCH: &[(&str, &str, &str)] = &[
    ("free", "gratuit", "free"),
    ("cash", "argent", "money"),
    ("money", "argent", "money"),
    ("win", "gagner", "win"),
    ("won", "gagne", "earned"),
    ("prize", "prix", "award"),
    ("call", "appelez", "phone"),
    ("now", "maintenant", "now"),
    ("claim", "reclamez", "claim"),
    ("urgent", "urgent", "pressing"),
    ("text", "texto", "message"),
    ("reply", "repondez", "answer"),
    ("mobile", "portable", "mobile"),
    ("week", "semaine", "week"),
    ("home", "maison", "house"),
    ("tomorrow", "demain", "tomorrow"),
    ("today", "aujourdhui", "today"),
    ("love", "amour", "love"),
    ("sorry", "desole", "sorry"),
    ("later", "plustard", "later"),
    ("good", "bon", "good"),
    ("night", "nuit", "night"),
    ("time", "temps", "time"),
    ("want", "veux", "want"),
    ("need", "besoin", "need"),
    ("offer", "offre", "deal"),
    ("guaranteed", "garanti", "guaranteed"),
    ("customer", "client", "client"),
    ("service", "service", "service"),
    ("friend", "ami", "friend"),
];

const GERMAN: &[(&str, &str, &str)] = &[
    ("free", "kostenlos", "free"),
    ("cash", "bargeld", "cash"),
    ("money", "geld", "money"),
    ("win", "gewinnen", "win"),
    ("won", "gewonnen", "won"),
    ("prize", "preis", "price"),
    ("call", "anrufen", "ring"),
    ("now", "jetzt", "now"),
    ("claim", "fordern", "request"),
    ("urgent", "dringend", "urgent"),
    ("text", "sms", "sms"),
    ("reply", "antworten", "respond"),
    ("mobile", "handy", "phone"),
    ("week", "woche", "week"),
    ("home", "zuhause", "home"),
    ("tomorrow", "morgen", "tomorrow"),
    ("today", "heute", "today"),
    ("love", "liebe", "love"),
    ("sorry", "entschuldigung", "apologies"),
    ("later", "spater", "later"),
    ("good", "gut", "good"),
    ("night", "nacht", "night"),
    ("time", "zeit", "time"),
    ("want", "willst", "want"),
    ("need", "brauche", "need"),
    ("offer", "angebot", "offer"),
    ("guaranteed", "garantiert", "guaranteed"),
    ("customer", "kunde", "customer"),
    ("friend", "freund", "friend"),
];

const SPANISH: &[(&str, &str, &str)] = &[
    ("free", "gratis", "free"),
    ("cash", "efectivo", "cash"),
    ("money", "dinero", "money"),
    ("win", "ganar", "win"),
    ("won", "ganado", "won"),
    ("prize", "premio", "reward"),
    ("call", "llama", "call"),
    ("now", "ahora", "now"),
    ("claim", "reclama", "claim"),
    ("urgent", "urgente", "urgent"),
    ("text", "mensaje", "message"),
    ("reply", "responde", "reply"),
    ("mobile", "movil", "cellphone"),
    ("week", "semana", "week"),
    ("home", "casa", "house"),
    ("tomorrow", "manana", "tomorrow"),
    ("today", "hoy", "today"),
    ("love", "amor", "love"),
    ("sorry", "perdon", "sorry"),
    ("later", "luego", "later"),
    ("good", "bueno", "good"),
    ("night", "noche", "night"),
    ("time", "tiempo", "time"),
    ("want", "quiero", "want"),
    ("need", "necesito", "need"),
    ("offer", "oferta", "offer"),
    ("guaranteed", "garantizado", "guaranteed"),
    ("customer", "cliente", "customer"),
    ("friend", "amigo", "friend"),
];

struct Table {
    forward: HashMap<&'static str, &'static str>,
    backward: HashMap<&'static str, &'static str>,
}

impl Table {
    fn new(rows: &'static [(&'static str, &'static str, &'static str)]) -> Self {
        let mut forward = HashMap::new();
        let mut backward = HashMap::new();
        for &(en, pivot, back) in rows {
            forward.insert(en, pivot);
            backward.entry(pivot).or_insert(back);
        }
        Table { forward, backward }
    }
}

/// Word-for-word translator over fixed bilingual tables for `fr`, `de` and
/// `es`. Unknown words pass through unchanged; letter case is carried over.
pub struct OfflineProvider {
    source: String,
    tables: HashMap<&'static str, Table>,
}

impl Default for OfflineProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl OfflineProvider {
    pub fn new() -> Self {
        let tables = HashMap::from([
            ("fr", Table::new(FRENCH)),
            ("de", Table::new(GERMAN)),
            ("es", Table::new(SPANISH)),
        ]);
        OfflineProvider {
            source: "en".into(),
            tables,
        }
    }

    pub fn languages(&self) -> Vec<&'static str> {
        let mut langs: Vec<_> = self.tables.keys().copied().collect();
        langs.sort_unstable();
        langs
    }
}

fn match_case(template: &str, word: &str) -> String {
    let mut letters = template.chars().filter(|c| c.is_alphabetic());
    let first_upper = letters.next().is_some_and(|c| c.is_uppercase());
    let rest_upper = template
        .chars()
        .filter(|c| c.is_alphabetic())
        .skip(1)
        .all(|c| c.is_uppercase());
    if first_upper && rest_upper && template.chars().filter(|c| c.is_alphabetic()).count() > 1 {
        word.to_uppercase()
    } else if first_upper {
        let mut chars = word.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

impl TranslationProvider for OfflineProvider {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        let (table, to_pivot) = if source_lang == self.source {
            (self.tables.get(target_lang), true)
        } else if target_lang == self.source {
            (self.tables.get(source_lang), false)
        } else {
            (None, false)
        };
        let table = table.ok_or_else(|| Error::Translation {
            language: if source_lang == self.source {
                target_lang.to_string()
            } else {
                source_lang.to_string()
            },
            message: format!("no offline table for {source_lang}->{target_lang}"),
        })?;
        let map = if to_pivot { &table.forward } else { &table.backward };
        let words: Vec<String> = text
            .split_whitespace()
            .map(|w| match map.get(w.to_lowercase().as_str()) {
                Some(t) => match_case(w, t),
                None => w.to_string(),
            })
            .collect();
        Ok(words.join(" "))
    }
}
