//! JSON-over-HTTP translation client.
//!
//! Request: `POST <endpoint>` with `{"q": text, "source": code, "target": code}`.
//! Response: `{"translatedText": string}`. The API key, when present, is sent
//! as a bearer token.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::TranslationProvider;
use crate::error::{Error, Result};

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "SPAMXAI_TRANSLATE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestProviderConfig {
    pub endpoint: String,
    pub timeout_secs: u64,
    pub retries: u32,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for RestProviderConfig {
    fn default() -> Self {
        RestProviderConfig {
            endpoint: "http://127.0.0.1:5000/translate".into(),
            timeout_secs: 10,
            retries: 2,
            api_key: None,
        }
    }
}

impl RestProviderConfig {
    /// Fills the API key from the environment when it is not already set.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

pub struct RestProvider {
    config: RestProviderConfig,
    client: reqwest::blocking::Client,
}

impl RestProvider {
    pub fn new(config: RestProviderConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Translation {
                language: String::new(),
                message: format!("cannot build HTTP client: {e}"),
            })?;
        Ok(RestProvider { config, client })
    }

    pub fn endpoint(&self) -> &str {
        &self.config.endpoint
    }

    fn attempt(&self, body: &TranslateRequest<'_>) -> std::result::Result<String, String> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.json::<TranslateResponse>()
            .map(|r| r.translated_text)
            .map_err(|e| format!("bad response body: {e}"))
    }
}

impl TranslationProvider for RestProvider {
    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String> {
        let body = TranslateRequest {
            q: text,
            source: source_lang,
            target: target_lang,
        };
        let mut last = String::new();
        for _ in 0..=self.config.retries {
            match self.attempt(&body) {
                Ok(t) => return Ok(t),
                Err(e) => last = e,
            }
        }
        let language = if target_lang == "en" {
            source_lang
        } else {
            target_lang
        };
        Err(Error::Translation {
            language: language.to_string(),
            message: format!("endpoint {}: {last}", self.config.endpoint),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    /// Serves `n` requests, answering each with the reversed `q` field and
    /// forwarding the raw request bodies and auth headers.
    fn serve(n: usize) -> (String, mpsc::Receiver<(String, Option<String>)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for stream in listener.incoming().take(n) {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = None;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let line = line.trim_end().to_string();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = Some(line["authorization:".len()..].trim().to_string());
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let body = String::from_utf8(body).unwrap();
                let v: serde_json::Value = serde_json::from_str(&body).unwrap();
                let q: String = v["q"].as_str().unwrap().chars().rev().collect();
                let reply = serde_json::json!({ "translatedText": q }).to_string();
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.len(),
                    reply
                )
                .unwrap();
                tx.send((body, auth)).unwrap();
            }
        });
        (format!("http://{addr}/translate"), rx)
    }

    #[test]
    fn posts_expected_json() {
        let (endpoint, rx) = serve(1);
        let provider = RestProvider::new(RestProviderConfig {
            endpoint,
            api_key: Some("secret".into()),
            ..RestProviderConfig::default()
        })
        .unwrap();
        assert_eq!(provider.translate("abc", "en", "fr").unwrap(), "cba");
        let (body, auth) = rx.recv().unwrap();
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v, serde_json::json!({"q": "abc", "source": "en", "target": "fr"}));
        assert_eq!(auth.as_deref(), Some("Bearer secret"));
    }

    #[test]
    fn unreachable_endpoint_names_endpoint() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/translate", listener.local_addr().unwrap());
        drop(listener);
        let provider = RestProvider::new(RestProviderConfig {
            endpoint: endpoint.clone(),
            retries: 1,
            timeout_secs: 2,
            api_key: None,
        })
        .unwrap();
        match provider.translate("hi", "en", "de") {
            Err(Error::Translation { language, message }) => {
                assert_eq!(language, "de");
                assert!(message.contains(&endpoint));
            }
            other => panic!("expected translation error, got {other:?}"),
        }
    }
}
