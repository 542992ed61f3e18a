use std::fmt::Write as _;

use super::Explanation;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn style(coefficient: f64, max: f64) -> String {
    let alpha = if max > 0.0 { (coefficient.abs() / max).min(1.0) } else { 0.0 };
    let rgb = if coefficient >= 0.0 { "0, 160, 0" } else { "200, 0, 0" };
    format!("background-color: rgba({rgb}, {:.3})", 0.15 + 0.6 * alpha)
}

/// Standalone HTML page: the text with attributed words highlighted (green
/// for positive, red for negative) followed by a coefficient table.
pub fn render_html(explanation: &Explanation, text: &str) -> String {
    let max = explanation
        .words
        .iter()
        .map(|w| w.coefficient.abs())
        .fold(0.0, f64::max);
    let lookup = |word: &str| explanation.words.iter().find(|w| w.word == word);
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(
        out,
        "<title>{} explanation</title>\n<style>span.w {{ padding: 1px 3px; border-radius: 3px; }} td, th {{ padding: 2px 8px; }}</style>\n</head>\n<body>",
        explanation.method
    );
    let _ = writeln!(
        out,
        "<p>method: {} &middot; class: {} &middot; probability: {:.4}</p>",
        explanation.method, explanation.target_class, explanation.prediction
    );
    if let Some(raw) = explanation.raw_sum {
        let _ = writeln!(out, "<p>attribution sum: {raw:.6}</p>");
    }
    out.push_str("<p>");
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match lookup(word) {
            Some(w) => {
                let _ = write!(
                    out,
                    "<span class=\"w\" style=\"{}\" title=\"{:.4}\">{}</span>",
                    style(w.coefficient, max),
                    w.coefficient,
                    escape(word)
                );
            }
            None => out.push_str(&escape(word)),
        }
    }
    out.push_str("</p>\n<table>\n<tr><th>word</th><th>coefficient</th></tr>\n");
    for w in &explanation.words {
        let _ = writeln!(
            out,
            "<tr><td style=\"{}\">{}</td><td>{:.6}</td></tr>",
            style(w.coefficient, max),
            escape(&w.word),
            w.coefficient
        );
    }
    out.push_str("</table>\n</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::explain::{Method, WordScore};

    #[test]
    fn colours_follow_sign() {
        let e = Explanation {
            method: Method::Lime,
            target_class: Label::Spam,
            prediction: 0.9,
            words: vec![
                WordScore { word: "win".into(), coefficient: 0.5 },
                WordScore { word: "mum".into(), coefficient: -0.2 },
            ],
            raw_sum: None,
        };
        let html = render_html(&e, "call mum to win");
        assert!(html.contains("rgba(0, 160, 0, 0.750)\" title=\"0.5000\">win<"));
        assert!(html.contains("rgba(200, 0, 0"));
        assert!(html.contains(">mum</span>"));
        assert!(html.contains(" to "));
        assert_eq!(escape("<a&\">"), "&lt;a&amp;&quot;&gt;");
    }
}
