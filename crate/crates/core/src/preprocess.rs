//! Text cleaning, per-scenario input composition and fixed-length encoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Lowercases letters and turns every other character into a separator.
/// The result holds only lowercase letters and single inner spaces.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if !c.is_alphabetic() {
            pending_space = true;
            continue;
        }
        for lc in c.to_lowercase() {
            if is_clean_letter(lc) {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(lc);
            } else {
                pending_space = true;
            }
        }
    }
    out
}

/// A letter that lowercasing leaves untouched.
pub fn is_clean_letter(c: char) -> bool {
    if !c.is_alphabetic() {
        return false;
    }
    let mut lower = c.to_lowercase();
    lower.next() == Some(c) && lower.next().is_none()
}

/// Which document fields make up the model input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Abstract,
    Keywords,
    #[default]
    AbstractAndKeywords,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Abstract, Scenario::Keywords, Scenario::AbstractAndKeywords];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Abstract => "abstract",
            Scenario::Keywords => "keywords",
            Scenario::AbstractAndKeywords => "abstract_and_keywords",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}`")))
    }
}

/// Cleaned title followed by the scenario's fields, joined by single
/// spaces with empty parts skipped.
pub fn compose_input(doc: &Document, scenario: Scenario) -> Result<String> {
    let keywords = || clean_text(&doc.keywords.join(" "));
    let mut parts = vec![clean_text(&doc.title)];
    match scenario {
        Scenario::Abstract => parts.push(clean_text(&doc.abstract_text)),
        Scenario::Keywords => parts.push(keywords()),
        Scenario::AbstractAndKeywords => {
            parts.push(clean_text(&doc.abstract_text));
            parts.push(keywords());
        }
    }
    parts.retain(|p| !p.is_empty());
    if parts.is_empty() {
        return Err(Error::UnusableDocument {
            doc_id: doc.id.clone(),
            scenario: scenario.to_string(),
        });
    }
    Ok(parts.join(" "))
}

/// Vocabulary contract a backend exposes for encoding.
pub trait Tokenizer {
    /// Identifies the vocabulary; examples carry it so a backend can refuse
    /// inputs encoded against a different vocabulary.
    fn fingerprint(&self) -> &str;
    fn tokenize(&self, text: &str) -> Vec<u32>;
    fn cls_id(&self) -> u32;
    fn sep_id(&self) -> u32;
    fn pad_id(&self) -> u32;
    fn vocab_size(&self) -> usize;
    /// Maps ids back to token strings, skipping boundary and padding ids.
    fn decode(&self, ids: &[u32]) -> Vec<String>;
}

/// Fixed-length model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub input_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub label_index: Option<usize>,
    pub tokenizer: String,
}

impl EncodedExample {
    pub fn with_label(mut self, label_index: usize) -> Self {
        self.label_index = Some(label_index);
        self
    }

    /// Ids under the attention mask.
    pub fn active_ids(&self) -> &[u32] {
        let n = self.attention_mask.iter().take_while(|&&m| m == 1).count();
        &self.input_ids[..n]
    }
}

/// `[CLS] tokens.. [SEP]` truncated to `max_len`, then padded.
pub fn encode(text: &str, tokenizer: &dyn Tokenizer, max_len: usize) -> Result<EncodedExample> {
    if max_len < 3 {
        return Err(Error::MaxLenTooSmall(max_len));
    }
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let mut tokens = tokenizer.tokenize(text);
    tokens.truncate(max_len - 2);
    let mut input_ids = Vec::with_capacity(max_len);
    input_ids.push(tokenizer.cls_id());
    input_ids.extend(tokens);
    input_ids.push(tokenizer.sep_id());
    let active = input_ids.len();
    input_ids.resize(max_len, tokenizer.pad_id());
    let mut attention_mask = vec![1u8; active];
    attention_mask.resize(max_len, 0);
    Ok(EncodedExample {
        input_ids,
        attention_mask,
        label_index: None,
        tokenizer: tokenizer.fingerprint().to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::WordTokenizer;

    #[test]
    fn cleans_punctuation_digits_and_case() {
        assert_eq!(clean_text("Deep-Learning 2024!"), "deep learning");
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text("  ,,  "), "");
        assert_eq!(clean_text("Ünïcode  Straße\tΩmega"), "ünïcode straße ωmega");
        assert_eq!(clean_text("H2O"), "h o");
    }

    #[test]
    fn cleaning_handles_multi_char_lowercase() {
        // U+0130 lowercases to 'i' + a combining dot, which is not a letter.
        let once = clean_text("İstanbul");
        assert_eq!(clean_text(&once), once);
    }

    #[test]
    fn composes_fields_in_order() {
        let d = Document::new("x", "A", "B c").with_keywords(["D"]);
        assert_eq!(compose_input(&d, Scenario::AbstractAndKeywords).unwrap(), "a b c d");
        assert_eq!(compose_input(&d, Scenario::Abstract).unwrap(), "a b c");
        assert_eq!(compose_input(&d, Scenario::Keywords).unwrap(), "a d");
    }

    #[test]
    fn compose_skips_empty_parts() {
        let d = Document::new("x", "Only Title", "");
        assert_eq!(compose_input(&d, Scenario::Abstract).unwrap(), "only title");
        let d = Document::new("x", "", "has abstract");
        assert!(matches!(
            compose_input(&d, Scenario::Keywords),
            Err(Error::UnusableDocument { .. })
        ));
    }

    #[test]
    fn scenario_round_trips_through_str() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
        assert!("both".parse::<Scenario>().is_err());
    }

    #[test]
    fn encode_pads_and_truncates() {
        let tok = WordTokenizer::from_texts(["a b c d e"], 1);
        let short = encode("a b", &tok, 8).unwrap();
        assert_eq!(short.input_ids.len(), 8);
        assert_eq!(short.attention_mask, vec![1, 1, 1, 1, 0, 0, 0, 0]);

        let long_text = vec!["a"; 1000].join(" ");
        let long = encode(&long_text, &tok, 512).unwrap();
        assert_eq!(long.input_ids.len(), 512);
        assert!(long.attention_mask.iter().all(|&m| m == 1));
        assert_eq!(*long.input_ids.last().unwrap(), tok.sep_id());

        assert!(matches!(encode("", &tok, 8), Err(Error::EmptyText)));
        assert!(matches!(encode("a", &tok, 2), Err(Error::MaxLenTooSmall(2))));
        assert_eq!(encode("a b", &tok, 8).unwrap(), short);
    }
}
