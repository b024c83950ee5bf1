//! Whitespace word-level vocabulary used by the lightweight backend.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::Tokenizer;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

const SPECIALS: [&str; 4] = [PAD, UNK, CLS, SEP];
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

/// Maps whitespace-separated words to ids; ids 0..4 are the special tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordTokenizer {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    fingerprint: String,
}

impl WordTokenizer {
    /// Builds a vocabulary from cleaned texts. Words seen fewer than
    /// `min_count` times are left out; order is by frequency, then word.
    pub fn from_texts<I, S>(texts: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for word in text.as_ref().split_whitespace() {
                *counts.entry(word.to_owned()).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !SPECIALS.contains(&w.as_str()))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_words(words.into_iter().map(|(w, _)| w))
    }

    /// Builds from an ordered word list; specials are prepended.
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for w in words {
            if !tokens.contains(&w) {
                tokens.push(w);
            }
        }
        Self::from_token_list(tokens)
    }

    fn from_token_list(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut h = Sha256::new();
        for t in &tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        let fingerprint = hex::encode(&h.finalize()[..8]);
        WordTokenizer {
            tokens,
            index,
            fingerprint,
        }
    }

    /// One token per line, line number = id.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(str::to_owned).collect();
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::malformed(
                path,
                "vocabulary must start with [PAD] [UNK] [CLS] [SEP]",
            ));
        }
        Ok(Self::from_token_list(tokens))
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.tokens[SPECIALS.len()..]
    }
}

impl Tokenizer for WordTokenizer {
    fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    fn tokenize(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .map(|w| self.index.get(w).copied().unwrap_or(UNK_ID))
            .collect()
    }

    fn cls_id(&self) -> u32 {
        CLS_ID
    }

    fn sep_id(&self) -> u32 {
        SEP_ID
    }

    fn pad_id(&self) -> u32 {
        PAD_ID
    }

    fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| !matches!(id, PAD_ID | CLS_ID | SEP_ID))
            .map(|&id| self.token(id).unwrap_or(UNK).to_owned())
            .collect()
    }
}
