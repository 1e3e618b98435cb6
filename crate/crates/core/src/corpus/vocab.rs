use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const START: usize = 1;
pub const END: usize = 2;
pub const UNK: usize = 3;
pub const NUM_SPECIAL: usize = 4;

const SPECIAL_WORDS: [&str; NUM_SPECIAL] = ["<pad>", "<start>", "<end>", "<unk>"];

/// Lowercases, drops punctuation, and splits on whitespace.
///
/// Candidates and references go through this same function before any
/// metric is computed.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Word/index mapping with the special tokens at indices 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps words seen at least `min_count` times, most frequent first
    /// (ties in lexicographic order), so that the total size is at most `cap`.
    pub fn build<S: AsRef<str>>(texts: &[S], min_count: usize, cap: usize) -> Result<Self> {
        if cap < NUM_SPECIAL {
            return Err(Error::config(format!(
                "vocabulary cap {cap} cannot hold the {NUM_SPECIAL} special tokens"
            )));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for w in tokenize(t.as_ref()) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !SPECIAL_WORDS.contains(&w.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(cap - NUM_SPECIAL);
        Self::from_words(kept.into_iter().map(|(w, _)| w))
    }

    /// Builds from the non-special words in index order.
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut all: Vec<String> = SPECIAL_WORDS.iter().map(|s| s.to_string()).collect();
        all.extend(words);
        let mut index = HashMap::with_capacity(all.len());
        for (i, w) in all.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Self { words: all, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    /// `<start> w1 .. wn <end>`.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let mut out = vec![START];
        out.extend(tokenize(text).iter().map(|w| self.index_of(w)));
        out.push(END);
        out
    }

    /// Words for `tokens`, dropping `<pad>`, `<start>` and `<end>`.
    pub fn decode(&self, tokens: &[usize]) -> Vec<String> {
        tokens
            .iter()
            .filter(|&&t| t != PAD && t != START && t != END)
            .map(|&t| self.word(t).unwrap_or("<unk>").to_string())
            .collect()
    }

    /// One word per line, in index order, specials excluded.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for w in &self.words[NUM_SPECIAL..] {
            text.push_str(w);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_words(text.lines().filter(|l| !l.is_empty()).map(str::to_string))
    }
}
