//! Caption files: one record per line, `image_id<TAB>sentiment<TAB>caption`.
//!
//! `sentiment` is one of `pos`, `neg`, `neutral` or `none`. `none` marks a
//! factual caption with no label yet. Blank lines and lines starting with `#`
//! are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::features::FeatureStore;
use super::vocab::{tokenize, Vocabulary};
use crate::error::{Error, Result};
use crate::model::SentimentCategory;

/// A caption as read from disk, before vocabulary encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCaption {
    pub image_id: String,
    /// `None` for factual captions that have not been merged yet.
    pub sentiment: Option<SentimentCategory>,
    pub text: String,
}

impl RawCaption {
    pub fn new(image_id: impl Into<String>, sentiment: Option<SentimentCategory>, text: impl Into<String>) -> Self {
        Self {
            image_id: image_id.into(),
            sentiment,
            text: text.into(),
        }
    }
}

/// An encoded caption ready for training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionRecord {
    pub image_id: String,
    /// `<start> ... <end>`.
    pub tokens: Vec<usize>,
    pub sentiment: SentimentCategory,
    pub raw_text: String,
}

fn sentiment_field(s: Option<SentimentCategory>) -> &'static str {
    s.map_or("none", SentimentCategory::label)
}

pub fn parse_captions(text: &str, source: &str) -> Result<Vec<RawCaption>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                source,
                format!(
                    "line {}: expected image_id, sentiment and caption separated by tabs",
                    i + 1
                ),
            ));
        }
        let sentiment = match fields[1] {
            "none" => None,
            other => Some(
                other
                    .parse::<SentimentCategory>()
                    .map_err(|_| Error::parse(source, format!("line {}: unknown sentiment `{other}`", i + 1)))?,
            ),
        };
        if fields[0].is_empty() {
            return Err(Error::parse(source, format!("line {}: empty image id", i + 1)));
        }
        out.push(RawCaption::new(fields[0], sentiment, fields[2]));
    }
    Ok(out)
}

pub fn read_captions(path: &Path) -> Result<Vec<RawCaption>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_captions(&text, &path.display().to_string())
}

pub fn format_captions(captions: &[RawCaption]) -> String {
    let mut out = String::new();
    for c in captions {
        writeln!(out, "{}\t{}\t{}", c.image_id, sentiment_field(c.sentiment), c.text).unwrap();
    }
    out
}

pub fn write_captions(path: &Path, captions: &[RawCaption]) -> Result<()> {
    fs::write(path, format_captions(captions)).map_err(|e| Error::io(path, e))
}

/// Encodes against `vocab`. Unlabeled captions become Neutral. Captions with
/// more than `max_len` words are rejected, all of them listed in the error.
pub fn encode_captions(captions: &[RawCaption], vocab: &Vocabulary, max_len: usize) -> Result<Vec<CaptionRecord>> {
    let mut too_long = Vec::new();
    let mut out = Vec::with_capacity(captions.len());
    for (i, c) in captions.iter().enumerate() {
        let n = tokenize(&c.text).len();
        if n > max_len {
            too_long.push(format!("#{i} ({}, {n} words)", c.image_id));
            continue;
        }
        out.push(CaptionRecord {
            image_id: c.image_id.clone(),
            tokens: vocab.encode(&c.text),
            sentiment: c.sentiment.unwrap_or(SentimentCategory::Neutral),
            raw_text: c.text.clone(),
        });
    }
    if !too_long.is_empty() {
        return Err(Error::data(format!(
            "{} caption(s) exceed max_len {max_len}: {}",
            too_long.len(),
            too_long.join(", ")
        )));
    }
    Ok(out)
}

pub fn load_captions(path: &Path, vocab: &Vocabulary, max_len: usize) -> Result<Vec<CaptionRecord>> {
    encode_captions(&read_captions(path)?, vocab, max_len)
}

/// Errors with every image id in `records` that has no feature grid.
pub fn check_features(records: &[CaptionRecord], features: &FeatureStore) -> Result<()> {
    let mut missing: Vec<&str> = records
        .iter()
        .map(|r| r.image_id.as_str())
        .filter(|id| !features.contains(id))
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::data(format!(
            "{} image id(s) have captions but no features: {}",
            missing.len(),
            missing.join(", ")
        )))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub positive: usize,
    pub neutral: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn of(captions: &[RawCaption]) -> Self {
        let mut c = Self::default();
        for r in captions {
            match r.sentiment {
                Some(SentimentCategory::Positive) => c.positive += 1,
                Some(SentimentCategory::Negative) => c.negative += 1,
                _ => c.neutral += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.positive + self.neutral + self.negative
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedCorpus {
    pub captions: Vec<RawCaption>,
    pub counts: ClassCounts,
}

/// Labels every factual caption Neutral and appends the sentiment captions.
pub fn merge_datasets(factual: Vec<RawCaption>, sentimental: Vec<RawCaption>) -> Result<MergedCorpus> {
    let mut captions = Vec::with_capacity(factual.len() + sentimental.len());
    for (i, mut c) in factual.into_iter().enumerate() {
        if c.sentiment.is_some_and(|s| s != SentimentCategory::Neutral) {
            return Err(Error::data(format!(
                "factual caption #{i} ({}) carries sentiment `{}`",
                c.image_id,
                sentiment_field(c.sentiment)
            )));
        }
        c.sentiment = Some(SentimentCategory::Neutral);
        captions.push(c);
    }
    for (i, c) in sentimental.into_iter().enumerate() {
        match c.sentiment {
            Some(SentimentCategory::Positive) | Some(SentimentCategory::Negative) => captions.push(c),
            other => {
                return Err(Error::data(format!(
                    "sentiment caption #{i} ({}) has label `{}`, expected pos or neg",
                    c.image_id,
                    sentiment_field(other)
                )))
            }
        }
    }
    let counts = ClassCounts::of(&captions);
    Ok(MergedCorpus { captions, counts })
}
