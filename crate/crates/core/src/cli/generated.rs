//! Generated caption files: `image_id<TAB>sentiment<TAB>caption<TAB>log_prob`.
//!
//! The reader also accepts three-column caption files, so reference captions
//! can be scored as candidates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SentimentCategory;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCaption {
    pub image_id: String,
    pub sentiment: SentimentCategory,
    pub text: String,
    pub log_prob: Option<f64>,
}

pub fn format_generated(captions: &[GeneratedCaption]) -> String {
    let mut out = String::new();
    for c in captions {
        match c.log_prob {
            Some(lp) => writeln!(out, "{}\t{}\t{}\t{lp:.6}", c.image_id, c.sentiment, c.text),
            None => writeln!(out, "{}\t{}\t{}", c.image_id, c.sentiment, c.text),
        }
        .unwrap();
    }
    out
}

pub fn parse_generated(text: &str, source: &str) -> Result<Vec<GeneratedCaption>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |detail: String| Error::parse(source, format!("line {}: {detail}", i + 1));
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() < 3 {
            return Err(err("expected image_id, sentiment, caption and optional log_prob".into()));
        }
        if fields[0].is_empty() {
            return Err(err("empty image id".into()));
        }
        let sentiment = fields[1]
            .parse::<SentimentCategory>()
            .map_err(|_| err(format!("unknown sentiment `{}`", fields[1])))?;
        let log_prob = match fields.get(3) {
            Some(f) => Some(
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad log_prob `{f}`")))?,
            ),
            None => None,
        };
        out.push(GeneratedCaption {
            image_id: fields[0].to_string(),
            sentiment,
            text: fields[2].to_string(),
            log_prob,
        });
    }
    Ok(out)
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedCaption>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_generated(&text, &path.display().to_string())
}
