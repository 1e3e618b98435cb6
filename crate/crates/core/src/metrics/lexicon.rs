//! Adjective/noun lexicon used in place of a part-of-speech tagger.
//!
//! File format, one tab-separated record per line (`#` starts a comment):
//!
//! ```text
//! ADJ   word  pos|neg
//! NOUN  word
//! ANP   adjective  noun  pos|neg
//! SYN   word  word  [word ...]
//! ```
//!
//! An ANP line also registers its adjective and noun. SYN words are nouns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::SentimentCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn label(self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Negative => "neg",
        }
    }

    /// `None` for Neutral.
    pub fn of(sentiment: SentimentCategory) -> Option<Self> {
        match sentiment {
            SentimentCategory::Positive => Some(Polarity::Positive),
            SentimentCategory::Negative => Some(Polarity::Negative),
            SentimentCategory::Neutral => None,
        }
    }

    pub fn sentiment(self) -> SentimentCategory {
        match self {
            Polarity::Positive => SentimentCategory::Positive,
            Polarity::Negative => SentimentCategory::Negative,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pos" | "positive" => Ok(Polarity::Positive),
            "neg" | "negative" => Ok(Polarity::Negative),
            other => Err(format!("unknown polarity `{other}` (expected pos or neg)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnpLexicon {
    adjectives: BTreeMap<String, Polarity>,
    nouns: BTreeSet<String>,
    anps: BTreeMap<(String, String), Polarity>,
    /// Noun to the smallest member of its synonym class.
    canonical: BTreeMap<String, String>,
    /// Raw SYN groups, kept for writing the file back out.
    synonym_groups: Vec<Vec<String>>,
}

impl AnpLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_adjective(&mut self, word: &str, polarity: Polarity) -> Result<()> {
        match self.adjectives.get(word) {
            Some(&p) if p != polarity => Err(Error::data(format!(
                "adjective `{word}` listed as both {p} and {polarity}"
            ))),
            _ => {
                self.adjectives.insert(word.to_string(), polarity);
                Ok(())
            }
        }
    }

    pub fn add_noun(&mut self, word: &str) {
        if self.nouns.insert(word.to_string()) {
            self.canonical
                .entry(word.to_string())
                .or_insert_with(|| word.to_string());
        }
    }

    pub fn add_anp(&mut self, adjective: &str, noun: &str, polarity: Polarity) -> Result<()> {
        self.add_adjective(adjective, polarity)?;
        self.add_noun(noun);
        self.anps.insert((adjective.to_string(), noun.to_string()), polarity);
        Ok(())
    }

    /// Merges the classes of all `words`; the relation stays symmetric and
    /// transitive.
    pub fn add_synonyms(&mut self, words: &[&str]) {
        for w in words {
            self.add_noun(w);
        }
        let mut members: BTreeSet<String> = BTreeSet::new();
        let roots: BTreeSet<String> = words.iter().map(|w| self.canonical[*w].clone()).collect();
        for (noun, root) in &self.canonical {
            if roots.contains(root) {
                members.insert(noun.clone());
            }
        }
        let new_root = members.iter().next().cloned().expect("at least one word");
        for m in &members {
            self.canonical.insert(m.clone(), new_root.clone());
        }
        self.synonym_groups.push(words.iter().map(|w| w.to_string()).collect());
    }

    pub fn adjective_polarity(&self, word: &str) -> Option<Polarity> {
        self.adjectives.get(word).copied()
    }

    pub fn is_adjective(&self, word: &str) -> bool {
        self.adjectives.contains_key(word)
    }

    pub fn is_noun(&self, word: &str) -> bool {
        self.nouns.contains(word)
    }

    pub fn anp_polarity(&self, adjective: &str, noun: &str) -> Option<Polarity> {
        self.anps.get(&(adjective.to_string(), noun.to_string())).copied()
    }

    /// Representative of the noun's synonym class.
    pub fn canonical_noun<'a>(&'a self, word: &'a str) -> &'a str {
        self.canonical.get(word).map_or(word, String::as_str)
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        a == b || (self.is_noun(a) && self.is_noun(b) && self.canonical_noun(a) == self.canonical_noun(b))
    }

    /// All nouns sharing a class with `word`, including itself.
    pub fn synonyms(&self, word: &str) -> BTreeSet<&str> {
        let root = self.canonical_noun(word);
        self.canonical
            .iter()
            .filter(|(_, r)| r.as_str() == root)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn adjectives(&self) -> impl Iterator<Item = (&str, Polarity)> {
        self.adjectives.iter().map(|(w, &p)| (w.as_str(), p))
    }

    pub fn nouns(&self) -> impl Iterator<Item = &str> {
        self.nouns.iter().map(String::as_str)
    }

    pub fn anps(&self) -> impl Iterator<Item = (&str, &str, Polarity)> {
        self.anps.iter().map(|((a, n), &p)| (a.as_str(), n.as_str(), p))
    }

    pub fn is_empty(&self) -> bool {
        self.adjectives.is_empty() && self.nouns.is_empty()
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let at = |detail: String| Error::parse(source, format!("line {}: {detail}", i + 1));
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            let polarity = |s: &str| s.parse::<Polarity>().map_err(at);
            match (f[0], f.len()) {
                ("ADJ", 3) => lex
                    .add_adjective(f[1], polarity(f[2])?)
                    .map_err(|e| at(e.to_string()))?,
                ("NOUN", 2) => lex.add_noun(f[1]),
                ("ANP", 4) => lex
                    .add_anp(f[1], f[2], polarity(f[3])?)
                    .map_err(|e| at(e.to_string()))?,
                ("SYN", n) if n >= 3 => lex.add_synonyms(&f[1..]),
                (kind @ ("ADJ" | "NOUN" | "ANP" | "SYN"), n) => {
                    return Err(at(format!("{kind} record has {} field(s)", n - 1)))
                }
                (other, _) => return Err(at(format!("unknown record type `{other}`"))),
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, p) in &self.adjectives {
            writeln!(out, "ADJ\t{w}\t{p}").unwrap();
        }
        for n in &self.nouns {
            writeln!(out, "NOUN\t{n}").unwrap();
        }
        for ((a, n), p) in &self.anps {
            writeln!(out, "ANP\t{a}\t{n}\t{p}").unwrap();
        }
        for g in &self.synonym_groups {
            writeln!(out, "SYN\t{}", g.join("\t")).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
