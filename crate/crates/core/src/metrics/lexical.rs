//! Lexicon-based measures: adjective entropy, noun-only SPICE, ANP counts,
//! top adjectives and sentiment consistency.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::lexicon::{AnpLexicon, Polarity};
use super::Tokens;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjectiveEntropy {
    /// Shannon entropy in bits.
    pub bits: f64,
    /// Adjective tokens counted.
    pub adjectives: usize,
}

impl AdjectiveEntropy {
    /// True when no adjective was found and `bits` is a placeholder 0.
    pub fn is_degenerate(&self) -> bool {
        self.adjectives == 0
    }
}

/// Entropy (base 2) of the distribution of lexicon adjectives over all
/// candidate tokens. Every occurrence counts.
pub fn entropy_adjectives(candidates: &[Tokens], lexicon: &AnpLexicon) -> AdjectiveEntropy {
    let counts = adjective_counts(candidates, lexicon);
    let total: usize = counts.values().sum();
    if total == 0 {
        log::warn!("entropy: no lexicon adjectives in {} candidates", candidates.len());
        return AdjectiveEntropy {
            bits: 0.0,
            adjectives: 0,
        };
    }
    let bits = counts
        .values()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum::<f64>();
    AdjectiveEntropy {
        bits: bits.max(0.0),
        adjectives: total,
    }
}

pub fn adjective_counts<'a>(candidates: &'a [Tokens], lexicon: &AnpLexicon) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for w in candidates.iter().flatten() {
        if lexicon.is_adjective(w) {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// The `k` most frequent adjectives, ties in lexicographic order. Shorter
/// than `k` when fewer distinct adjectives occur.
pub fn top_adjectives(candidates: &[Tokens], lexicon: &AnpLexicon, k: usize) -> Vec<(String, usize)> {
    let mut ranked: Vec<(&str, usize)> = adjective_counts(candidates, lexicon).into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(w, c)| (w.to_string(), c)).collect()
}

fn noun_classes<'a>(tokens: impl IntoIterator<Item = &'a String>, lexicon: &'a AnpLexicon) -> BTreeSet<&'a str> {
    tokens
        .into_iter()
        .filter(|w| lexicon.is_noun(w))
        .map(|w| lexicon.canonical_noun(w))
        .collect()
}

/// Noun-only SPICE for one image. Nouns are compared by synonym class.
pub fn spice_n_single(candidate: &[String], references: &[Tokens], lexicon: &AnpLexicon) -> f64 {
    let c = noun_classes(candidate, lexicon);
    let r = noun_classes(references.iter().flatten(), lexicon);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let matched = c.intersection(&r).count() as f64;
    if matched == 0.0 {
        return 0.0;
    }
    let (p, rec) = (matched / c.len() as f64, matched / r.len() as f64);
    2.0 * p * rec / (p + rec)
}

/// Mean over images of [`spice_n_single`]; 0 for an empty corpus.
pub fn spice_n(candidates: &[Tokens], references: &[Vec<Tokens>], lexicon: &AnpLexicon) -> f64 {
    if candidates.is_empty() {
        return 0.0;
    }
    let sum: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| spice_n_single(c, r, lexicon))
        .sum();
    sum / candidates.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnpCounts {
    pub generated: usize,
    pub matched: usize,
}

impl AnpCounts {
    /// `matched / generated`, 0 when nothing was generated.
    pub fn precision(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.matched as f64 / self.generated as f64
        }
    }
}

fn anp_bigrams<'a>(tokens: &'a [String], lexicon: &AnpLexicon, polarity: Polarity) -> Vec<(&'a str, &'a str)> {
    tokens
        .windows(2)
        .filter(|w| lexicon.anp_polarity(&w[0], &w[1]) == Some(polarity))
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect()
}

fn bigrams(tokens: &[String]) -> impl Iterator<Item = (&str, &str)> {
    tokens.windows(2).map(|w| (w[0].as_str(), w[1].as_str()))
}

/// Adjacent lexicon ANPs of the given polarity in the candidates, and how
/// many of them also occur as adjacent bigrams in the references: those of
/// the same image, or of any image when `corpus_wide`.
pub fn count_anps(
    candidates: &[Tokens],
    references: &[Vec<Tokens>],
    lexicon: &AnpLexicon,
    polarity: Polarity,
    corpus_wide: bool,
) -> AnpCounts {
    let all_refs: HashSet<(&str, &str)> = if corpus_wide {
        references.iter().flatten().flat_map(|r| bigrams(r)).collect()
    } else {
        HashSet::new()
    };
    let mut out = AnpCounts::default();
    for (i, cand) in candidates.iter().enumerate() {
        let found = anp_bigrams(cand, lexicon, polarity);
        if found.is_empty() {
            continue;
        }
        let own: HashSet<(&str, &str)> = references
            .get(i)
            .map(|refs| refs.iter().flat_map(|r| bigrams(r)).collect())
            .unwrap_or_default();
        let pool = if corpus_wide { &all_refs } else { &own };
        out.generated += found.len();
        out.matched += found.iter().filter(|p| pool.contains(p)).count();
    }
    out
}

/// Polarity of a caption's adjectives: `Some` when it has at least one
/// lexicon adjective and they all agree.
pub fn caption_polarity(tokens: &[String], lexicon: &AnpLexicon) -> Option<Polarity> {
    let mut found = tokens.iter().filter_map(|w| lexicon.adjective_polarity(w));
    let first = found.next()?;
    found.all(|p| p == first).then_some(first)
}

/// Fraction of `(caption, requested polarity)` items whose adjectives all
/// carry the requested polarity (at least one adjective required).
pub fn sentiment_consistency(items: &[(Tokens, Polarity)], lexicon: &AnpLexicon) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let ok = items
        .iter()
        .filter(|(t, p)| caption_polarity(t, lexicon) == Some(*p))
        .count();
    ok as f64 / items.len() as f64
}

/// Fraction of images whose positive and negative captions both have a
/// definite polarity and those polarities differ.
pub fn flip_rate(pairs: &[(Tokens, Tokens)], lexicon: &AnpLexicon) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let flipped = pairs
        .iter()
        .filter(|(pos, neg)| {
            matches!(
                (caption_polarity(pos, lexicon), caption_polarity(neg, lexicon)),
                (Some(a), Some(b)) if a != b
            )
        })
        .count();
    flipped as f64 / pairs.len() as f64
}

/// Occurrences of `word`, such as `<unk>`, across all candidates.
pub fn count_word(candidates: &[Tokens], word: &str) -> usize {
    candidates.iter().flatten().filter(|w| *w == word).count()
}
