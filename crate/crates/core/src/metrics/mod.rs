//! Caption evaluation: BLEU, ROUGE-L, CIDEr-D, adjective entropy, noun-only
//! SPICE, ANP counts and top adjectives.
//!
//! All functions take tokens produced by [`crate::corpus::tokenize`];
//! `references[i]` holds the references of `candidates[i]`.

pub mod bleu;
pub mod cider;
pub mod lexical;
pub mod lexicon;
mod ngrams;
pub mod report;
pub mod rouge;

pub use bleu::bleu_n;
pub use cider::cider;
pub use lexical::{
    caption_polarity, count_anps, entropy_adjectives, flip_rate, sentiment_consistency, spice_n, top_adjectives,
    AdjectiveEntropy, AnpCounts,
};
pub use lexicon::{AnpLexicon, Polarity};
pub use report::{evaluate, format_table, MetricReport, ReportRow};
pub use rouge::rouge_l;

use crate::error::{Error, Result};

pub type Tokens = Vec<String>;

pub(crate) fn check_corpus(candidates: &[Tokens], references: &[Vec<Tokens>]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::data("no candidates to evaluate"));
    }
    if candidates.len() != references.len() {
        return Err(Error::data(format!(
            "{} candidates but {} reference sets",
            candidates.len(),
            references.len()
        )));
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(Error::data(format!("candidate {i} has no references")));
    }
    Ok(())
}
