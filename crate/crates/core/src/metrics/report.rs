use std::fmt::Write as _;

use serde::Serialize;

use super::lexical::{count_anps, count_word, entropy_adjectives, spice_n, top_adjectives, AnpCounts};
use super::lexicon::{AnpLexicon, Polarity};
use super::{bleu_n, cider, rouge_l, Tokens};
use crate::error::Result;

pub const TOP_ADJECTIVES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub images: usize,
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    /// Raw CIDEr-D, not scaled by 100.
    pub cider: f64,
    pub spice_n: f64,
    pub entropy: f64,
    /// Set when no adjective occurred and `entropy` is a placeholder.
    pub entropy_degenerate: bool,
    pub anp_generated: usize,
    pub anp_matched: usize,
    pub top_adjectives: Vec<(String, usize)>,
    pub unk_count: usize,
}

/// Scores `candidates` against `references`. ANP counts need a target
/// polarity and stay zero without one.
pub fn evaluate(
    candidates: &[Tokens],
    references: &[Vec<Tokens>],
    lexicon: &AnpLexicon,
    polarity: Option<Polarity>,
    anp_corpus_wide: bool,
) -> Result<MetricReport> {
    let b = bleu_n(candidates, references, 4)?;
    let entropy = entropy_adjectives(candidates, lexicon);
    let anps = polarity.map_or(AnpCounts::default(), |p| {
        count_anps(candidates, references, lexicon, p, anp_corpus_wide)
    });
    Ok(MetricReport {
        images: candidates.len(),
        bleu: [b[0], b[1], b[2], b[3]],
        rouge_l: rouge_l(candidates, references)?,
        cider: cider(candidates, references)?,
        spice_n: spice_n(candidates, references, lexicon),
        entropy: entropy.bits,
        entropy_degenerate: entropy.is_degenerate(),
        anp_generated: anps.generated,
        anp_matched: anps.matched,
        top_adjectives: top_adjectives(candidates, lexicon, TOP_ADJECTIVES),
        unk_count: count_word(candidates, "<unk>"),
    })
}

/// One table line. Counts are floats so that averaged rows stay exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    pub cider: f64,
    pub spice_n: f64,
    pub entropy: f64,
    pub anp_generated: f64,
    pub anp_matched: f64,
}

impl ReportRow {
    pub fn new(label: impl Into<String>, r: &MetricReport) -> Self {
        Self {
            label: label.into(),
            bleu: r.bleu,
            rouge_l: r.rouge_l,
            cider: r.cider,
            spice_n: r.spice_n,
            entropy: r.entropy,
            anp_generated: r.anp_generated as f64,
            anp_matched: r.anp_matched as f64,
        }
    }

    /// Column-wise mean, as in an "Avg" row.
    pub fn mean(label: impl Into<String>, rows: &[ReportRow]) -> Self {
        let n = rows.len().max(1) as f64;
        let avg = |f: &dyn Fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            label: label.into(),
            bleu: [0, 1, 2, 3].map(|i| avg(&|r| r.bleu[i])),
            rouge_l: avg(&|r| r.rouge_l),
            cider: avg(&|r| r.cider),
            spice_n: avg(&|r| r.spice_n),
            entropy: avg(&|r| r.entropy),
            anp_generated: avg(&|r| r.anp_generated),
            anp_matched: avg(&|r| r.anp_matched),
        }
    }
}

fn count(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

/// Fixed-width table: B-1..B-4, ROUGE-L, METEOR (always "-"), CIDEr,
/// SPICE_N, Entropy and ANP counts as `generated/matched`. Scores are
/// percentages with one decimal unless `raw`; entropy is in bits.
pub fn format_table(rows: &[ReportRow], raw: bool) -> String {
    let label_w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    write!(out, "{:<label_w$}", "").unwrap();
    for h in [
        "B-1", "B-2", "B-3", "B-4", "ROUGE-L", "METEOR", "CIDEr", "SPICE_N", "Entropy", "C_ANP",
    ] {
        write!(out, " {h:>9}").unwrap();
    }
    out.push('\n');
    let score = |v: f64| {
        if raw {
            format!("{v:.6}")
        } else {
            format!("{:.1}", v * 100.0)
        }
    };
    for r in rows {
        write!(out, "{:<label_w$}", r.label).unwrap();
        let mut cells: Vec<String> = r.bleu.iter().map(|&b| score(b)).collect();
        cells.push(score(r.rouge_l));
        cells.push("-".into());
        cells.push(score(r.cider));
        cells.push(score(r.spice_n));
        cells.push(if raw {
            format!("{:.6}", r.entropy)
        } else {
            format!("{:.2}", r.entropy)
        });
        cells.push(format!("{}/{}", count(r.anp_generated), count(r.anp_matched)));
        for c in cells {
            write!(out, " {c:>9}").unwrap();
        }
        out.push('\n');
    }
    out
}
