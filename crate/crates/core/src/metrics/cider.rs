//! CIDEr-D: tf-idf n-gram cosine with clipping and a length penalty.

use std::collections::{HashMap, HashSet};

use super::ngrams::ngram_counts;
use super::{check_corpus, Tokens};
use crate::error::Result;

pub const CIDER_MAX_N: usize = 4;
pub const CIDER_SIGMA: f64 = 6.0;

struct Vectorized<'a> {
    weights: Vec<HashMap<&'a [String], f64>>,
    norms: Vec<f64>,
    len: usize,
}

fn vectorize<'a>(tokens: &'a [String], df: &HashMap<&[String], usize>, log_n: f64) -> Vectorized<'a> {
    let mut weights = Vec::with_capacity(CIDER_MAX_N);
    let mut norms = Vec::with_capacity(CIDER_MAX_N);
    for n in 1..=CIDER_MAX_N {
        let w: HashMap<&[String], f64> = ngram_counts(tokens, n)
            .into_iter()
            .map(|(g, tf)| {
                let d = df.get(g).copied().unwrap_or(0).max(1) as f64;
                (g, tf as f64 * (log_n - d.ln()))
            })
            .collect();
        norms.push(w.values().map(|x| x * x).sum::<f64>().sqrt());
        weights.push(w);
    }
    Vectorized {
        weights,
        norms,
        len: tokens.len(),
    }
}

/// Per-image mean of CIDEr-D over `n = 1..4`, scaled by 10, averaged over
/// the corpus.
///
/// Document frequency counts, for each n-gram, the images whose reference
/// set contains it; `idf = ln(N) - ln(max(1, df))`. Term weights are raw
/// counts times idf. Each candidate weight is clipped to the reference
/// weight before the dot product.
pub fn cider(candidates: &[Tokens], references: &[Vec<Tokens>]) -> Result<f64> {
    check_corpus(candidates, references)?;
    let mut df: HashMap<&[String], usize> = HashMap::new();
    for refs in references {
        let mut seen: HashSet<&[String]> = HashSet::new();
        for r in refs {
            for n in 1..=CIDER_MAX_N {
                seen.extend(ngram_counts(r, n).into_keys());
            }
        }
        for g in seen {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let log_n = (references.len() as f64).ln();
    let mut total = 0.0;
    for (cand, refs) in candidates.iter().zip(references) {
        let c = vectorize(cand, &df, log_n);
        let mut score = 0.0;
        for r in refs {
            let r = vectorize(r, &df, log_n);
            let delta = c.len as f64 - r.len as f64;
            let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
            for n in 0..CIDER_MAX_N {
                let mut dot = 0.0;
                for (g, &wc) in &c.weights[n] {
                    if let Some(&wr) = r.weights[n].get(g) {
                        dot += wc.min(wr) * wr;
                    }
                }
                if c.norms[n] != 0.0 && r.norms[n] != 0.0 {
                    dot /= c.norms[n] * r.norms[n];
                }
                score += dot * penalty;
            }
        }
        total += score / CIDER_MAX_N as f64 / refs.len() as f64 * 10.0;
    }
    Ok(total / candidates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn no_overlap_is_zero() {
        let refs = vec![vec![tokenize("a cute dog")], vec![tokenize("a red car")]];
        let c = cider(&[tokenize("x y z"), tokenize("q r s")], &refs).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn shared_reference_has_zero_idf() {
        let refs = vec![vec![tokenize("a dog")], vec![tokenize("a dog")]];
        let c = cider(&[tokenize("a dog"), tokenize("a cat")], &refs).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn exact_match_beats_partial() {
        let refs = vec![vec![tokenize("a cute dog")], vec![tokenize("a red car")]];
        let exact = cider(&[tokenize("a cute dog"), tokenize("a red car")], &refs).unwrap();
        let partial = cider(&[tokenize("a dog"), tokenize("a car")], &refs).unwrap();
        assert!(exact > partial && partial > 0.0);
    }
}
