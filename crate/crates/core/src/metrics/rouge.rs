use super::{check_corpus, Tokens};
use crate::error::Result;

pub const ROUGE_BETA: f64 = 1.2;

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `(1 + b^2) P R / (R + b^2 P)`, zero when either is zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == 0.0 || recall == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * precision * recall / (recall + b2 * precision)
}

/// ROUGE-L of one candidate: precision and recall are each maximized over
/// the references, then combined.
pub fn rouge_l_single(candidate: &[String], references: &[Tokens]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let (mut p, mut r) = (0.0f64, 0.0f64);
    for reference in references.iter().filter(|r| !r.is_empty()) {
        let l = lcs_len(candidate, reference) as f64;
        p = p.max(l / candidate.len() as f64);
        r = r.max(l / reference.len() as f64);
    }
    f_beta(p, r, ROUGE_BETA)
}

/// Mean sentence ROUGE-L over the corpus.
pub fn rouge_l(candidates: &[Tokens], references: &[Vec<Tokens>]) -> Result<f64> {
    check_corpus(candidates, references)?;
    let sum: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_l_single(c, r))
        .sum();
    Ok(sum / candidates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn lcs() {
        assert_eq!(lcs_len(&tokenize("a b c d"), &tokenize("a c d")), 3);
        assert_eq!(lcs_len(&tokenize("a b"), &[]), 0);
    }

    #[test]
    fn extremes() {
        assert_eq!(rouge_l(&[tokenize("a b")], &[vec![tokenize("a b")]]).unwrap(), 1.0);
        assert_eq!(rouge_l(&[tokenize("a b")], &[vec![tokenize("c d")]]).unwrap(), 0.0);
    }

    #[test]
    fn hand_value() {
        let v = rouge_l(&[tokenize("a b c d")], &[vec![tokenize("a c d")]]).unwrap();
        let expect = 2.44 * 0.75 / (1.0 + 1.44 * 0.75);
        assert!((v - expect).abs() < 1e-12, "{v}");
        assert!((v - 0.879807).abs() < 1e-6);
    }
}
