use super::ngrams::ngram_counts;
use super::{check_corpus, Tokens};
use crate::error::Result;

/// Corpus-level BLEU-1 through BLEU-`max_n`.
///
/// Clipped n-gram counts and candidate n-gram totals are summed over the
/// corpus before taking precisions. The brevity penalty uses, per
/// candidate, the reference length closest to the candidate length
/// (shorter wins ties).
pub fn bleu_n(candidates: &[Tokens], references: &[Vec<Tokens>], max_n: usize) -> Result<Vec<f64>> {
    check_corpus(candidates, references)?;
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (cand, refs) in candidates.iter().zip(references) {
        c_len += cand.len();
        r_len += refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&r| (r.abs_diff(cand.len()), r))
            .unwrap_or(0);
        for n in 1..=max_n {
            let counts = ngram_counts(cand, n);
            let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
            for (gram, &c) in &counts {
                let max_ref = ref_counts
                    .iter()
                    .map(|rc| rc.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                matched[n - 1] += c.min(max_ref);
            }
            total[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    if c_len == 0 {
        return Ok(vec![0.0; max_n]);
    }
    let bp = if c_len < r_len {
        (1.0 - r_len as f64 / c_len as f64).exp()
    } else {
        1.0
    };
    let mut out = Vec::with_capacity(max_n);
    let mut log_sum = 0.0;
    for n in 0..max_n {
        if matched[n] == 0 || total[n] == 0 {
            log_sum = f64::NEG_INFINITY;
        } else {
            log_sum += (matched[n] as f64 / total[n] as f64).ln();
        }
        out.push(if log_sum.is_finite() {
            bp * (log_sum / (n + 1) as f64).exp()
        } else {
            0.0
        });
    }
    Ok(out)
}
