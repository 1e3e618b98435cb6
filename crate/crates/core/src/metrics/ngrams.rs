use std::collections::HashMap;

pub type NgramCounts<'a> = HashMap<&'a [String], usize>;

/// Counts of every `n`-gram in `tokens`.
pub fn ngram_counts(tokens: &[String], n: usize) -> NgramCounts<'_> {
    let mut out = HashMap::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for w in tokens.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}
