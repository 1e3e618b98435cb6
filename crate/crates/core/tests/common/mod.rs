//! Shared test fixtures and brute-force metric oracles.
//!
//! The oracles read the fixture files with their own minimal parsing and
//! recompute every score from first principles: n-grams are counted by
//! scanning, LCS by enumerating candidate subsequences.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn fixture_lines(name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(fixture_path(name))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// One fixture image: its candidate and same-sentiment references.
#[derive(Debug, Clone)]
pub struct FixtureItem {
    pub id: String,
    pub sentiment: String,
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

pub fn metric_fixture() -> Vec<FixtureItem> {
    let refs = fixture_lines("references.tsv");
    fixture_lines("candidates.tsv")
        .into_iter()
        .map(|c| FixtureItem {
            id: c[0].clone(),
            sentiment: c[1].clone(),
            candidate: words(&c[2]),
            references: refs
                .iter()
                .filter(|r| r[0] == c[0] && r[1] == c[1])
                .map(|r| words(&r[2]))
                .collect(),
        })
        .collect()
}

/// Adjective polarities, nouns with their synonym class root, and ANPs.
pub struct OracleLexicon {
    pub adjectives: Vec<(String, String)>,
    pub nouns: Vec<String>,
    pub synonym_pairs: Vec<(String, String)>,
    pub anps: Vec<(String, String, String)>,
}

impl OracleLexicon {
    pub fn fixture() -> Self {
        let mut lex = OracleLexicon {
            adjectives: vec![],
            nouns: vec![],
            synonym_pairs: vec![],
            anps: vec![],
        };
        for f in fixture_lines("lexicon.tsv") {
            match f[0].as_str() {
                "ADJ" => lex.adjectives.push((f[1].clone(), f[2].clone())),
                "NOUN" => lex.nouns.push(f[1].clone()),
                "SYN" => lex.synonym_pairs.push((f[1].clone(), f[2].clone())),
                "ANP" => {
                    lex.adjectives.push((f[1].clone(), f[3].clone()));
                    lex.nouns.push(f[2].clone());
                    lex.anps.push((f[1].clone(), f[2].clone(), f[3].clone()));
                }
                other => panic!("fixture record {other}"),
            }
        }
        lex
    }

    pub fn is_adjective(&self, w: &str) -> bool {
        self.adjectives.iter().any(|(a, _)| a == w)
    }

    pub fn is_noun(&self, w: &str) -> bool {
        self.nouns.iter().any(|n| n == w)
    }

    /// Nouns reachable from `w` through synonym pairs, `w` included.
    pub fn class(&self, w: &str) -> Vec<String> {
        let mut class = vec![w.to_string()];
        let mut changed = true;
        while changed {
            changed = false;
            for (a, b) in &self.synonym_pairs {
                for (x, y) in [(a, b), (b, a)] {
                    if class.contains(x) && !class.contains(y) {
                        class.push(y.clone());
                        changed = true;
                    }
                }
            }
        }
        class.sort();
        class
    }
}

fn count_gram(tokens: &[String], gram: &[String]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| &tokens[i..i + gram.len()] == gram)
        .count()
}

fn distinct_grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            let g = tokens[i..i + n].to_vec();
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

/// Corpus BLEU-1..4 without smoothing; brevity penalty from the closest
/// reference length, shorter on ties.
pub fn oracle_bleu(items: &[(Vec<String>, Vec<Vec<String>>)]) -> [f64; 4] {
    let mut clipped = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, refs) in items {
        c += cand.len();
        let mut best = refs[0].len();
        for rf in refs {
            let (d, bd) = (rf.len().abs_diff(cand.len()), best.abs_diff(cand.len()));
            if d < bd || (d == bd && rf.len() < best) {
                best = rf.len();
            }
        }
        r += best;
        for n in 1..=4 {
            for g in distinct_grams(cand, n) {
                let in_cand = count_gram(cand, &g);
                let in_refs = refs.iter().map(|rf| count_gram(rf, &g)).max().unwrap();
                clipped[n - 1] += in_cand.min(in_refs);
            }
            if cand.len() >= n {
                totals[n - 1] += cand.len() + 1 - n;
            }
        }
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let mut out = [0.0; 4];
    for n in 1..=4 {
        let mut product = 1.0;
        for k in 0..n {
            product *= if totals[k] == 0 {
                0.0
            } else {
                clipped[k] as f64 / totals[k] as f64
            };
        }
        out[n - 1] = bp * product.powf(1.0 / n as f64);
    }
    out
}

fn is_subsequence(sub: &[&String], of: &[String]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|o| o == *s))
}

/// Longest common subsequence by trying every subset of `a`.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let n = mask.count_ones() as usize;
        if n <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subsequence(&sub, b) {
            best = n;
        }
    }
    best
}

pub fn oracle_rouge_l(items: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let mut sum = 0.0;
    for (cand, refs) in items {
        let mut p: f64 = 0.0;
        let mut r: f64 = 0.0;
        for rf in refs {
            let l = oracle_lcs(cand, rf) as f64;
            p = p.max(l / cand.len() as f64);
            r = r.max(l / rf.len() as f64);
        }
        if p > 0.0 && r > 0.0 {
            sum += (1.0 + 1.44) * p * r / (r + 1.44 * p);
        }
    }
    sum / items.len() as f64
}

/// CIDEr-D: tf-idf vectors with document frequency over images' reference
/// sets, candidate weights clipped to the reference, Gaussian length
/// penalty with sigma 6, times 10.
pub fn oracle_cider(items: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let n_images = items.len() as f64;
    let df = |g: &Vec<String>| -> f64 {
        let d = items
            .iter()
            .filter(|(_, refs)| refs.iter().any(|rf| count_gram(rf, g) > 0))
            .count();
        d.max(1) as f64
    };
    let vector = |tokens: &[String], n: usize| -> Vec<(Vec<String>, f64)> {
        distinct_grams(tokens, n)
            .into_iter()
            .map(|g| {
                let w = count_gram(tokens, &g) as f64 * (n_images.ln() - df(&g).ln());
                (g, w)
            })
            .collect()
    };
    let norm = |v: &[(Vec<String>, f64)]| v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();

    let mut total = 0.0;
    for (cand, refs) in items {
        let mut image = 0.0;
        for rf in refs {
            let delta = cand.len() as f64 - rf.len() as f64;
            let penalty = (-delta * delta / 72.0).exp();
            for n in 1..=4 {
                let vc = vector(cand, n);
                let vr = vector(rf, n);
                let mut dot = 0.0;
                for (g, wc) in &vc {
                    for (h, wr) in &vr {
                        if g == h {
                            dot += wc.min(*wr) * wr;
                        }
                    }
                }
                let (nc, nr) = (norm(&vc), norm(&vr));
                if nc > 0.0 && nr > 0.0 {
                    dot /= nc * nr;
                }
                image += dot * penalty;
            }
        }
        total += image / 4.0 / refs.len() as f64 * 10.0;
    }
    total / n_images
}

/// Base-2 entropy of lexicon adjective occurrences.
pub fn oracle_entropy(candidates: &[Vec<String>], lex: &OracleLexicon) -> f64 {
    let adjs: Vec<&String> = candidates.iter().flatten().filter(|w| lex.is_adjective(w)).collect();
    let mut seen: Vec<&String> = Vec::new();
    let mut h = 0.0;
    for a in &adjs {
        if seen.contains(a) {
            continue;
        }
        seen.push(a);
        let p = adjs.iter().filter(|b| *b == a).count() as f64 / adjs.len() as f64;
        h -= p * p.log2();
    }
    h
}

/// Mean per-image F1 between candidate and reference noun classes.
pub fn oracle_spice_n(items: &[(Vec<String>, Vec<Vec<String>>)], lex: &OracleLexicon) -> f64 {
    let classes = |tokens: Vec<&String>| -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for t in tokens {
            if lex.is_noun(t) {
                let c = lex.class(t);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    };
    let mut sum = 0.0;
    for (cand, refs) in items {
        let c = classes(cand.iter().collect());
        let r = classes(refs.iter().flatten().collect());
        let m = c.iter().filter(|x| r.contains(x)).count() as f64;
        if m > 0.0 {
            let (p, rec) = (m / c.len() as f64, m / r.len() as f64);
            sum += 2.0 * p * rec / (p + rec);
        }
    }
    sum / items.len() as f64
}

/// `(generated, matched)` adjacent ANPs of `polarity` in candidates, matched
/// against bigrams of the same image's references.
pub fn oracle_anps(items: &[(Vec<String>, Vec<Vec<String>>)], lex: &OracleLexicon, polarity: &str) -> (usize, usize) {
    let (mut generated, mut matched) = (0, 0);
    for (cand, refs) in items {
        for w in cand.windows(2) {
            if lex
                .anps
                .iter()
                .any(|(a, n, p)| *a == w[0] && *n == w[1] && p == polarity)
            {
                generated += 1;
                if refs.iter().any(|rf| count_gram(rf, w) > 0) {
                    matched += 1;
                }
            }
        }
    }
    (generated, matched)
}

pub fn fixture_pairs(sentiment: Option<&str>) -> Vec<(Vec<String>, Vec<Vec<String>>)> {
    metric_fixture()
        .into_iter()
        .filter(|i| sentiment.is_none_or(|s| i.sentiment == s))
        .map(|i| (i.candidate, i.references))
        .collect()
}

/// First-order Markov distribution over `<start>` = 0, `<end>` = 1 and two
/// words 2 and 3. `table[prev]` holds probabilities of tokens 1..=3; start is
/// never emitted.
pub struct MarkovScorer {
    pub table: [[f64; 3]; 4],
}

impl MarkovScorer {
    /// Greedy takes word 2 first and never recovers; the best caption is
    /// `3 <end>`.
    pub fn greedy_trap() -> Self {
        MarkovScorer {
            table: [[0.05, 0.5, 0.45], [1.0 / 3.0; 3], [0.3, 0.35, 0.35], [0.9, 0.05, 0.05]],
        }
    }

    pub fn log_prob(&self, prev: usize, next: usize) -> f64 {
        self.table[prev][next - 1].ln()
    }
}

impl sentcap::decoding::StepScorer for MarkovScorer {
    type State = ();

    fn initial_state(&mut self) -> sentcap::Result<()> {
        Ok(())
    }

    fn step(&mut self, _: &(), prev: usize) -> sentcap::Result<sentcap::decoding::ScoredStep<()>> {
        let log_probs = (0..4)
            .map(|t| {
                if t == MARKOV_START {
                    f64::NEG_INFINITY
                } else {
                    self.log_prob(prev, t)
                }
            })
            .collect();
        Ok(sentcap::decoding::ScoredStep {
            state: (),
            log_probs,
            attention: None,
        })
    }
}

pub const MARKOV_START: usize = 0;
pub const MARKOV_END: usize = 1;

/// Every caption of at most `max_len` tokens: those ending in `<end>` and
/// those cut off at `max_len`, with their log-probabilities.
pub fn enumerate_markov(m: &MarkovScorer, max_len: usize) -> Vec<(Vec<usize>, f64)> {
    fn walk(m: &MarkovScorer, prefix: &mut Vec<usize>, lp: f64, max_len: usize, out: &mut Vec<(Vec<usize>, f64)>) {
        let prev = prefix.last().copied().unwrap_or(MARKOV_START);
        for t in 1..4 {
            let next_lp = lp + m.log_prob(prev, t);
            prefix.push(t);
            if t == MARKOV_END || prefix.len() == max_len {
                out.push((prefix.clone(), next_lp));
            } else {
                walk(m, prefix, next_lp, max_len, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(m, &mut Vec::new(), 0.0, max_len, &mut out);
    out
}

/// Highest log-probability caption; ties go to the smaller token sequence.
pub fn exhaustive_best(m: &MarkovScorer, max_len: usize) -> (Vec<usize>, f64) {
    enumerate_markov(m, max_len)
        .into_iter()
        .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)))
        .unwrap()
}

pub fn markov_space() -> sentcap::decoding::SearchSpace {
    sentcap::decoding::SearchSpace {
        start: MARKOV_START,
        end: MARKOV_END,
        banned: vec![MARKOV_START],
    }
}
