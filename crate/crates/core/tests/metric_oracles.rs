mod common;

use common::*;
use proptest::prelude::*;
use sentcap::cli::{evaluate_generated, read_generated};
use sentcap::corpus::read_captions;
use sentcap::metrics::{bleu_n, cider, count_anps, entropy_adjectives, rouge_l, spice_n, AnpLexicon, Polarity, Tokens};

const TOL: f64 = 1e-6;

fn lexicon() -> AnpLexicon {
    AnpLexicon::load(&fixture_path("lexicon.tsv")).unwrap()
}

fn split(pairs: Vec<(Vec<String>, Vec<Vec<String>>)>) -> (Vec<Tokens>, Vec<Vec<Tokens>>) {
    pairs.into_iter().unzip()
}

fn close(name: &str, got: f64, want: f64) {
    assert!((got - want).abs() < TOL, "{name}: got {got}, oracle {want}");
}

#[test]
fn fixture_has_twelve_captions_with_references() {
    let items = metric_fixture();
    assert_eq!(items.len(), 12);
    assert!(items.iter().all(|i| !i.references.is_empty()));
}

#[test]
fn all_metrics_match_oracles_on_each_subset() {
    let lex = lexicon();
    let olex = OracleLexicon::fixture();
    for subset in [None, Some("pos"), Some("neg")] {
        let pairs = fixture_pairs(subset);
        let ob = oracle_bleu(&pairs);
        let (c, r) = split(pairs.clone());
        let b = bleu_n(&c, &r, 4).unwrap();
        for n in 0..4 {
            close(&format!("BLEU-{} {subset:?}", n + 1), b[n], ob[n]);
        }
        assert!(ob[3] > 0.0, "fixture should exercise 4-grams");
        close("ROUGE-L", rouge_l(&c, &r).unwrap(), oracle_rouge_l(&pairs));
        close("CIDEr", cider(&c, &r).unwrap(), oracle_cider(&pairs));
        close("Entropy", entropy_adjectives(&c, &lex).bits, oracle_entropy(&c, &olex));
        close("SPICE_N", spice_n(&c, &r, &lex), oracle_spice_n(&pairs, &olex));
        for (p, label) in [(Polarity::Positive, "pos"), (Polarity::Negative, "neg")] {
            let got = count_anps(&c, &r, &lex, p, false);
            assert_eq!((got.generated, got.matched), oracle_anps(&pairs, &olex, label));
        }
    }
}

#[test]
fn worked_examples() {
    let t = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let v = rouge_l(&[t("a b c d")], &[vec![t("a c d")]]).unwrap();
    let (p, r, b2) = (0.75, 1.0, 1.44);
    assert_eq!(oracle_lcs(&t("a b c d"), &t("a c d")), 3);
    assert!((v - (1.0 + b2) * p * r / (r + b2 * p)).abs() < 1e-12);
    assert!((v - 0.879807).abs() < 1e-6);

    let lex = AnpLexicon::parse("ADJ\tcute\tpos\nADJ\thappy\tpos\nADJ\tnice\tpos\n", "mem").unwrap();
    let e = entropy_adjectives(&[t("a cute cute dog"), t("happy nice")], &lex);
    assert_eq!(e.bits, 1.5);
}

#[test]
fn evaluate_table_matches_oracles() {
    let generated = read_generated(&fixture_path("candidates.tsv")).unwrap();
    let refs = read_captions(&fixture_path("references.tsv")).unwrap();
    let rows = evaluate_generated(&generated, &refs, &lexicon(), None).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
        ["Pos", "Neg", "Avg"]
    );
    let mut pos_neg = Vec::new();
    for (row, s) in rows.iter().zip(["pos", "neg"]) {
        let pairs = fixture_pairs(Some(s));
        let ob = oracle_bleu(&pairs);
        let cells = [
            (row.bleu[0], ob[0]),
            (row.bleu[3], ob[3]),
            (row.rouge_l, oracle_rouge_l(&pairs)),
            (row.cider, oracle_cider(&pairs)),
        ];
        for (got, want) in cells {
            assert!(
                (got * 100.0 - want * 100.0).abs() < 0.01,
                "{}: {got} vs {want}",
                row.label
            );
        }
        pos_neg.push(row.cider);
    }
    assert!((rows[2].cider - (pos_neg[0] + pos_neg[1]) / 2.0).abs() < 1e-12);
}

#[test]
fn candidates_equal_to_references_score_one() {
    let t = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let c = vec![t("a cute dog on the green grass"), t("a dirty toilet in a small room")];
    let r: Vec<Vec<Tokens>> = c.iter().map(|x| vec![x.clone()]).collect();
    for v in bleu_n(&c, &r, 4).unwrap() {
        assert!((v - 1.0).abs() < 1e-12);
    }
    assert_eq!(rouge_l(&c, &r).unwrap(), 1.0);
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "a", "dog", "cat", "cute", "dirty", "on", "the", "grass", "road", "street",
    ])
    .prop_map(String::from)
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..9)
}

fn corpus() -> impl Strategy<Value = Vec<(Vec<String>, Vec<Vec<String>>)>> {
    prop::collection::vec((sentence(), prop::collection::vec(sentence(), 1..4)), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_corpora_match_oracles(pairs in corpus()) {
        let lex = lexicon();
        let olex = OracleLexicon::fixture();
        let (c, r) = split(pairs.clone());
        let b = bleu_n(&c, &r, 4).unwrap();
        let ob = oracle_bleu(&pairs);
        for n in 0..4 {
            prop_assert!((b[n] - ob[n]).abs() < TOL, "BLEU-{} {} vs {}", n + 1, b[n], ob[n]);
        }
        prop_assert!((rouge_l(&c, &r).unwrap() - oracle_rouge_l(&pairs)).abs() < TOL);
        prop_assert!((cider(&c, &r).unwrap() - oracle_cider(&pairs)).abs() < TOL);
        prop_assert!((spice_n(&c, &r, &lex) - oracle_spice_n(&pairs, &olex)).abs() < TOL);
        prop_assert!((entropy_adjectives(&c, &lex).bits - oracle_entropy(&c, &olex)).abs() < TOL);
    }

    #[test]
    fn metrics_ignore_corpus_order(pairs in corpus(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let lex = lexicon();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (c1, r1) = split(pairs);
        let (c2, r2) = split(shuffled);
        let b1 = bleu_n(&c1, &r1, 4).unwrap();
        let b2 = bleu_n(&c2, &r2, 4).unwrap();
        for n in 0..4 {
            prop_assert!((b1[n] - b2[n]).abs() < 1e-12);
        }
        prop_assert!((rouge_l(&c1, &r1).unwrap() - rouge_l(&c2, &r2).unwrap()).abs() < 1e-12);
        prop_assert!((cider(&c1, &r1).unwrap() - cider(&c2, &r2).unwrap()).abs() < 1e-9);
        prop_assert!((spice_n(&c1, &r1, &lex) - spice_n(&c2, &r2, &lex)).abs() < 1e-12);
    }

    #[test]
    fn spice_n_ignores_synonym_swaps(pairs in corpus(), picks in prop::collection::vec(any::<bool>(), 64)) {
        let lex = lexicon();
        let (c, r) = split(pairs);
        let mut flips = picks.into_iter().cycle();
        let swapped: Vec<Tokens> = c
            .iter()
            .map(|cand| {
                cand.iter()
                    .map(|w| match (w.as_str(), flips.next().unwrap()) {
                        ("street", true) => "road".to_string(),
                        ("road", true) => "street".to_string(),
                        _ => w.clone(),
                    })
                    .collect()
            })
            .collect();
        prop_assert_eq!(spice_n(&c, &r, &lex), spice_n(&swapped, &r, &lex));
    }

    #[test]
    fn bounded_scores(pairs in corpus()) {
        let lex = lexicon();
        let (c, r) = split(pairs);
        for v in bleu_n(&c, &r, 4).unwrap() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
        let rl = rouge_l(&c, &r).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&rl));
        let sp = spice_n(&c, &r, &lex);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&sp));
        let e = entropy_adjectives(&c, &lex);
        let distinct = {
            let mut a: Vec<&String> = c.iter().flatten().filter(|w| lex.is_adjective(w)).collect();
            a.sort();
            a.dedup();
            a.len()
        };
        prop_assert!(e.bits >= 0.0);
        prop_assert!(e.bits <= (distinct.max(1) as f64).log2() + 1e-12);
    }
}
