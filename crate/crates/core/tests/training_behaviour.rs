use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentcap::corpus::vocab::{END, NUM_SPECIAL, START};
use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::experiment::{ModelSize, PreparedCorpus};
use sentcap::model::{names, ModelConfig, Parameters, SentimentCategory, SpatialFeatures, Variant};
use sentcap::tensor::Tensor;
use sentcap::training::{combined_loss, example_loss, train, train_with, Example, LossWeights, TrainConfig};

fn toy() -> PreparedCorpus {
    PreparedCorpus::from_toy(&synth_toy_corpus(&SynthSpec::default(), 7).unwrap()).unwrap()
}

fn short(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

fn init(prepared: &PreparedCorpus, variant: Variant, seed: u64) -> Parameters {
    let size = ModelSize {
        variant,
        ..ModelSize::default()
    };
    Parameters::init(&size.config(prepared), seed).unwrap()
}

#[test]
fn loss_falls_on_the_toy_corpus() {
    let prepared = toy();
    let out = train(init(&prepared, Variant::Full, 1), &prepared.data(), &short(5, 1)).unwrap();
    let totals: Vec<f64> = out.log.iter().map(|e| e.total).collect();
    assert_eq!(totals.len(), 5);
    assert!(totals[4] < totals[0] * 0.8, "{totals:?}");
    assert!(out.log.iter().all(|e| e.validation.is_some()));
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let prepared = toy();
    let start = init(&prepared, Variant::Full, 2);
    let cfg = TrainConfig {
        learning_rate: 0.0,
        ..short(2, 2)
    };
    let out = train(start.clone(), &prepared.data(), &cfg).unwrap();
    assert_eq!(out.last, start);
    assert_eq!(out.best, start);
    // With nothing changing, every validation score ties and epoch 1 wins.
    assert_eq!(out.best_epoch, 1);
}

#[test]
fn same_seed_same_run() {
    let prepared = toy();
    let a = train(init(&prepared, Variant::MinusE2L2, 4), &prepared.data(), &short(3, 4)).unwrap();
    let b = train(init(&prepared, Variant::MinusE2L2, 4), &prepared.data(), &short(3, 4)).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.last, b.last);
    let c = train(init(&prepared, Variant::MinusE2L2, 4), &prepared.data(), &short(3, 5)).unwrap();
    assert_ne!(a.last, c.last);
}

#[test]
fn callback_sees_every_epoch() {
    let prepared = toy();
    let mut seen = Vec::new();
    let out = train_with(
        init(&prepared, Variant::Attend, 3),
        &prepared.data(),
        &short(3, 3),
        |log, params| {
            seen.push((log.epoch, params.clone()));
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(seen.iter().map(|s| s.0).collect::<Vec<_>>(), [1, 2, 3]);
    assert_eq!(seen[2].1, out.last);
    assert_eq!(out.log.iter().map(|l| l.l2).sum::<f64>(), 0.0);
}

#[test]
fn zero_sentiment_weight_matches_the_variant_without_it() {
    let prepared = toy();
    let cfg = TrainConfig {
        lambda_l2: 0.0,
        ..short(3, 6)
    };
    let full = train(init(&prepared, Variant::Full, 6), &prepared.data(), &cfg)
        .unwrap()
        .last;
    let minus = train(init(&prepared, Variant::MinusL2, 6), &prepared.data(), &cfg)
        .unwrap()
        .last;
    let mut shared = 0;
    for (name, p) in minus.iter() {
        let q = full
            .get(name)
            .unwrap_or_else(|| panic!("{name} missing from full model"));
        assert_eq!(p.value, q.value, "{name}");
        shared += 1;
    }
    assert_eq!(shared + 2, full.len());
}

#[test]
fn one_hot_tables_stay_frozen() {
    let prepared = toy();
    let start = init(&prepared, Variant::MinusE1E2L2, 8);
    let out = train(start.clone(), &prepared.data(), &short(2, 8)).unwrap();
    let mut frozen = 0;
    for (name, p) in start.iter().filter(|(_, p)| !p.trainable) {
        assert_eq!(p.value, Tensor::identity(3));
        assert_eq!(out.last.get(name).unwrap().value, p.value, "{name}");
        frozen += 1;
    }
    assert_eq!(frozen, 2);
}

struct Batch {
    features: Vec<SpatialFeatures>,
    captions: Vec<Vec<usize>>,
}

fn random_batch(cfg: &ModelConfig, n: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..n)
        .map(|_| {
            let d = (0..cfg.regions * cfg.feature_dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            SpatialFeatures::new("x", Tensor::matrix(cfg.regions, cfg.feature_dim, d).unwrap()).unwrap()
        })
        .collect();
    let captions = (0..n)
        .map(|_| {
            let len = rng.gen_range(1..6);
            let mut c = vec![START];
            c.extend((0..len).map(|_| rng.gen_range(NUM_SPECIAL..cfg.vocab_size)));
            c.push(END);
            c
        })
        .collect();
    Batch { features, captions }
}

fn examples(b: &Batch) -> Vec<Example<'_>> {
    (0..b.features.len())
        .map(|i| Example {
            features: &b.features[i],
            tokens: &b.captions[i],
            sentiment: SentimentCategory::ALL[i % 3],
        })
        .collect()
}

#[test]
fn batch_gradient_is_the_mean_of_example_gradients() {
    let w = LossWeights {
        lambda_att: 0.5,
        lambda_l2: 2.0,
    };
    for variant in Variant::ALL {
        let cfg = ModelConfig::tiny(variant);
        let params = Parameters::init(&cfg, 21).unwrap();
        let b = random_batch(&cfg, 5, 22);
        let ex = examples(&b);
        let (loss, grads) = combined_loss(&params, &ex, w, None).unwrap();
        let singles: Vec<_> = ex.iter().map(|e| example_loss(&params, e, w, None).unwrap()).collect();
        let mean_total = singles.iter().map(|s| s.breakdown.total).sum::<f64>() / 5.0;
        assert!((loss.total - mean_total).abs() < 1e-12);
        for (name, g) in &grads {
            for (c, &v) in g.data().iter().enumerate() {
                let want: f64 = singles
                    .iter()
                    .map(|s| s.grads.get(name).map_or(0.0, |t| t.data()[c]))
                    .sum::<f64>()
                    / 5.0;
                assert!((v - want).abs() < 1e-12, "{variant} {name}[{c}]");
            }
        }
        let trainable: Vec<&str> = params.trainable().map(|(n, _)| n).collect();
        assert_eq!(grads.len(), trainable.len(), "{variant}");
        if !variant.has_word_sentiment() {
            assert!(!grads.contains_key(names::WORD_SENTIMENT) && !grads.contains_key(names::WORD_HEAD_SENTIMENT));
        }
        if !variant.uses_sentiment_loss() {
            assert!(!grads.contains_key(names::SENTIMENT_HEAD_HIDDEN));
        }
    }
}

#[test]
fn batch_gradient_ignores_thread_count() {
    let cfg = ModelConfig {
        dropout_rate: 0.5,
        ..ModelConfig::tiny(Variant::Full)
    };
    let params = Parameters::init(&cfg, 31).unwrap();
    let b = random_batch(&cfg, 9, 32);
    let ex = examples(&b);
    let w = LossWeights::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| combined_loss(&params, &ex, w, Some(99)).unwrap())
    };
    let (l1, g1) = run(1);
    let (l3, g3) = run(3);
    assert_eq!(l1.total.to_bits(), l3.total.to_bits());
    assert_eq!(g1, g3);
    let (l_other, _) = combined_loss(&params, &ex, w, Some(100)).unwrap();
    assert_ne!(l1.total, l_other.total);
}
