//! Finite-difference check of the combined loss on a small model of each
//! variant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentcap::corpus::vocab::{END, NUM_SPECIAL, START};
use sentcap::model::{ModelConfig, Parameters, SentimentCategory, SpatialFeatures, Variant};
use sentcap::tensor::Tensor;
use sentcap::training::{check_gradients, Example, LossWeights};

fn main() -> sentcap::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for variant in Variant::ALL {
        let cfg = ModelConfig::tiny(variant);
        let params = Parameters::init(&cfg, 1)?;
        let features: Vec<SpatialFeatures> = (0..2)
            .map(|_| {
                let d = (0..cfg.regions * cfg.feature_dim)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                SpatialFeatures::new("x", Tensor::matrix(cfg.regions, cfg.feature_dim, d)?)
            })
            .collect::<sentcap::Result<_>>()?;
        let captions: Vec<Vec<usize>> = (0..2)
            .map(|_| {
                let mut c = vec![START];
                c.extend((0..4).map(|_| rng.gen_range(NUM_SPECIAL..cfg.vocab_size)));
                c.push(END);
                c
            })
            .collect();
        let batch: Vec<Example<'_>> = (0..2)
            .map(|i| Example {
                features: &features[i],
                tokens: &captions[i],
                sentiment: SentimentCategory::ALL[i],
            })
            .collect();

        let report = check_gradients(&params, &batch, LossWeights::default(), 1e-5, 1e-3)?;
        let worst = report.worst().expect("at least one parameter");
        println!(
            "{:<13} {} scalars, worst {} ({:.2e}) {}",
            variant.name(),
            report.checked_scalars(),
            worst.name,
            worst.max_rel_error,
            if report.passed() { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
