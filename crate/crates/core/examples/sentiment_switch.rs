//! Captions the same held-out images under each sentiment with one trained
//! model, showing which adjectives the request changes.

use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::decoding::{generate_contrastive, DecodeOptions};
use sentcap::experiment::{describe_polarity, ModelSize, PreparedCorpus};
use sentcap::model::Parameters;
use sentcap::training::{train, TrainConfig};

fn main() -> sentcap::Result<()> {
    let corpus = synth_toy_corpus(&SynthSpec::default(), 7)?;
    let prepared = PreparedCorpus::from_toy(&corpus)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs: 12,
        seed: 3,
        ..TrainConfig::default()
    };
    let params = Parameters::init(&ModelSize::default().config(&prepared), cfg.seed)?;
    let model = train(params, &prepared.data(), &cfg)?.last;

    let options = DecodeOptions::default();
    for id in corpus.image_ids(&corpus.test).iter().take(6) {
        let captions = generate_contrastive(prepared.features.get(id)?, &model, &options)?;
        for (sentiment, caption) in &captions {
            let text = caption.text(&prepared.vocab);
            println!(
                "{id} {:<8} {:<4} {text:<24} log p {:.3}",
                sentiment.label(),
                describe_polarity(&text, &corpus.lexicon),
                caption.log_prob
            );
        }
    }
    Ok(())
}
