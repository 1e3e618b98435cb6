//! Prints the attention weights over image regions for each generated word.

use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::decoding::{greedy_decode, DecodeRequest};
use sentcap::experiment::{ModelSize, PreparedCorpus};
use sentcap::model::{Parameters, SentimentCategory};
use sentcap::training::{train, TrainConfig};

fn main() -> sentcap::Result<()> {
    let corpus = synth_toy_corpus(&SynthSpec::default(), 7)?;
    let prepared = PreparedCorpus::from_toy(&corpus)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs: 8,
        seed: 2,
        ..TrainConfig::default()
    };
    let params = Parameters::init(&ModelSize::default().config(&prepared), cfg.seed)?;
    let model = train(params, &prepared.data(), &cfg)?.last;

    for id in corpus.image_ids(&corpus.test).iter().take(3) {
        let request = DecodeRequest::new(prepared.features.get(id)?, SentimentCategory::Positive);
        let caption = greedy_decode(&request, &model)?;
        println!("{id}: {}", caption.text(&prepared.vocab));
        let words = caption.words(&prepared.vocab);
        for (word, alpha) in words
            .iter()
            .chain(std::iter::once(&"<end>".to_string()))
            .zip(&caption.attention)
        {
            let cells: Vec<String> = alpha.iter().map(|a| format!("{a:.2}")).collect();
            println!("  {word:<10} [{}]", cells.join(" "));
        }
    }
    Ok(())
}
