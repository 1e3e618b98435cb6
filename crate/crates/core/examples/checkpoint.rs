//! Saves a briefly trained model, reloads it and confirms the captions are
//! unchanged.

use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::decoding::{decode, DecodeRequest};
use sentcap::experiment::{ModelSize, PreparedCorpus};
use sentcap::model::{checkpoint, Parameters, SentimentCategory};
use sentcap::training::{train, TrainConfig};

fn main() -> sentcap::Result<()> {
    let corpus = synth_toy_corpus(&SynthSpec::default(), 7)?;
    let prepared = PreparedCorpus::from_toy(&corpus)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs: 3,
        ..TrainConfig::default()
    };
    let params = Parameters::init(&ModelSize::default().config(&prepared), 0)?;
    let model = train(params, &prepared.data(), &cfg)?.best;

    let path = std::env::temp_dir().join("sentcap-example.ckpt");
    checkpoint::save(&model, &path)?;
    let bytes = std::fs::metadata(&path)
        .map_err(|e| sentcap::Error::io(&path, e))?
        .len();
    let loaded = checkpoint::load(&path)?;
    println!(
        "{}: {bytes} bytes, {} tensors, {} trainable scalars",
        path.display(),
        loaded.len(),
        loaded.trainable_scalars()
    );

    let id = &corpus.image_ids(&corpus.test)[0];
    let features = prepared.features.get(id)?;
    for s in [SentimentCategory::Positive, SentimentCategory::Negative] {
        let request = DecodeRequest::new(features, s);
        let before = decode(&request, &model)?;
        let after = decode(&request, &loaded)?;
        assert_eq!(before, after);
        println!("{id} {}: {}", s.label(), after.text(&prepared.vocab));
    }
    std::fs::remove_file(&path).map_err(|e| sentcap::Error::io(&path, e))?;
    Ok(())
}
