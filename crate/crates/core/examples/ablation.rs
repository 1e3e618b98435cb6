//! Trains all five variants on the synthetic corpus with one seed and
//! prints the comparison table.

use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::decoding::DecodeOptions;
use sentcap::experiment::{ablate, ablation_table, ModelSize, PreparedCorpus};
use sentcap::training::TrainConfig;

fn main() -> sentcap::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(Ok(1), |s| s.parse())
        .expect("seed must be an integer");
    let corpus = synth_toy_corpus(&SynthSpec::default(), 7)?;
    let prepared = PreparedCorpus::from_toy(&corpus)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs: 15,
        seed,
        ..TrainConfig::default()
    };
    let greedy = DecodeOptions {
        beam_width: 1,
        ..DecodeOptions::default()
    };
    let runs = ablate(&prepared, &corpus.lexicon, &ModelSize::default(), &cfg, &greedy)?;
    print!("{}", ablation_table(&runs, false));
    for r in &runs {
        let (matched, generated) = r.last_control.anp_counts();
        println!(
            "{:<13} best epoch {:>2}; final epoch: {matched}/{generated} ANPs matched, entropy {:.3}",
            r.variant.name(),
            r.outcome.best_epoch,
            r.last_control.entropy()
        );
    }
    Ok(())
}
