//! Trains one variant on the synthetic corpus and reports held-out
//! sentiment control.
//!
//! `cargo run --release --example train_toy -- [full|minus-l2|minus-e2l2|minus-e1e2l2|attend]`

use std::time::Instant;

use sentcap::corpus::{synth_toy_corpus, SynthSpec};
use sentcap::decoding::DecodeOptions;
use sentcap::experiment::{run_variant, ModelSize, PreparedCorpus};
use sentcap::model::Variant;
use sentcap::training::TrainConfig;

fn main() -> sentcap::Result<()> {
    let variant: Variant = std::env::args().nth(1).as_deref().unwrap_or("full").parse()?;
    let corpus = synth_toy_corpus(&SynthSpec::default(), 7)?;
    let prepared = PreparedCorpus::from_toy(&corpus)?;
    let train_cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 20,
        epochs: 15,
        seed: 7,
        ..TrainConfig::default()
    };
    let size = ModelSize {
        variant,
        ..ModelSize::default()
    };
    let greedy = DecodeOptions {
        beam_width: 1,
        ..DecodeOptions::default()
    };

    let start = Instant::now();
    let run = run_variant(&prepared, &corpus.lexicon, &size, &train_cfg, &greedy)?;
    for e in &run.outcome.log {
        println!(
            "epoch {:>2} total {:.4} xent {:.4} reg {:.4} l2 {:.4} validation {:.4}",
            e.epoch,
            e.total,
            e.l1_xent,
            e.l1_reg,
            e.l2,
            e.validation.unwrap_or(f64::NAN)
        );
    }
    println!("best epoch {}", run.outcome.best_epoch);
    for (id, pos, neg) in run.control.captions.iter().take(5) {
        println!("{id}: + {pos} | - {neg}");
    }
    println!(
        "consistency {:.3} flip {:.3} anp precision {:.3} entropy {:.3} in {:.1?}",
        run.control.consistency,
        run.control.flip_rate,
        run.control.anp_precision(),
        run.control.entropy(),
        start.elapsed()
    );
    Ok(())
}
