//! Writes the synthetic corpus to a directory in the on-disk formats the
//! command-line tool reads, then loads it back.
//!
//! `cargo run --example synth_corpus -- out_dir`

use std::path::PathBuf;

use sentcap::corpus::{read_captions, synth_toy_corpus, write_captions, ClassCounts, FeatureStore, SynthSpec};

fn main() -> sentcap::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("sentcap-toy"), PathBuf::from);
    std::fs::create_dir_all(&dir).map_err(|e| sentcap::Error::io(&dir, e))?;

    let spec = SynthSpec::default();
    let corpus = synth_toy_corpus(&spec, 7)?;
    corpus.features.save(&dir.join("features.saft"))?;
    for (name, split) in [
        ("train", &corpus.train),
        ("validation", &corpus.validation),
        ("test", &corpus.test),
    ] {
        write_captions(&dir.join(format!("{name}.tsv")), split)?;
    }
    corpus.lexicon.save(&dir.join("lexicon.tsv"))?;

    let features = FeatureStore::load(&dir.join("features.saft"))?;
    println!(
        "{} images of {} x {} features in {}",
        features.len(),
        features.regions(),
        features.dim(),
        dir.display()
    );
    for name in ["train", "validation", "test"] {
        let captions = read_captions(&dir.join(format!("{name}.tsv")))?;
        let c = ClassCounts::of(&captions);
        println!("{name:<10} {:>4} captions {c:?}", c.total());
    }
    for c in corpus.train.iter().take(4) {
        println!("  {} {:?} {}", c.image_id, c.sentiment, c.text);
    }
    Ok(())
}
