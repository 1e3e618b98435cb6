//! Features, captions, vocabulary, batching and the synthetic corpus.

pub mod batching;
pub mod captions;
pub mod features;
pub mod synth;
pub mod vocab;

pub use batching::{make_batches, Batch};
pub use captions::{
    check_features, encode_captions, format_captions, load_captions, merge_datasets, parse_captions, read_captions,
    write_captions, CaptionRecord, ClassCounts, MergedCorpus, RawCaption,
};
pub use features::FeatureStore;
pub use synth::{synth_toy_corpus, SynthSpec, ToyCorpus};
pub use vocab::{tokenize, Vocabulary};

pub use crate::metrics::lexicon::AnpLexicon;

pub fn load_features(path: &std::path::Path) -> crate::Result<FeatureStore> {
    FeatureStore::load(path)
}

pub fn load_lexicon(path: &std::path::Path) -> crate::Result<AnpLexicon> {
    AnpLexicon::load(path)
}

pub fn build_vocab<S: AsRef<str>>(texts: &[S], min_count: usize, cap: usize) -> crate::Result<Vocabulary> {
    Vocabulary::build(texts, min_count, cap)
}
