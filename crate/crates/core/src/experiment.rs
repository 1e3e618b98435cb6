//! End-to-end runs on a corpus: encode, train, decode held-out images under
//! each sentiment, and score.

use serde::{Deserialize, Serialize};

use crate::corpus::{encode_captions, tokenize, CaptionRecord, FeatureStore, RawCaption, ToyCorpus, Vocabulary};
use crate::decoding::{decode, DecodeOptions, DecodeRequest};
use crate::error::Result;
use crate::metrics::{
    caption_polarity, evaluate, flip_rate, format_table, sentiment_consistency, AnpLexicon, MetricReport, Polarity,
    ReportRow, Tokens,
};
use crate::model::{ModelConfig, Parameters, SentimentCategory, Variant};
use crate::training::{train, TrainConfig, TrainData, TrainOutcome};

/// Captions encoded against a vocabulary built from the training split.
pub struct PreparedCorpus {
    pub vocab: Vocabulary,
    pub features: FeatureStore,
    pub train: Vec<CaptionRecord>,
    pub validation: Vec<CaptionRecord>,
    pub test: Vec<CaptionRecord>,
}

impl PreparedCorpus {
    pub fn new(
        features: FeatureStore,
        train: &[RawCaption],
        validation: &[RawCaption],
        test: &[RawCaption],
        min_count: usize,
        vocab_cap: usize,
        max_caption_len: usize,
    ) -> Result<Self> {
        let texts: Vec<&str> = train.iter().map(|c| c.text.as_str()).collect();
        let vocab = Vocabulary::build(&texts, min_count, vocab_cap)?;
        Ok(Self {
            train: encode_captions(train, &vocab, max_caption_len)?,
            validation: encode_captions(validation, &vocab, max_caption_len)?,
            test: encode_captions(test, &vocab, max_caption_len)?,
            vocab,
            features,
        })
    }

    pub fn from_toy(corpus: &ToyCorpus) -> Result<Self> {
        Self::new(
            corpus.features.clone(),
            &corpus.train,
            &corpus.validation,
            &corpus.test,
            1,
            usize::MAX,
            20,
        )
    }

    pub fn data(&self) -> TrainData<'_> {
        TrainData {
            features: &self.features,
            train: &self.train,
            validation: &self.validation,
            vocab: &self.vocab,
        }
    }
}

/// Variant and layer widths of a model whose grid shape and vocabulary size
/// come from the corpus. The defaults suit the synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSize {
    pub variant: Variant,
    pub hidden: usize,
    pub word_dim: usize,
    pub sentiment_dim: usize,
    pub attention_dim: usize,
    pub dropout_rate: f64,
}

impl Default for ModelSize {
    fn default() -> Self {
        Self {
            variant: Variant::Full,
            hidden: 16,
            word_dim: 10,
            sentiment_dim: 6,
            attention_dim: 8,
            dropout_rate: 0.5,
        }
    }
}

impl ModelSize {
    pub fn config(&self, prepared: &PreparedCorpus) -> ModelConfig {
        ModelConfig {
            regions: prepared.features.regions(),
            feature_dim: prepared.features.dim(),
            hidden: self.hidden,
            word_dim: self.word_dim,
            sentiment_dim: self.sentiment_dim,
            vocab_size: prepared.vocab.len(),
            variant: self.variant,
            dropout_rate: self.dropout_rate,
            attention_dim: self.attention_dim,
        }
    }
}

/// Held-out behaviour of a model under positive and negative requests.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentControl {
    /// Share of (image, requested polarity) captions whose adjectives all
    /// have the requested polarity.
    pub consistency: f64,
    /// Share of images whose positive and negative captions have opposite
    /// polarities.
    pub flip_rate: f64,
    pub positive: MetricReport,
    pub negative: MetricReport,
    /// `(image id, positive caption, negative caption)`.
    pub captions: Vec<(String, String, String)>,
}

impl SentimentControl {
    pub fn rows(&self, prefix: &str) -> Vec<ReportRow> {
        let pos = ReportRow::new(format!("{prefix}Pos"), &self.positive);
        let neg = ReportRow::new(format!("{prefix}Neg"), &self.negative);
        let avg = ReportRow::mean(format!("{prefix}Avg"), &[pos.clone(), neg.clone()]);
        vec![pos, neg, avg]
    }

    /// `(matched, generated)` ANP counts over both polarities.
    pub fn anp_counts(&self) -> (usize, usize) {
        (
            self.positive.anp_matched + self.negative.anp_matched,
            self.positive.anp_generated + self.negative.anp_generated,
        )
    }

    /// Matched over generated ANPs, pooled over both polarities.
    pub fn anp_precision(&self) -> f64 {
        let (matched, generated) = self.anp_counts();
        if generated == 0 {
            0.0
        } else {
            matched as f64 / generated as f64
        }
    }

    /// Adjective entropy of the positive and negative captions, averaged.
    pub fn entropy(&self) -> f64 {
        (self.positive.entropy + self.negative.entropy) / 2.0
    }
}

/// Decodes every image in `records` once per polarity and scores the
/// captions against that image's references of the same polarity.
pub fn sentiment_control(
    params: &Parameters,
    prepared: &PreparedCorpus,
    records: &[CaptionRecord],
    lexicon: &AnpLexicon,
    options: &DecodeOptions,
) -> Result<SentimentControl> {
    let mut ids: Vec<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    ids.dedup();
    let refs_for = |id: &str, s: SentimentCategory| -> Vec<Tokens> {
        records
            .iter()
            .filter(|r| r.image_id == id && r.sentiment == s)
            .map(|r| tokenize(&r.raw_text))
            .collect()
    };

    let mut items = Vec::new();
    let mut pairs = Vec::new();
    let mut captions = Vec::new();
    let mut by_polarity: [(Vec<Tokens>, Vec<Vec<Tokens>>); 2] = Default::default();
    for id in &ids {
        let features = prepared.features.get(id)?;
        let mut words = Vec::with_capacity(2);
        for (slot, polarity) in [Polarity::Positive, Polarity::Negative].into_iter().enumerate() {
            let request = DecodeRequest {
                features,
                sentiment: polarity.sentiment(),
                options: options.clone(),
            };
            let caption = decode(&request, params)?.words(&prepared.vocab);
            let refs = refs_for(id, polarity.sentiment());
            if !refs.is_empty() {
                by_polarity[slot].0.push(caption.clone());
                by_polarity[slot].1.push(refs);
            }
            items.push((caption.clone(), polarity));
            words.push(caption);
        }
        let neg = words.pop().expect("two captions");
        let pos = words.pop().expect("two captions");
        captions.push((id.to_string(), pos.join(" "), neg.join(" ")));
        pairs.push((pos, neg));
    }
    let [(pos_c, pos_r), (neg_c, neg_r)] = by_polarity;
    Ok(SentimentControl {
        consistency: sentiment_consistency(&items, lexicon),
        flip_rate: flip_rate(&pairs, lexicon),
        positive: evaluate(&pos_c, &pos_r, lexicon, Some(Polarity::Positive), false)?,
        negative: evaluate(&neg_c, &neg_r, lexicon, Some(Polarity::Negative), false)?,
        captions,
    })
}

/// Result of training and scoring one variant.
pub struct VariantRun {
    pub variant: Variant,
    pub outcome: TrainOutcome,
    /// Test-split behaviour of the validation-selected parameters.
    pub control: SentimentControl,
    /// Test-split behaviour of the final-epoch parameters.
    pub last_control: SentimentControl,
}

pub fn run_variant(
    prepared: &PreparedCorpus,
    lexicon: &AnpLexicon,
    size: &ModelSize,
    train_cfg: &TrainConfig,
    decode_opts: &DecodeOptions,
) -> Result<VariantRun> {
    let cfg = size.config(prepared);
    let variant = size.variant;
    let params = Parameters::init(&cfg, train_cfg.seed)?;
    let outcome = train(params, &prepared.data(), train_cfg)?;
    let control = sentiment_control(&outcome.best, prepared, &prepared.test, lexicon, decode_opts)?;
    let last_control = sentiment_control(&outcome.last, prepared, &prepared.test, lexicon, decode_opts)?;
    Ok(VariantRun {
        variant,
        outcome,
        control,
        last_control,
    })
}

/// Trains every variant with the same seed and returns them in table order.
pub fn ablate(
    prepared: &PreparedCorpus,
    lexicon: &AnpLexicon,
    size: &ModelSize,
    train_cfg: &TrainConfig,
    decode_opts: &DecodeOptions,
) -> Result<Vec<VariantRun>> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            let size = ModelSize {
                variant,
                ..size.clone()
            };
            run_variant(prepared, lexicon, &size, train_cfg, decode_opts)
        })
        .collect()
}

/// One averaged row per variant, plus sentiment consistency and ANP
/// precision columns.
pub fn ablation_table(runs: &[VariantRun], raw: bool) -> String {
    let rows: Vec<ReportRow> = runs
        .iter()
        .map(|r| ReportRow::mean(r.variant.name(), &r.control.rows("")[..2]))
        .collect();
    let table = format_table(&rows, raw);
    let mut out = String::new();
    for (line, run) in table.lines().zip(std::iter::once(None).chain(runs.iter().map(Some))) {
        out.push_str(line);
        match run {
            None => out.push_str(&format!(" {:>9} {:>9}", "Consist", "ANP-P")),
            Some(r) => {
                let pct = |v: f64| {
                    if raw {
                        format!("{v:.6}")
                    } else {
                        format!("{:.1}", v * 100.0)
                    }
                };
                out.push_str(&format!(
                    " {:>9} {:>9}",
                    pct(r.control.consistency),
                    pct(r.control.anp_precision())
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Polarity of a caption string, for printing.
pub fn describe_polarity(text: &str, lexicon: &AnpLexicon) -> &'static str {
    match caption_polarity(&tokenize(text), lexicon) {
        Some(Polarity::Positive) => "pos",
        Some(Polarity::Negative) => "neg",
        None => "-",
    }
}
