//! Epoch loop with seeded shuffling, validation and best-epoch selection.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{combined_loss, Example, LossBreakdown, LossWeights};
use crate::corpus::{check_features, make_batches, tokenize, CaptionRecord, FeatureStore, Vocabulary};
use crate::decoding::{greedy_decode, DecodeOptions, DecodeRequest};
use crate::error::{Error, Result};
use crate::metrics::{bleu_n, cider, rouge_l, Tokens};
use crate::model::{Parameters, SentimentCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMetric {
    Cider,
    Bleu4,
    RougeL,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm limit; 0 disables clipping.
    pub clip_norm: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lambda_att: f64,
    pub lambda_l2: f64,
    pub seed: u64,
    pub selection_metric: SelectionMetric,
    /// Decode length used for validation captions.
    pub validation_max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            batch_size: 180,
            epochs: 20,
            lambda_att: 1.0,
            lambda_l2: 1.0,
            seed: 0,
            selection_metric: SelectionMetric::Cider,
            validation_max_len: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("train: {m}")));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.lambda_att >= 0.0 && self.lambda_l2 >= 0.0) {
            return bad("lambda_att and lambda_l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("betas must be in [0, 1) and epsilon positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.clip_norm < 0.0 {
            return bad("clip_norm must be non-negative");
        }
        if self.validation_max_len < 2 {
            return bad("validation_max_len must be at least 2");
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_att: self.lambda_att,
            lambda_l2: self.lambda_l2,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            clip_norm: self.clip_norm,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub l1_xent: f64,
    pub l1_reg: f64,
    pub l2: f64,
    pub total: f64,
    pub lambda_att: f64,
    pub lambda_l2: f64,
    /// Selection metric on the validation split, if there is one.
    pub validation: Option<f64>,
}

impl EpochLog {
    pub fn breakdown(&self) -> LossBreakdown {
        LossBreakdown {
            l1_xent: self.l1_xent,
            l1_reg: self.l1_reg,
            l2: self.l2,
            total: self.total,
        }
    }
}

pub struct TrainData<'a> {
    pub features: &'a FeatureStore,
    pub train: &'a [CaptionRecord],
    pub validation: &'a [CaptionRecord],
    pub vocab: &'a Vocabulary,
}

pub struct TrainOutcome {
    pub best: Parameters,
    /// 1-based.
    pub best_epoch: usize,
    pub last: Parameters,
    pub log: Vec<EpochLog>,
}

/// Index of the largest score; the earliest wins ties.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Decodes every `(image, sentiment)` group of `records` greedily and
/// scores the captions against that group's references.
pub fn validation_score(
    params: &Parameters,
    features: &FeatureStore,
    vocab: &Vocabulary,
    records: &[CaptionRecord],
    metric: SelectionMetric,
    max_len: usize,
) -> Result<f64> {
    let mut order: Vec<(&str, SentimentCategory)> = Vec::new();
    let mut refs: HashMap<(&str, SentimentCategory), Vec<Tokens>> = HashMap::new();
    for r in records {
        let key = (r.image_id.as_str(), r.sentiment);
        refs.entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(tokenize(&r.raw_text));
    }
    let options = DecodeOptions {
        max_len,
        beam_width: 1,
        ..DecodeOptions::default()
    };
    let mut candidates = Vec::with_capacity(order.len());
    let mut references = Vec::with_capacity(order.len());
    for key in &order {
        let request = DecodeRequest {
            features: features.get(key.0)?,
            sentiment: key.1,
            options: options.clone(),
        };
        let caption = greedy_decode(&request, params)?;
        candidates.push(vocab.decode(&caption.tokens));
        references.push(refs.remove(key).expect("grouped above"));
    }
    match metric {
        SelectionMetric::Cider => cider(&candidates, &references),
        SelectionMetric::Bleu4 => Ok(bleu_n(&candidates, &references, 4)?[3]),
        SelectionMetric::RougeL => rouge_l(&candidates, &references),
    }
}

/// Trains from `params`, calling `on_epoch` after every epoch with the log
/// line and the current parameters.
pub fn train_with<F>(
    mut params: Parameters,
    data: &TrainData<'_>,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochLog, &Parameters) -> Result<()>,
{
    cfg.validate()?;
    params.config().validate()?;
    if data.train.is_empty() {
        return Err(Error::config("training corpus is empty"));
    }
    if data.vocab.len() != params.config().vocab_size {
        return Err(Error::config(format!(
            "vocabulary has {} words, model expects {}",
            data.vocab.len(),
            params.config().vocab_size
        )));
    }
    check_features(data.train, data.features)?;
    check_features(data.validation, data.features)?;

    let weights = cfg.weights();
    let adam = cfg.adam();
    let dropout = params.config().dropout_rate > 0.0;
    let mut state = AdamState::new();
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Parameters)> = None;

    for epoch in 1..=cfg.epochs {
        let shuffle_seed: u64 = master.gen();
        let mut sums = [0.0f64; 3];
        for batch in make_batches(data.train, cfg.batch_size, shuffle_seed) {
            let dropout_seed: u64 = master.gen();
            let examples = batch
                .indices
                .iter()
                .map(|&i| {
                    let r = &data.train[i];
                    Ok(Example {
                        features: data.features.get(&r.image_id)?,
                        tokens: &r.tokens,
                        sentiment: r.sentiment,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (loss, grads) = combined_loss(&params, &examples, weights, dropout.then_some(dropout_seed))?;
            let n = examples.len() as f64;
            sums[0] += loss.l1_xent * n;
            sums[1] += loss.l1_reg * n;
            sums[2] += loss.l2 * n;
            adam_step(&mut params, &grads, &mut state, &adam)?;
        }
        let n = data.train.len() as f64;
        let b = LossBreakdown::new(sums[0] / n, sums[1] / n, sums[2] / n, weights);
        let validation = if data.validation.is_empty() {
            None
        } else {
            Some(validation_score(
                &params,
                data.features,
                data.vocab,
                data.validation,
                cfg.selection_metric,
                cfg.validation_max_len,
            )?)
        };
        let entry = EpochLog {
            epoch,
            l1_xent: b.l1_xent,
            l1_reg: b.l1_reg,
            l2: b.l2,
            total: b.total,
            lambda_att: cfg.lambda_att,
            lambda_l2: cfg.lambda_l2,
            validation,
        };
        log::info!(
            "epoch {epoch}: total {:.4} (xent {:.4}, reg {:.4}, l2 {:.4}) validation {:?}",
            b.total,
            b.l1_xent,
            b.l1_reg,
            b.l2,
            validation
        );
        let score = validation.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
            best = Some((epoch, score, params.clone()));
        }
        on_epoch(&entry, &params)?;
        log.push(entry);
    }

    let (best_epoch, best) = match best {
        // Without validation every score ties, so the last epoch is kept.
        Some((e, s, p)) if s.is_finite() => (e, p),
        _ => (cfg.epochs, params.clone()),
    };
    Ok(TrainOutcome {
        best,
        best_epoch,
        last: params,
        log,
    })
}

pub fn train(params: Parameters, data: &TrainData<'_>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(params, data, cfg, |_, _| Ok(()))
}
