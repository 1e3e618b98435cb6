//! Greedy and beam-search caption generation.
//!
//! Search is written against [`StepScorer`], so the same beam code drives the
//! trained model and any hand-built distribution.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::corpus::vocab::{Vocabulary, END, PAD, START, UNK};
use crate::error::{Error, Result};
use crate::model::{
    DecoderState, FeatureContext, Graph, Mode, Parameters, SentimentCategory, SentimentInputs, SpatialFeatures, Variant,
};

/// Next-token log-probabilities given a state and the previous token.
pub trait StepScorer {
    type State: Clone;

    fn initial_state(&mut self) -> Result<Self::State>;

    fn step(&mut self, state: &Self::State, prev: usize) -> Result<ScoredStep<Self::State>>;
}

pub struct ScoredStep<S> {
    pub state: S,
    /// Natural-log probabilities over the whole vocabulary.
    pub log_probs: Vec<f64>,
    /// Attention weights used at this step, if the scorer has any.
    pub attention: Option<Vec<f64>>,
}

/// Token ids that bound a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub start: usize,
    pub end: usize,
    /// Never emitted.
    pub banned: Vec<usize>,
}

impl SearchSpace {
    /// Captioning vocabulary: `<pad>` and `<start>` are never emitted,
    /// `<unk>` only when not suppressed.
    pub fn captions(suppress_unk: bool) -> Self {
        let mut banned = vec![PAD, START];
        if suppress_unk {
            banned.push(UNK);
        }
        Self {
            start: START,
            end: END,
            banned,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeOptions {
    /// Most tokens emitted, `<end>` included.
    pub max_len: usize,
    pub beam_width: usize,
    /// Exponent `p` in `log_prob / len^p` used to rank beam hypotheses.
    pub length_penalty: f64,
    pub suppress_unk: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            max_len: 20,
            beam_width: 3,
            length_penalty: 0.0,
            suppress_unk: false,
        }
    }
}

impl DecodeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_len < 2 {
            return Err(Error::config(format!(
                "max_len must be at least 2, got {}",
                self.max_len
            )));
        }
        if self.beam_width < 1 {
            return Err(Error::config("beam_width must be at least 1"));
        }
        if !self.length_penalty.is_finite() {
            return Err(Error::config("length_penalty must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DecodeRequest<'f> {
    pub features: &'f SpatialFeatures,
    pub sentiment: SentimentCategory,
    pub options: DecodeOptions,
}

impl<'f> DecodeRequest<'f> {
    pub fn new(features: &'f SpatialFeatures, sentiment: SentimentCategory) -> Self {
        Self {
            features,
            sentiment,
            options: DecodeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCaption {
    /// Emitted tokens, without `<start>`, ending in `<end>` unless the
    /// length limit was hit.
    pub tokens: Vec<usize>,
    /// Sum of the log-probabilities of `tokens`.
    pub log_prob: f64,
    /// Attention weights per emitted token.
    pub attention: Vec<Vec<f64>>,
}

impl DecodedCaption {
    /// Words of the caption, `<end>` excluded.
    pub fn words(&self, vocab: &Vocabulary) -> Vec<String> {
        vocab.decode(&self.tokens)
    }

    pub fn text(&self, vocab: &Vocabulary) -> String {
        self.words(vocab).join(" ")
    }

    pub fn finished(&self, end: usize) -> bool {
        self.tokens.last() == Some(&end)
    }

    pub fn normalized_score(&self, length_penalty: f64) -> f64 {
        normalized(self.log_prob, self.tokens.len(), length_penalty)
    }
}

fn normalized(log_prob: f64, len: usize, penalty: f64) -> f64 {
    if penalty == 0.0 {
        log_prob
    } else {
        log_prob / (len.max(1) as f64).powf(penalty)
    }
}

/// Argmax at every step; ties go to the lowest token id.
pub fn greedy<S: StepScorer>(scorer: &mut S, space: &SearchSpace, max_len: usize) -> Result<DecodedCaption> {
    let mut state = scorer.initial_state()?;
    let mut prev = space.start;
    let mut out = DecodedCaption {
        tokens: Vec::new(),
        log_prob: 0.0,
        attention: Vec::new(),
    };
    for _ in 0..max_len {
        let step = scorer.step(&state, prev)?;
        let mut best: Option<(usize, f64)> = None;
        for (tok, &lp) in step.log_probs.iter().enumerate() {
            if space.banned.contains(&tok) {
                continue;
            }
            if best.is_none_or(|(_, b)| lp > b) {
                best = Some((tok, lp));
            }
        }
        let (tok, lp) = best.ok_or_else(|| Error::config("every token is banned"))?;
        out.tokens.push(tok);
        out.log_prob += lp;
        out.attention.extend(step.attention);
        if tok == space.end {
            break;
        }
        state = step.state;
        prev = tok;
    }
    Ok(out)
}

struct Hyp<S> {
    caption: DecodedCaption,
    state: S,
}

fn by_score(penalty: f64) -> impl Fn(&DecodedCaption, &DecodedCaption) -> Ordering {
    move |a, b| {
        b.normalized_score(penalty)
            .total_cmp(&a.normalized_score(penalty))
            .then_with(|| a.tokens.cmp(&b.tokens))
    }
}

/// Beam search. At each step the `width` best extensions of the live
/// hypotheses survive; those ending in `end` retire. Returns up to `width`
/// captions sorted by normalized score, best first.
pub fn beam<S: StepScorer>(
    scorer: &mut S,
    space: &SearchSpace,
    max_len: usize,
    width: usize,
    length_penalty: f64,
) -> Result<Vec<DecodedCaption>> {
    if width == 0 {
        return Err(Error::config("beam_width must be at least 1"));
    }
    let mut live = vec![Hyp {
        caption: DecodedCaption {
            tokens: Vec::new(),
            log_prob: 0.0,
            attention: Vec::new(),
        },
        state: scorer.initial_state()?,
    }];
    let mut finished: Vec<DecodedCaption> = Vec::new();
    let mut exhausted = true;

    for _ in 0..max_len {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        let mut steps = Vec::with_capacity(live.len());
        for (hi, h) in live.iter().enumerate() {
            let prev = h.caption.tokens.last().copied().unwrap_or(space.start);
            let step = scorer.step(&h.state, prev)?;
            for (tok, &lp) in step.log_probs.iter().enumerate() {
                if !space.banned.contains(&tok) {
                    candidates.push((h.caption.log_prob + lp, hi, tok));
                }
            }
            steps.push(step);
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        candidates.truncate(width);

        let mut next = Vec::with_capacity(width);
        for (score, hi, tok) in candidates {
            let parent = &live[hi];
            let step = &steps[hi];
            let mut caption = parent.caption.clone();
            caption.tokens.push(tok);
            caption.log_prob = score;
            caption.attention.extend(step.attention.clone());
            if tok == space.end {
                finished.push(caption);
            } else {
                next.push(Hyp {
                    caption,
                    state: step.state.clone(),
                });
            }
        }
        live = next;
        if live.is_empty() {
            exhausted = false;
            break;
        }
        // With no length normalization, scores only fall as hypotheses grow.
        if length_penalty == 0.0 && finished.len() >= width {
            finished.sort_by(by_score(0.0));
            let floor = finished[width - 1].log_prob;
            let best_live = live
                .iter()
                .map(|h| h.caption.log_prob)
                .fold(f64::NEG_INFINITY, f64::max);
            if floor > best_live {
                exhausted = false;
                break;
            }
        }
    }
    if exhausted {
        finished.extend(live.into_iter().map(|h| h.caption));
    }
    finished.sort_by(by_score(length_penalty));
    finished.truncate(width);
    Ok(finished)
}

/// Scores tokens with a model for one image and sentiment. One tape is kept
/// for the whole search; states are handles into it.
pub struct ModelScorer<'p> {
    params: &'p Parameters,
    tape: Tape,
    bound: Vec<Option<Var>>,
    ctx: FeatureContext,
    inputs: SentimentInputs,
}

impl<'p> ModelScorer<'p> {
    pub fn new(params: &'p Parameters, features: &SpatialFeatures, sentiment: SentimentCategory) -> Result<Self> {
        let mut tape = Tape::new();
        let mut g = Graph::new(&mut tape, params);
        let ctx = g.features(features)?;
        let inputs = g.sentiment_inputs(sentiment)?;
        let bound = g.into_bound();
        Ok(Self {
            params,
            tape,
            bound,
            ctx,
            inputs,
        })
    }

    fn graph(&mut self) -> Graph<'_> {
        let bound = std::mem::take(&mut self.bound);
        Graph::resume(&mut self.tape, self.params, bound)
    }
}

impl StepScorer for ModelScorer<'_> {
    type State = DecoderState;

    fn initial_state(&mut self) -> Result<DecoderState> {
        let ctx = self.ctx;
        let mut g = self.graph();
        let state = g.init_state(&ctx);
        self.bound = g.into_bound();
        state
    }

    fn step(&mut self, state: &DecoderState, prev: usize) -> Result<ScoredStep<DecoderState>> {
        let (ctx, inputs) = (self.ctx, self.inputs);
        let mut g = self.graph();
        let result = g
            .step(&ctx, state, prev, &inputs, &mut Mode::Eval)
            .and_then(|(next, logits)| {
                let lp = g.tape.log_softmax(logits, 1)?;
                Ok((next, lp))
            });
        self.bound = g.into_bound();
        let (next, lp) = result?;
        Ok(ScoredStep {
            log_probs: self.tape.value(lp).data().to_vec(),
            attention: Some(self.tape.value(next.alpha).data().to_vec()),
            state: next,
        })
    }
}

pub fn greedy_decode(request: &DecodeRequest<'_>, params: &Parameters) -> Result<DecodedCaption> {
    request.options.validate()?;
    let mut scorer = ModelScorer::new(params, request.features, request.sentiment)?;
    greedy(
        &mut scorer,
        &SearchSpace::captions(request.options.suppress_unk),
        request.options.max_len,
    )
}

pub fn beam_decode(request: &DecodeRequest<'_>, params: &Parameters) -> Result<Vec<DecodedCaption>> {
    let o = &request.options;
    o.validate()?;
    let mut scorer = ModelScorer::new(params, request.features, request.sentiment)?;
    beam(
        &mut scorer,
        &SearchSpace::captions(o.suppress_unk),
        o.max_len,
        o.beam_width,
        o.length_penalty,
    )
}

/// Greedy when `beam_width` is 1, otherwise the best beam hypothesis.
pub fn decode(request: &DecodeRequest<'_>, params: &Parameters) -> Result<DecodedCaption> {
    if request.options.beam_width == 1 {
        greedy_decode(request, params)
    } else {
        beam_decode(request, params)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::data("beam search returned no hypotheses"))
    }
}

/// One caption per sentiment category for the same features.
pub fn generate_contrastive(
    features: &SpatialFeatures,
    params: &Parameters,
    options: &DecodeOptions,
) -> Result<BTreeMap<SentimentCategory, DecodedCaption>> {
    let variant = params.config().variant;
    if variant == Variant::Attend {
        return Err(Error::config(format!(
            "variant {variant} has no sentiment input to switch"
        )));
    }
    SentimentCategory::ALL
        .iter()
        .map(|&s| {
            let request = DecodeRequest {
                features,
                sentiment: s,
                options: options.clone(),
            };
            Ok((s, decode(&request, params)?))
        })
        .collect()
}
