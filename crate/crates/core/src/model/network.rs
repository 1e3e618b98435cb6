//! Forward computation: soft attention, the sentiment-conditioned LSTM step,
//! and the word and sentiment heads.

use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, SentimentCategory};
use super::params::{lstm_name, names, Family, Gate, Parameters};
use crate::autodiff::{Tape, Var};
use crate::corpus::vocab::{END, START};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One image's `K x D` attention grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFeatures {
    pub image_id: String,
    pub grid: Tensor,
}

impl SpatialFeatures {
    pub fn new(image_id: impl Into<String>, grid: Tensor) -> Result<Self> {
        grid.dims2("features")?;
        if !grid.is_finite() {
            return Err(Error::data("feature grid contains non-finite values"));
        }
        Ok(Self {
            image_id: image_id.into(),
            grid,
        })
    }

    pub fn regions(&self) -> usize {
        self.grid.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.grid.shape()[1]
    }
}

/// Whether dropout is active. Training mode carries the RNG that draws masks.
pub enum Mode<'r> {
    Eval,
    Train(&'r mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Recurrent state between decoding steps.
#[derive(Debug, Clone, Copy)]
pub struct DecoderState {
    pub h: Var,
    pub c: Var,
    /// Attention weights used to produce this state, `1 x K`.
    pub alpha: Var,
}

/// Output of one attention read.
#[derive(Debug, Clone, Copy)]
pub struct Attended {
    /// Weighted feature vector, `1 x D`.
    pub context: Var,
    /// Region weights, `1 x K`, on the simplex.
    pub alpha: Var,
}

/// Per-image tensors reused at every step.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext {
    pub grid: Var,
    projected: Var,
}

/// Sentiment vectors for one caption. Looked up once and reused at every step.
#[derive(Debug, Clone, Copy, Default)]
pub struct SentimentInputs {
    pub gate: Option<Var>,
    pub word: Option<Var>,
}

#[derive(Debug, Clone, Copy)]
pub struct StepTrace {
    pub alpha: Var,
    pub word_logits: Var,
    pub sentiment_logits: Option<Var>,
    pub hidden: Var,
}

/// Everything a teacher-forced pass produced, one entry per predicted token.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub steps: Vec<StepTrace>,
    /// The gold tokens the steps predict (caption without `<start>`).
    pub targets: Vec<usize>,
}

/// Binds a parameter set to a tape. Parameters become tape leaves on first
/// use, non-trainable ones become constants.
pub struct Graph<'a> {
    pub tape: &'a mut Tape,
    params: &'a Parameters,
    bound: Vec<Option<Var>>,
}

impl<'a> Graph<'a> {
    pub fn new(tape: &'a mut Tape, params: &'a Parameters) -> Self {
        Self {
            tape,
            bound: vec![None; params.len()],
            params,
        }
    }

    /// Uses pre-made tape nodes for the named parameters instead of their
    /// stored values. Used by gradient checks that perturb leaves directly.
    pub fn with_bindings(tape: &'a mut Tape, params: &'a Parameters, bindings: &[(&str, Var)]) -> Result<Self> {
        let mut g = Self::new(tape, params);
        for (name, var) in bindings {
            let i = params
                .index_of(name)
                .ok_or_else(|| Error::config(format!("no parameter named `{name}`")))?;
            g.bound[i] = Some(*var);
        }
        Ok(g)
    }

    /// Continues on a tape that already holds this parameter set's nodes,
    /// as returned by [`Graph::into_bound`].
    pub fn resume(tape: &'a mut Tape, params: &'a Parameters, bound: Vec<Option<Var>>) -> Self {
        assert_eq!(bound.len(), params.len(), "bindings from a different parameter set");
        Self { tape, params, bound }
    }

    pub fn into_bound(self) -> Vec<Option<Var>> {
        self.bound
    }

    pub fn config(&self) -> &ModelConfig {
        self.params.config()
    }

    pub fn params(&self) -> &Parameters {
        self.params
    }

    /// Tape node of a parameter, creating it on first use.
    pub fn param(&mut self, name: &str) -> Result<Var> {
        let i = self.params.index_of(name).ok_or_else(|| {
            Error::config(format!(
                "variant {} has no parameter `{name}`",
                self.params.config().variant
            ))
        })?;
        if let Some(v) = self.bound[i] {
            return Ok(v);
        }
        let (_, p) = self.params.get_index(i).expect("index in range");
        let v = if p.trainable {
            self.tape.leaf(p.value.clone())?
        } else {
            self.tape.constant(p.value.clone())?
        };
        self.bound[i] = Some(v);
        Ok(v)
    }

    /// Parameter nodes that were actually used, in parameter order.
    pub fn bound_params(&self) -> impl Iterator<Item = (&str, Var)> + '_ {
        self.bound
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (self.params.get_index(i).expect("index in range").0, v)))
    }

    fn affine(&mut self, x: Var, weight: &str) -> Result<Var> {
        let w = self.param(weight)?;
        Ok(self.tape.matmul(x, w)?)
    }

    /// Puts an image's grid on the tape and projects it for the scorer.
    pub fn features(&mut self, features: &SpatialFeatures) -> Result<FeatureContext> {
        let cfg = self.config();
        if features.grid.shape() != [cfg.regions, cfg.feature_dim] {
            return Err(Error::config(format!(
                "features for `{}` have shape {:?}, model expects [{}, {}]",
                features.image_id,
                features.grid.shape(),
                cfg.regions,
                cfg.feature_dim
            )));
        }
        let grid = self.tape.constant(features.grid.clone())?;
        let projected = self.affine(grid, names::ATTENTION_FEATURES)?;
        Ok(FeatureContext { grid, projected })
    }

    /// `h0 = tanh(mean_k(a_k) W + b)`, `c0` likewise with its own weights,
    /// and uniform attention.
    pub fn init_state(&mut self, ctx: &FeatureContext) -> Result<DecoderState> {
        let mean = self.tape.mean_axis(ctx.grid, 0)?;
        let h = self.dense_tanh(mean, names::INIT_H_WEIGHT, names::INIT_H_BIAS)?;
        let c = self.dense_tanh(mean, names::INIT_C_WEIGHT, names::INIT_C_BIAS)?;
        let k = self.config().regions;
        let alpha = self.tape.constant(Tensor::row(vec![1.0 / k as f64; k]))?;
        Ok(DecoderState { h, c, alpha })
    }

    fn dense_tanh(&mut self, x: Var, weight: &str, bias: &str) -> Result<Var> {
        let xw = self.affine(x, weight)?;
        let b = self.param(bias)?;
        let pre = self.tape.add(xw, b)?;
        Ok(self.tape.tanh(pre)?)
    }

    /// Additive soft attention:
    /// `e_k = v . tanh(a_k U_a + h U_h + b)`, `alpha = softmax(e)`,
    /// `context = sum_k alpha_k a_k`.
    pub fn attend(&mut self, ctx: &FeatureContext, h_prev: Var) -> Result<Attended> {
        let hp = self.affine(h_prev, names::ATTENTION_HIDDEN)?;
        let b = self.param(names::ATTENTION_BIAS)?;
        let hp = self.tape.add(hp, b)?;
        let pre = self.tape.add_row(ctx.projected, hp)?;
        let act = self.tape.tanh(pre)?;
        let scores = self.affine(act, names::ATTENTION_SCORE)?;
        let scores = self.tape.transpose(scores)?;
        let alpha = self.tape.softmax(scores, 1)?;
        let context = self.tape.matmul(alpha, ctx.grid)?;
        Ok(Attended { context, alpha })
    }

    /// Looks up the sentiment vectors the variant uses (no dropout).
    pub fn sentiment_inputs(&mut self, sentiment: SentimentCategory) -> Result<SentimentInputs> {
        let variant = self.config().variant;
        let mut out = SentimentInputs::default();
        if variant.has_gate_sentiment() {
            let table = self.param(names::GATE_SENTIMENT)?;
            out.gate = Some(self.tape.embedding_lookup(table, sentiment.index())?);
        }
        if variant.has_word_sentiment() {
            let table = self.param(names::WORD_SENTIMENT)?;
            out.word = Some(self.tape.embedding_lookup(table, sentiment.index())?);
        }
        Ok(out)
    }

    pub fn embed_word(&mut self, token: usize) -> Result<Var> {
        let table = self.param(names::WORD_EMBED)?;
        Ok(self.tape.embedding_lookup(table, token)?)
    }

    /// One LSTM step. Every gate sees
    /// `w_prev W + h_prev H + context A + e1 B + b`; `i, o, f` are sigmoid,
    /// `g` is tanh, `c = f*c_prev + i*g`, `h = o*tanh(c)`.
    pub fn lstm_step(
        &mut self,
        state: &DecoderState,
        w_prev: Var,
        attended: &Attended,
        e1: Option<Var>,
    ) -> Result<DecoderState> {
        let variant = self.config().variant;
        match (variant.has_gate_sentiment(), e1.is_some()) {
            (true, false) => {
                return Err(Error::config(format!(
                    "variant {variant} needs a gate sentiment vector"
                )))
            }
            (false, true) => {
                return Err(Error::config(format!(
                    "variant {variant} takes no gate sentiment vector"
                )))
            }
            _ => {}
        }

        let mut gates = [state.h; 4];
        for (slot, gate) in gates.iter_mut().zip(Gate::ALL) {
            let mut pre = self.affine(w_prev, lstm_name(gate, Family::Word))?;
            let term = self.affine(state.h, lstm_name(gate, Family::Hidden))?;
            pre = self.tape.add(pre, term)?;
            let term = self.affine(attended.context, lstm_name(gate, Family::Context))?;
            pre = self.tape.add(pre, term)?;
            if let Some(e1) = e1 {
                let term = self.affine(e1, lstm_name(gate, Family::Sentiment))?;
                pre = self.tape.add(pre, term)?;
            }
            let b = self.param(lstm_name(gate, Family::Bias))?;
            pre = self.tape.add(pre, b)?;
            *slot = match gate {
                Gate::Modulation => self.tape.tanh(pre)?,
                _ => self.tape.sigmoid(pre)?,
            };
        }
        let [i, g, o, f] = gates;
        let keep = self.tape.mul(f, state.c)?;
        let write = self.tape.mul(i, g)?;
        let c = self.tape.add(keep, write)?;
        let tc = self.tape.tanh(c)?;
        let h = self.tape.mul(o, tc)?;
        Ok(DecoderState {
            h,
            c,
            alpha: attended.alpha,
        })
    }

    /// `h W_h + context W_a + e2 W_e + b`, the `e2` term only when the
    /// variant has it.
    pub fn word_logits(&mut self, h: Var, context: Var, e2: Option<Var>) -> Result<Var> {
        let variant = self.config().variant;
        if variant.has_word_sentiment() != e2.is_some() {
            return Err(Error::config(format!(
                "variant {variant} {} a word sentiment vector",
                if e2.is_some() { "takes no" } else { "needs" }
            )));
        }
        let mut logits = self.affine(h, names::WORD_HEAD_HIDDEN)?;
        let term = self.affine(context, names::WORD_HEAD_CONTEXT)?;
        logits = self.tape.add(logits, term)?;
        if let Some(e2) = e2 {
            let term = self.affine(e2, names::WORD_HEAD_SENTIMENT)?;
            logits = self.tape.add(logits, term)?;
        }
        let b = self.param(names::WORD_HEAD_BIAS)?;
        Ok(self.tape.add(logits, b)?)
    }

    /// `h W_s + b_s` over (positive, neutral, negative).
    pub fn sentiment_logits(&mut self, h: Var) -> Result<Var> {
        let variant = self.config().variant;
        if !variant.uses_sentiment_loss() {
            return Err(Error::config(format!("variant {variant} has no sentiment head")));
        }
        let z = self.affine(h, names::SENTIMENT_HEAD_HIDDEN)?;
        let b = self.param(names::SENTIMENT_HEAD_BIAS)?;
        Ok(self.tape.add(z, b)?)
    }

    fn maybe_dropout(&mut self, x: Option<Var>, mode: &mut Mode<'_>) -> Result<Option<Var>> {
        let rate = self.config().dropout_rate;
        match (x, mode) {
            (Some(x), Mode::Train(rng)) => Ok(Some(self.tape.dropout(x, rate, Some(&mut **rng))?)),
            (x, _) => Ok(x),
        }
    }

    /// Runs one decoding step: attend with the previous hidden state, update
    /// the LSTM from `prev_token`, and score the next word.
    pub fn step(
        &mut self,
        ctx: &FeatureContext,
        state: &DecoderState,
        prev_token: usize,
        sentiment: &SentimentInputs,
        mode: &mut Mode<'_>,
    ) -> Result<(DecoderState, Var)> {
        let attended = self.attend(ctx, state.h)?;
        let w_prev = self.embed_word(prev_token)?;
        let e1 = self.maybe_dropout(sentiment.gate, mode)?;
        let next = self.lstm_step(state, w_prev, &attended, e1)?;
        let e2 = self.maybe_dropout(sentiment.word, mode)?;
        let logits = self.word_logits(next.h, attended.context, e2)?;
        Ok((next, logits))
    }

    /// Teacher-forced pass over a gold caption `<start> ... <end>`.
    /// Produces `T - 1` steps; step `t` predicts `caption[t]`.
    pub fn forward_teacher_forced(
        &mut self,
        features: &SpatialFeatures,
        caption: &[usize],
        sentiment: SentimentCategory,
        mode: &mut Mode<'_>,
    ) -> Result<ForwardTrace> {
        validate_caption(caption, self.config().vocab_size)?;
        let ctx = self.features(features)?;
        let inputs = self.sentiment_inputs(sentiment)?;
        let mut state = self.init_state(&ctx)?;
        let full = self.config().variant.uses_sentiment_loss();
        let mut steps = Vec::with_capacity(caption.len() - 1);
        for &prev in &caption[..caption.len() - 1] {
            let (next, word_logits) = self.step(&ctx, &state, prev, &inputs, mode)?;
            let sentiment_logits = if full {
                Some(self.sentiment_logits(next.h)?)
            } else {
                None
            };
            steps.push(StepTrace {
                alpha: next.alpha,
                word_logits,
                sentiment_logits,
                hidden: next.h,
            });
            state = next;
        }
        Ok(ForwardTrace {
            steps,
            targets: caption[1..].to_vec(),
        })
    }
}

pub fn validate_caption(caption: &[usize], vocab_size: usize) -> Result<()> {
    if caption.len() < 2 {
        return Err(Error::data("caption needs at least <start> and <end>"));
    }
    if caption[0] != START || caption[caption.len() - 1] != END {
        return Err(Error::data("caption must begin with <start> and end with <end>"));
    }
    if let Some(bad) = caption.iter().find(|&&t| t >= vocab_size) {
        return Err(Error::data(format!(
            "token id {bad} outside vocabulary of size {vocab_size}"
        )));
    }
    Ok(())
}
