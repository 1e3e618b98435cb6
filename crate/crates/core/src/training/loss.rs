//! The caption loss (cross-entropy plus attention regularizer), the
//! sentiment loss, and their weighted combination.

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::model::{ForwardTrace, Graph, Mode, Parameters, SentimentCategory, SpatialFeatures};
use crate::tensor::Tensor;

/// Gradients by parameter name, trainable parameters only.
pub type GradMap = IndexMap<String, Tensor>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_att: f64,
    pub lambda_l2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_att: 1.0,
            lambda_l2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1_xent: f64,
    pub l1_reg: f64,
    pub l2: f64,
    /// Always `l1_xent + lambda_att * l1_reg + lambda_l2 * l2`.
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l1_xent: f64, l1_reg: f64, l2: f64, w: LossWeights) -> Self {
        Self {
            l1_xent,
            l1_reg,
            l2,
            total: l1_xent + w.lambda_att * l1_reg + w.lambda_l2 * l2,
        }
    }

    /// Component-wise mean, with `total` recomputed from the means.
    pub fn mean(parts: &[LossBreakdown], w: LossWeights) -> Self {
        let n = parts.len().max(1) as f64;
        let sum = |f: fn(&LossBreakdown) -> f64| parts.iter().map(f).sum::<f64>() / n;
        Self::new(sum(|p| p.l1_xent), sum(|p| p.l1_reg), sum(|p| p.l2), w)
    }
}

/// `sum_k (1 - sum_t alpha_tk)^2` over the given `1 x K` attention rows.
pub fn attention_regularizer(tape: &mut Tape, alphas: &[Var]) -> Result<Var> {
    if alphas.is_empty() {
        return Err(Error::data("attention regularizer needs at least one step"));
    }
    let stacked = tape.concat(alphas, 0)?;
    let mass = tape.sum_axis(stacked, 0)?;
    let neg = tape.scale(mass, -1.0)?;
    let gap = tape.offset(neg, 1.0)?;
    let sq = tape.mul(gap, gap)?;
    Ok(tape.sum(sq)?)
}

/// `(xent, reg)`: summed negative log-likelihood of the gold tokens and the
/// attention regularizer over the caption's steps.
pub fn loss_l1(tape: &mut Tape, trace: &ForwardTrace) -> Result<(Var, Var)> {
    if trace.steps.len() != trace.targets.len() || trace.steps.is_empty() {
        return Err(Error::data(format!(
            "trace has {} steps for {} targets",
            trace.steps.len(),
            trace.targets.len()
        )));
    }
    let mut picked = Vec::with_capacity(trace.steps.len());
    for (step, &target) in trace.steps.iter().zip(&trace.targets) {
        let lp = tape.log_softmax(step.word_logits, 1)?;
        picked.push(tape.pick(lp, target)?);
    }
    let all = tape.concat(&picked, 0)?;
    let ll = tape.sum(all)?;
    let xent = tape.scale(ll, -1.0)?;
    let alphas: Vec<Var> = trace.steps.iter().map(|s| s.alpha).collect();
    let reg = attention_regularizer(tape, &alphas)?;
    Ok((xent, reg))
}

/// `-(1/L) sum_t log p(s | h_t)` over the `L` steps of the trace.
pub fn loss_l2(tape: &mut Tape, trace: &ForwardTrace, sentiment: SentimentCategory) -> Result<Var> {
    let mut picked = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let logits = step
            .sentiment_logits
            .ok_or_else(|| Error::config("trace has no sentiment logits; only the full variant has L2"))?;
        let lp = tape.log_softmax(logits, 1)?;
        picked.push(tape.pick(lp, sentiment.index())?);
    }
    if picked.is_empty() {
        return Err(Error::data("sentiment loss needs at least one step"));
    }
    let all = tape.concat(&picked, 0)?;
    let mean = tape.mean_axis(all, 0)?;
    Ok(tape.scale(mean, -1.0)?)
}

/// One training caption with its image.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a SpatialFeatures,
    pub tokens: &'a [usize],
    pub sentiment: SentimentCategory,
}

pub struct ExampleLoss {
    pub breakdown: LossBreakdown,
    pub grads: GradMap,
}

/// Loss and gradients for one caption. `rng` switches dropout on.
pub fn example_loss(
    params: &Parameters,
    example: &Example<'_>,
    weights: LossWeights,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<ExampleLoss> {
    let mut tape = Tape::new();
    let mut g = Graph::new(&mut tape, params);
    let mut mode = match rng {
        Some(r) => Mode::Train(r),
        None => Mode::Eval,
    };
    let trace = g.forward_teacher_forced(example.features, example.tokens, example.sentiment, &mut mode)?;
    let (xent, reg) = loss_l1(g.tape, &trace)?;
    let reg_term = g.tape.scale(reg, weights.lambda_att)?;
    let mut total = g.tape.add(xent, reg_term)?;
    let l2 = if params.config().variant.uses_sentiment_loss() {
        let l2 = loss_l2(g.tape, &trace, example.sentiment)?;
        let term = g.tape.scale(l2, weights.lambda_l2)?;
        total = g.tape.add(total, term)?;
        Some(l2)
    } else {
        None
    };
    let leaves: Vec<(String, Var)> = g
        .bound_params()
        .filter(|(name, _)| params.get(name).is_some_and(|p| p.trainable))
        .map(|(name, v)| (name.to_string(), v))
        .collect();
    let mut grads = tape.backward(total)?;
    let scalar = |v: Var| tape.value(v).data()[0];
    let breakdown = LossBreakdown::new(scalar(xent), scalar(reg), l2.map_or(0.0, scalar), weights);
    Ok(ExampleLoss {
        breakdown,
        grads: leaves.into_iter().map(|(n, v)| (n, grads.take(v))).collect(),
    })
}

/// Mean loss and mean gradients over a batch.
///
/// Examples run in parallel; gradients are summed in example order, so the
/// result does not depend on the thread count. With `dropout_seed`, example
/// `i` draws its masks from stream `i` of that seed.
pub fn combined_loss(
    params: &Parameters,
    batch: &[Example<'_>],
    weights: LossWeights,
    dropout_seed: Option<u64>,
) -> Result<(LossBreakdown, GradMap)> {
    if batch.is_empty() {
        return Err(Error::data("empty batch"));
    }
    let results: Vec<Result<ExampleLoss>> = batch
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let mut rng = dropout_seed.map(|s| {
                let mut r = ChaCha8Rng::seed_from_u64(s);
                r.set_stream(i as u64);
                r
            });
            example_loss(params, ex, weights, rng.as_mut())
        })
        .collect();
    let mut parts = Vec::with_capacity(batch.len());
    let mut grads = GradMap::new();
    for r in results {
        let r = r?;
        parts.push(r.breakdown);
        for (name, g) in r.grads {
            match grads.get_mut(&name) {
                Some(acc) => acc.add_assign(&g),
                None => {
                    grads.insert(name, g);
                }
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for g in grads.values_mut() {
        g.scale_assign(inv);
    }
    Ok((LossBreakdown::mean(&parts, weights), grads))
}
