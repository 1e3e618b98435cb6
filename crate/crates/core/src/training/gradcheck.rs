//! Finite-difference check of the combined loss against its tape gradients,
//! over every trainable parameter of a model.

use serde::Serialize;

use super::loss::{combined_loss, Example, LossWeights};
use crate::autodiff::relative_error;
use crate::error::{Error, Result};
use crate::model::Parameters;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub numel: usize,
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub eps: f64,
    pub tolerance: f64,
    pub params: Vec<ParamCheck>,
}

impl GradientCheck {
    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.worst().map_or(0.0, |p| p.max_rel_error)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    pub fn checked_scalars(&self) -> usize {
        self.params.iter().map(|p| p.numel).sum()
    }
}

/// Central differences `(L(x+eps) - L(x-eps)) / 2eps` of the batch-mean loss,
/// one coordinate at a time, compared with the analytic gradient.
///
/// Dropout makes the loss random, so models with a nonzero rate are refused.
pub fn check_gradients(
    params: &Parameters,
    batch: &[Example<'_>],
    weights: LossWeights,
    eps: f64,
    tolerance: f64,
) -> Result<GradientCheck> {
    let rate = params.config().dropout_rate;
    if rate > 0.0 {
        return Err(Error::config(format!(
            "gradient check needs a deterministic loss; set model.dropout_rate to 0 (got {rate})"
        )));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::config(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let (_, analytic) = combined_loss(params, batch, weights, None)?;
    let names: Vec<String> = params.trainable().map(|(n, _)| n.to_string()).collect();
    let mut work = params.clone();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let grad = analytic
            .get(&name)
            .cloned()
            .unwrap_or_else(|| crate::tensor::Tensor::zeros(params.value(&name).expect("listed").shape()));
        let mut check = ParamCheck {
            name: name.clone(),
            numel: grad.numel(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for c in 0..grad.numel() {
            let orig = work.value(&name).expect("listed").data()[c];
            let mut total_at = |x: f64| -> Result<f64> {
                work.value_mut(&name).expect("listed").data_mut()[c] = x;
                Ok(combined_loss(&work, batch, weights, None)?.0.total)
            };
            let plus = total_at(orig + eps)?;
            let minus = total_at(orig - eps)?;
            work.value_mut(&name).expect("listed").data_mut()[c] = orig;
            let err = relative_error(grad.data()[c], (plus - minus) / (2.0 * eps));
            if err > check.max_rel_error {
                check.max_rel_error = err;
                check.worst_index = c;
            }
        }
        out.push(check);
    }
    Ok(GradientCheck {
        eps,
        tolerance,
        params: out,
    })
}
