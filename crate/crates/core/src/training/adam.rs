use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::loss::GradMap;
use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm limit; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
        }
    }
}

/// First and second moments per parameter, and the step count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub t: u64,
    m: IndexMap<String, Tensor>,
    v: IndexMap<String, Tensor>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn global_norm(grads: &GradMap) -> f64 {
    grads.values().flat_map(|g| g.data()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales all gradients so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut GradMap, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if max_norm > 0.0 && norm > max_norm {
        let k = max_norm / norm;
        for g in grads.values_mut() {
            g.scale_assign(k);
        }
    }
    norm
}

/// One bias-corrected Adam update.
///
/// Gradients for non-trainable parameters are ignored. A parameter whose
/// whole gradient is zero is left untouched, moments included, so a step
/// with an all-zero gradient map changes nothing but `t`.
pub fn adam_step(params: &mut Parameters, grads: &GradMap, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    for (name, g) in grads {
        let p = params
            .get(name)
            .ok_or_else(|| Error::config(format!("gradient for unknown parameter `{name}`")))?;
        if p.value.shape() != g.shape() {
            return Err(Error::config(format!(
                "gradient for `{name}` has shape {:?}, parameter has {:?}",
                g.shape(),
                p.value.shape()
            )));
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
    }
    let mut grads = grads.clone();
    clip_gradients(&mut grads, cfg.clip_norm);

    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (name, g) in &grads {
        let trainable = params.get(name).is_some_and(|p| p.trainable);
        if !trainable || g.data().iter().all(|&x| x == 0.0) {
            continue;
        }
        let m = state.m.entry(name.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
        let v = state.v.entry(name.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
        let theta = params.value_mut(name).expect("checked above");
        for (((th, mi), vi), &gi) in theta
            .data_mut()
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g.data())
        {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *th -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
