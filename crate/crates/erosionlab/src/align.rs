//! Optimization substrate: exact MLE and DPO losses with closed-form
//! gradients on the logit table, an adaptive-moment optimizer, and
//! reference-policy freezing.
//!
//! Gradient accumulation order is fixed (batch order, then step order)
//! so trajectories are bitwise reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{context_at, step_distribution, PolicyParams};
use crate::world::{TokenId, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveTag {
    Stability,
    Expressivity,
    Tdsc,
}

/// One preference pair: preferred and dispreferred sequences for the
/// same prompt, scored under the same prefix convention (any forced
/// style prefix is embedded in the token sequences themselves).
#[derive(Debug, Clone)]
pub struct PreferenceTriplet {
    pub prompt_id: u32,
    pub preferred: TokenSequence,
    pub preferred_terminated: bool,
    pub dispreferred: TokenSequence,
    pub dispreferred_terminated: bool,
    pub objective_tag: ObjectiveTag,
    /// Shared identity metadata; equal on both sides unless the
    /// random-pairing ablation constructed the triplet.
    pub speaker_tag: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DpoConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for DpoConfig {
    fn default() -> Self {
        DpoConfig {
            beta: 0.1,
            learning_rate: 1e-3,
            epochs: 40,
        }
    }
}

/// Dense gradient with the same shape as the logit table.
#[derive(Debug, Clone)]
pub struct GradTable(pub Vec<f64>);

impl GradTable {
    pub fn zeros_like(params: &PolicyParams) -> Self {
        GradTable(vec![0.0; params.logits.len()])
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Accumulate `scale * d(log pi(tokens))/d(logits)` into `grad` and return
/// the sequence log-prob. The per-row gradient of a log-softmax pick is
/// onehot(target) - softmax(row).
fn accumulate_logprob_grad(
    params: &PolicyParams,
    canonical: &[u32],
    tokens: &[TokenId],
    terminated: bool,
    scale: f64,
    grad: &mut GradTable,
) -> Result<f64> {
    let out_dim = params.out_dim();
    let mut logprob = 0.0;
    let steps = tokens.len() + usize::from(terminated);
    for t in 0..steps {
        let target = if t < tokens.len() {
            tokens[t] as usize
        } else {
            params.eos_output() as usize
        };
        let ctx = context_at(params, canonical, tokens, t);
        let row_start = params.row_index(ctx)?;
        let dist = step_distribution(params, ctx)?;
        logprob += dist[target].ln();
        if scale != 0.0 {
            for j in 0..out_dim {
                let onehot = if j == target { 1.0 } else { 0.0 };
                grad.0[row_start + j] += scale * (onehot - dist[j]);
            }
        }
    }
    Ok(logprob)
}

/// Mean negative sequence log-likelihood over the batch (nats) plus its
/// exact gradient.
pub fn mle_loss_and_grad(
    params: &PolicyParams,
    batch: &[(&[u32], &[TokenId], bool)],
) -> Result<(f64, GradTable)> {
    if batch.is_empty() {
        return Err(Error::Precondition("MLE batch is empty".into()));
    }
    let mut grad = GradTable::zeros_like(params);
    let scale = -1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &(canonical, tokens, terminated) in batch {
        let lp = accumulate_logprob_grad(params, canonical, tokens, terminated, scale, &mut grad)?;
        loss -= lp / batch.len() as f64;
    }
    Ok((loss, grad))
}

/// DPO: loss = weight * mean(-log sigma(beta * Delta)) with
/// Delta = (log pi - log pi_ref)(y+) - (log pi - log pi_ref)(y-).
/// The reference is read-only here by construction.
pub fn dpo_loss_and_grad(
    params: &PolicyParams,
    reference: &PolicyParams,
    triplets: &[PreferenceTriplet],
    canonical_of: impl Fn(u32) -> Result<Vec<u32>>,
    beta: f64,
    weight: f64,
) -> Result<(f64, GradTable)> {
    if triplets.is_empty() {
        return Err(Error::Precondition("DPO triplet set is empty".into()));
    }
    let mut grad = GradTable::zeros_like(params);
    let n = triplets.len() as f64;
    let mut loss = 0.0;
    for trip in triplets {
        let canonical = canonical_of(trip.prompt_id)?;
        let lp_w = crate::policy::sequence_logprob(
            params,
            &canonical,
            &trip.preferred,
            trip.preferred_terminated,
        )?;
        let lp_l = crate::policy::sequence_logprob(
            params,
            &canonical,
            &trip.dispreferred,
            trip.dispreferred_terminated,
        )?;
        let ref_w = crate::policy::sequence_logprob(
            reference,
            &canonical,
            &trip.preferred,
            trip.preferred_terminated,
        )?;
        let ref_l = crate::policy::sequence_logprob(
            reference,
            &canonical,
            &trip.dispreferred,
            trip.dispreferred_terminated,
        )?;
        let delta = (lp_w - ref_w) - (lp_l - ref_l);
        loss += weight * -sigmoid(beta * delta).ln() / n;
        // d loss / d Delta = -beta * sigma(-beta Delta); minimize, so the
        // preferred side is pushed up and the dispreferred side down.
        let coeff = weight * beta * sigmoid(-beta * delta) / n;
        accumulate_logprob_grad(
            params,
            &canonical,
            &trip.preferred,
            trip.preferred_terminated,
            -coeff,
            &mut grad,
        )?;
        accumulate_logprob_grad(
            params,
            &canonical,
            &trip.dispreferred,
            trip.dispreferred_terminated,
            coeff,
            &mut grad,
        )?;
    }
    Ok((loss, grad))
}

/// Adaptive-moment optimizer state (decay 0.9 / 0.999, weight decay 0).
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(params: &PolicyParams, learning_rate: f64) -> Self {
        OptimizerState {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; params.logits.len()],
            second_moment: vec![0.0; params.logits.len()],
        }
    }
}

pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut PolicyParams,
    grad: &GradTable,
) -> Result<()> {
    if grad.0.len() != params.logits.len() || state.first_moment.len() != params.logits.len() {
        return Err(Error::Domain(format!(
            "shape mismatch: grad {}, params {}, state {}",
            grad.0.len(),
            params.logits.len(),
            state.first_moment.len()
        )));
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - state.beta1.powf(t);
    let bc2 = 1.0 - state.beta2.powf(t);
    for i in 0..params.logits.len() {
        let g = grad.0[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] =
            state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        params.logits[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Deep, immutable copy of the policy; the only way to read it is through
/// shared references, so subsequent training cannot alter it.
#[derive(Debug, Clone)]
pub struct FrozenPolicy {
    params: PolicyParams,
    hash_at_freeze: u64,
}

pub fn freeze_reference(params: &PolicyParams) -> FrozenPolicy {
    let copy = params.clone();
    let hash_at_freeze = copy.content_hash();
    FrozenPolicy {
        params: copy,
        hash_at_freeze,
    }
}

impl FrozenPolicy {
    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn hash(&self) -> u64 {
        self.hash_at_freeze
    }

    /// Re-hash the stored table; equal to `hash()` for as long as the
    /// freeze contract holds.
    pub fn verify_hash(&self) -> bool {
        self.params.content_hash() == self.hash_at_freeze
    }

    /// Thaw into a fresh trainable copy (used to start alignment stages
    /// from a checkpoint without touching the reference).
    pub fn thaw(&self) -> PolicyParams {
        self.params.clone()
    }
}
