//! Conditional autoregressive categorical policy over speech tokens.
//!
//! The model is a dense logit table indexed by (current aligned base,
//! previous emitted token). Alignment is forced and monotone: at emission
//! step t the conditioning base is canonical[t] while t < |x|, then PAD.
//! Outputs range over |V| tokens plus EOS. Everything (sampling,
//! log-likelihood, gradients) is exact; no autodiff.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::Stream;
use crate::world::{Prompt, Source, TokenId, TokenSequence, Utterance, Vocab};

/// Logit table of shape (P+1) x (|V|+1) x (|V|+1):
/// base feature (P bases + PAD) x previous feature (|V| tokens + BOS)
/// x output (|V| tokens + EOS).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub base_count: u32,
    pub vocab_size: u32,
    pub logits: Vec<f64>,
}

/// Conditioning features for one emission step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextFeature {
    /// Aligned base symbol, or PAD once the pointer runs past |x|.
    pub current_base: u32,
    /// Previously emitted token, or BOS at step 0.
    pub previous_token: u32,
}

impl PolicyParams {
    pub fn base_dim(&self) -> usize {
        self.base_count as usize + 1
    }

    pub fn prev_dim(&self) -> usize {
        self.vocab_size as usize + 1
    }

    pub fn out_dim(&self) -> usize {
        self.vocab_size as usize + 1
    }

    pub fn pad_feature(&self) -> u32 {
        self.base_count
    }

    pub fn bos_feature(&self) -> u32 {
        self.vocab_size
    }

    pub fn eos_output(&self) -> u32 {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.base_dim() * self.prev_dim() * self.out_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_index(&self, ctx: ContextFeature) -> Result<usize> {
        if ctx.current_base > self.base_count || ctx.previous_token > self.vocab_size {
            return Err(Error::Domain(format!(
                "context out of range: base {} (max {}), prev {} (max {})",
                ctx.current_base, self.base_count, ctx.previous_token, self.vocab_size
            )));
        }
        Ok((ctx.current_base as usize * self.prev_dim() + ctx.previous_token as usize)
            * self.out_dim())
    }

    pub fn row(&self, ctx: ContextFeature) -> Result<&[f64]> {
        let start = self.row_index(ctx)?;
        Ok(&self.logits[start..start + self.out_dim()])
    }

    /// 64-bit content hash over the exact bit patterns of the table.
    pub fn content_hash(&self) -> u64 {
        use std::hash::Hasher;
        let mut h = std::collections::hash_map::DefaultHasher::new();
        h.write_u32(self.base_count);
        h.write_u32(self.vocab_size);
        for &x in &self.logits {
            h.write_u64(x.to_bits());
        }
        h.finish()
    }
}

/// All-zero logits: uniform over |V|+1 outcomes at every context.
pub fn init_policy(vocab: &Vocab) -> PolicyParams {
    let base_count = vocab.base_count;
    let vocab_size = vocab.size();
    let len =
        (base_count as usize + 1) * (vocab_size as usize + 1) * (vocab_size as usize + 1);
    PolicyParams {
        base_count,
        vocab_size,
        logits: vec![0.0; len],
    }
}

/// Aligned base feature at emission step t.
pub fn aligned_base(params: &PolicyParams, canonical: &[u32], t: usize) -> u32 {
    if t < canonical.len() {
        canonical[t]
    } else {
        params.pad_feature()
    }
}

pub fn context_at(
    params: &PolicyParams,
    canonical: &[u32],
    emitted: &[TokenId],
    t: usize,
) -> ContextFeature {
    ContextFeature {
        current_base: aligned_base(params, canonical, t),
        previous_token: if t == 0 {
            params.bos_feature()
        } else {
            emitted[t - 1]
        },
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

/// Softmax of the context's logit row.
pub fn step_distribution(params: &PolicyParams, ctx: ContextFeature) -> Result<Vec<f64>> {
    Ok(softmax(params.row(ctx)?))
}

/// pi^(T) proportional to pi^(1/T).
pub fn apply_temperature(dist: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    // Work in log space; the input is strictly positive pre-nucleus.
    let logs: Vec<f64> = dist.iter().map(|&p| p.ln() / temperature).collect();
    Ok(softmax(&logs))
}

/// Keep the minimal descending-probability prefix with cumulative mass
/// >= p (ties broken by smaller outcome id), zero the rest, renormalize.
pub fn nucleus_filter(dist: &[f64], p: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap().then(a.cmp(&b)));
    let mut kept = vec![false; dist.len()];
    let mut mass = 0.0;
    for &i in &order {
        kept[i] = true;
        mass += dist[i];
        if mass >= p {
            break;
        }
    }
    dist.iter()
        .zip(&kept)
        .map(|(&q, &k)| if k { q / mass } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub nucleus_p: f64,
    /// Generation cap = ceil(factor * |x|).
    pub max_length_factor: f64,
    #[serde(skip)]
    pub style_prefix: Option<TokenSequence>,
    /// Argmax decoding; exposed explicitly since T=0 is undefined.
    pub greedy: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 1.0,
            nucleus_p: 0.9,
            max_length_factor: 2.5,
            style_prefix: None,
            greedy: false,
        }
    }
}

impl GenerationConfig {
    pub fn with_temperature(&self, t: f64) -> Self {
        GenerationConfig {
            temperature: t,
            ..self.clone()
        }
    }
}

fn sample_index(dist: &[f64], rng: &mut Stream) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    dist.len() - 1
}

fn argmax(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

/// Autoregressive sampling with forced prefix, temperature scaling, then
/// nucleus filtering at each step. Stops on EOS or at the length cap;
/// EOS is never included in the returned tokens.
pub fn sample_sequence(
    params: &PolicyParams,
    prompt: &Prompt,
    config: &GenerationConfig,
    rng: &mut Stream,
) -> Result<Utterance> {
    let cap = ((config.max_length_factor * prompt.len() as f64).ceil() as usize).max(1);
    let mut tokens: TokenSequence = Vec::with_capacity(prompt.len());
    let mut terminated = false;
    let prefix_len = config.style_prefix.as_ref().map_or(0, |p| p.len());
    for t in 0..cap {
        if t < prefix_len {
            let tok = config.style_prefix.as_ref().unwrap()[t];
            if tok >= params.vocab_size {
                return Err(Error::Domain(format!("style prefix token {tok} out of range")));
            }
            tokens.push(tok);
            continue;
        }
        let ctx = context_at(params, &prompt.canonical, &tokens, t);
        let dist = step_distribution(params, ctx)?;
        let choice = if config.greedy {
            argmax(&dist)
        } else {
            let dist = apply_temperature(&dist, config.temperature)?;
            let dist = nucleus_filter(&dist, config.nucleus_p);
            sample_index(&dist, rng)
        };
        if choice as u32 == params.eos_output() {
            terminated = true;
            break;
        }
        tokens.push(choice as TokenId);
    }
    Ok(Utterance {
        prompt_id: prompt.id,
        tokens,
        terminated,
        source: Source::Generated,
        temperature_used: Some(if config.greedy { 0.0 } else { config.temperature }),
    })
}

/// Sum of log step probabilities at T=1 with no nucleus filtering, in
/// nats; includes the terminal EOS step when `terminated`. Style-prefix
/// tokens are part of `tokens` and are included in the sum.
pub fn sequence_logprob(
    params: &PolicyParams,
    canonical: &[u32],
    tokens: &[TokenId],
    terminated: bool,
) -> Result<f64> {
    let mut total = 0.0;
    for (t, &tok) in tokens.iter().enumerate() {
        if tok >= params.vocab_size {
            return Err(Error::Domain(format!("token {tok} out of range")));
        }
        let ctx = context_at(params, canonical, tokens, t);
        let dist = step_distribution(params, ctx)?;
        total += dist[tok as usize].ln();
    }
    if terminated {
        let t = tokens.len();
        let ctx = context_at(params, canonical, tokens, t);
        let dist = step_distribution(params, ctx)?;
        total += dist[params.eos_output() as usize].ln();
    }
    Ok(total)
}
