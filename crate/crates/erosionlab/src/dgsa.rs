//! Disentanglement-Guided Self-Alignment.
//!
//! Stage 1 fits the policy on the mixed corpus; Stage 2 generates dual
//! outputs from the frozen checkpoint (style-prefixed "expressive" vs
//! unprefixed "stable", identical speaker identity); Stage 3 applies DPO
//! against the frozen checkpoint with two preference sets weighted by a
//! dynamic schedule keyed to the synthetic ratio.

use serde::{Deserialize, Serialize};

use crate::align::{
    dpo_loss_and_grad, freeze_reference, mle_loss_and_grad, optimizer_step, FrozenPolicy,
    GradTable, ObjectiveTag, OptimizerState, PreferenceTriplet,
};
use crate::error::{Error, Result};
use crate::policy::{sample_sequence, GenerationConfig, PolicyParams};
use crate::seeding::derive_stream;
use crate::world::{Corpus, Prompt, Source, Utterance, World};

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DgsaAblation {
    /// "w/o Expressivity Obj.": drop the expressivity preference set.
    pub disable_expressivity: bool,
    /// "w/o Stability Obj.": drop the stability preference set.
    pub disable_stability: bool,
    /// "w/o Identity Pairs": pair real anchors with dual outputs from a
    /// different prompt/speaker.
    pub random_pairing: bool,
    /// "w/o Dynamic Scaling": fixed lambda_s = lambda_e = 0.5.
    pub fixed_weights: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DgsaConfig {
    /// alpha*: critical synthetic ratio of the weight schedule.
    pub alpha_star: f64,
    /// s: style-prefix length in tokens.
    pub style_prefix_length: usize,
    pub pairs_per_prompt: usize,
    pub sft_epochs: usize,
    pub sft_learning_rate: f64,
    pub dpo_epochs: usize,
    pub dpo_learning_rate: f64,
    pub beta: f64,
    pub ablation: DgsaAblation,
}

impl Default for DgsaConfig {
    fn default() -> Self {
        DgsaConfig {
            alpha_star: 0.5,
            style_prefix_length: 4,
            pairs_per_prompt: 1,
            sft_epochs: 90,
            sft_learning_rate: 0.03,
            dpo_epochs: 10,
            dpo_learning_rate: 5e-3,
            beta: 0.1,
            ablation: DgsaAblation::default(),
        }
    }
}

/// (lambda_s, lambda_e), always on the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub lambda_s: f64,
    pub lambda_e: f64,
}

/// lambda_e = max(0, (alpha - alpha*) / (1 - alpha*)), lambda_s = 1 - lambda_e.
pub fn dynamic_weights(alpha: f64, alpha_star: f64) -> Result<WeightPair> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0,1]")));
    }
    if !(0.0..1.0).contains(&alpha_star) {
        return Err(Error::Domain(format!(
            "alpha* {alpha_star} outside [0,1): the schedule degenerates at 1"
        )));
    }
    let lambda_e = ((alpha - alpha_star) / (1.0 - alpha_star)).max(0.0);
    Ok(WeightPair {
        lambda_s: 1.0 - lambda_e,
        lambda_e,
    })
}

/// One dual-mode generation: style-prefixed expressive output and
/// unprefixed stable output, both from the same frozen checkpoint and
/// carrying the same speaker identity.
pub fn generate_dual(
    frozen: &FrozenPolicy,
    world: &World,
    prompt: &Prompt,
    real_utterance: &Utterance,
    config: &DgsaConfig,
    gen: &GenerationConfig,
    master_seed: u64,
    pair_index: usize,
) -> Result<(Utterance, Utterance)> {
    if real_utterance.prompt_id != prompt.id {
        return Err(Error::Precondition(format!(
            "dual generation: real utterance belongs to prompt {} not {}",
            real_utterance.prompt_id, prompt.id
        )));
    }
    if real_utterance.tokens.is_empty() {
        return Err(Error::Precondition("dual generation: empty real reference".into()));
    }
    let prefix_len = config.style_prefix_length.min(real_utterance.tokens.len());
    let prefix = real_utterance.tokens[..prefix_len].to_vec();

    let mut rng_expr = derive_stream(
        master_seed,
        "dgsa/dual-expr",
        &[prompt.id as u64, pair_index as u64],
    );
    let expr_cfg = GenerationConfig {
        style_prefix: Some(prefix),
        ..gen.clone()
    };
    let y_expr = sample_sequence(frozen.params(), prompt, &expr_cfg, &mut rng_expr)?;

    let mut rng_stab = derive_stream(
        master_seed,
        "dgsa/dual-stab",
        &[prompt.id as u64, pair_index as u64],
    );
    let stab_cfg = GenerationConfig {
        style_prefix: None,
        ..gen.clone()
    };
    let y_stab = sample_sequence(frozen.params(), prompt, &stab_cfg, &mut rng_stab)?;
    let _ = world;
    Ok((y_expr, y_stab))
}

/// Raw material for one preference-pair construction.
#[derive(Debug, Clone)]
pub struct DualRecord {
    pub prompt_id: u32,
    pub speaker_tag: u32,
    pub real: Utterance,
    pub y_expr: Utterance,
    pub y_stab: Utterance,
}

/// T_stab pairs y_real against y_expr; T_expr pairs y_real against
/// y_stab. The real anchor is always the preferred side. The
/// random-pairing ablation rotates dual outputs across records so
/// prompt/speaker identity no longer matches.
pub fn build_preference_sets(
    records: &[DualRecord],
    random_pairing: bool,
) -> (Vec<PreferenceTriplet>, Vec<PreferenceTriplet>) {
    let mut stab = Vec::with_capacity(records.len());
    let mut expr = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let partner = if random_pairing && records.len() > 1 {
            &records[(i + 1) % records.len()]
        } else {
            rec
        };
        stab.push(PreferenceTriplet {
            prompt_id: rec.prompt_id,
            preferred: rec.real.tokens.clone(),
            preferred_terminated: rec.real.terminated,
            dispreferred: partner.y_expr.tokens.clone(),
            dispreferred_terminated: partner.y_expr.terminated,
            objective_tag: ObjectiveTag::Stability,
            speaker_tag: rec.speaker_tag,
        });
        expr.push(PreferenceTriplet {
            prompt_id: rec.prompt_id,
            preferred: rec.real.tokens.clone(),
            preferred_terminated: rec.real.terminated,
            dispreferred: partner.y_stab.tokens.clone(),
            dispreferred_terminated: partner.y_stab.terminated,
            objective_tag: ObjectiveTag::Expressivity,
            speaker_tag: rec.speaker_tag,
        });
    }
    (stab, expr)
}

/// Weighted sum of the two DPO objectives. A weight of exactly zero
/// skips that term entirely; skipping both is an error.
#[allow(clippy::too_many_arguments)]
pub fn dgsa_combined_loss(
    params: &PolicyParams,
    reference: &PolicyParams,
    stab: &[PreferenceTriplet],
    expr: &[PreferenceTriplet],
    weights: WeightPair,
    beta: f64,
    canonical_of: impl Fn(u32) -> Result<Vec<u32>> + Copy,
) -> Result<(f64, GradTable)> {
    let use_stab = weights.lambda_s > 0.0 && !stab.is_empty();
    let use_expr = weights.lambda_e > 0.0 && !expr.is_empty();
    if !use_stab && !use_expr {
        return Err(Error::Precondition(
            "combined loss: both objectives are inactive".into(),
        ));
    }
    let mut total = 0.0;
    let mut grad = GradTable(vec![0.0; params.logits.len()]);
    if use_stab {
        let (l, g) =
            dpo_loss_and_grad(params, reference, stab, canonical_of, beta, weights.lambda_s)?;
        total += l;
        for (a, b) in grad.0.iter_mut().zip(&g.0) {
            *a += b;
        }
    }
    if use_expr {
        let (l, g) =
            dpo_loss_and_grad(params, reference, expr, canonical_of, beta, weights.lambda_e)?;
        total += l;
        for (a, b) in grad.0.iter_mut().zip(&g.0) {
            *a += b;
        }
    }
    Ok((total, grad))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DgsaStageLogs {
    pub alpha: f64,
    pub weights: WeightPair,
    pub stage1_checkpoint_hash: u64,
    pub stage1_final_loss: f64,
    pub dual_pairs: usize,
    pub skipped_prompts: usize,
    pub stage3_final_loss: f64,
}

/// Fit the policy on a corpus by full-batch MLE. Shared by the SFT
/// baseline and Stage 1.
pub fn train_sft(
    params: &mut PolicyParams,
    world: &World,
    corpus: &Corpus,
    epochs: usize,
    learning_rate: f64,
) -> Result<f64> {
    let batch: Vec<(&[u32], &[u32], bool)> = corpus
        .items
        .iter()
        .map(|u| {
            (
                world.prompts[u.prompt_id as usize].canonical.as_slice(),
                u.tokens.as_slice(),
                u.terminated,
            )
        })
        .collect();
    let mut state = OptimizerState::new(params, learning_rate);
    let mut last = f64::NAN;
    for _ in 0..epochs {
        let (loss, grad) = mle_loss_and_grad(params, &batch)?;
        optimizer_step(&mut state, params, &grad)?;
        last = loss;
    }
    Ok(last)
}

/// The strictly sequential three-stage pipeline. Returns the aligned
/// parameters together with the frozen Stage-1 checkpoint and logs.
pub fn run_dgsa(
    world: &World,
    corpus: &Corpus,
    config: &DgsaConfig,
    gen: &GenerationConfig,
    master_seed: u64,
) -> Result<(PolicyParams, FrozenPolicy, DgsaStageLogs)> {
    // Stage 1: SFT on the mixed corpus, then freeze.
    let mut params = crate::policy::init_policy(&world.vocab);
    let stage1_final_loss = train_sft(
        &mut params,
        world,
        corpus,
        config.sft_epochs,
        config.sft_learning_rate,
    )?;
    let frozen = freeze_reference(&params);
    let (aligned, mut logs) =
        align_from_checkpoint(&frozen, world, corpus, config, gen, master_seed, None)?;
    logs.stage1_final_loss = stage1_final_loss;
    Ok((aligned, frozen, logs))
}

/// Stages 2 and 3 only, from an existing frozen Stage-1 checkpoint.
/// `weight_override` replaces the dynamic schedule when given (Standard
/// DPO is this pipeline with weights forced to (0, 1)).
pub fn align_from_checkpoint(
    frozen: &FrozenPolicy,
    world: &World,
    corpus: &Corpus,
    config: &DgsaConfig,
    gen: &GenerationConfig,
    master_seed: u64,
    weight_override: Option<WeightPair>,
) -> Result<(PolicyParams, DgsaStageLogs)> {
    let has_real = corpus.items.iter().any(|u| u.source == Source::Real);
    if !has_real {
        return Err(Error::Precondition(
            "DGSA requires real utterances for style references; \
             use TDSC for pure-synthetic corpora"
            .into(),
        ));
    }

    // Stage 2: dual generation from the frozen checkpoint, one real
    // anchor per covered prompt (the first real item in corpus order).
    let mut records: Vec<DualRecord> = Vec::new();
    let mut skipped = 0usize;
    for prompt in world.covered_prompts() {
        let real = corpus
            .items
            .iter()
            .find(|u| u.source == Source::Real && u.prompt_id == prompt.id);
        let Some(real) = real else {
            skipped += 1;
            continue;
        };
        for pair_index in 0..config.pairs_per_prompt.max(1) {
            let (y_expr, y_stab) = generate_dual(
                frozen, world, prompt, real, config, gen, master_seed, pair_index,
            )?;
            debug_assert_eq!(y_expr.prompt_id, y_stab.prompt_id);
            records.push(DualRecord {
                prompt_id: prompt.id,
                speaker_tag: prompt.speaker_tag,
                real: real.clone(),
                y_expr,
                y_stab,
            });
        }
    }
    if skipped > 0 {
        log::warn!("dgsa: {skipped} covered prompts had no real utterance in the corpus");
    }
    let (stab, expr) = build_preference_sets(&records, config.ablation.random_pairing);

    // Stage 3: DPO from (and against) the Stage-1 checkpoint.
    let alpha = corpus.alpha();
    let mut weights = if let Some(w) = weight_override {
        w
    } else if config.ablation.fixed_weights {
        WeightPair {
            lambda_s: 0.5,
            lambda_e: 0.5,
        }
    } else {
        dynamic_weights(alpha, config.alpha_star)?
    };
    if config.ablation.disable_expressivity {
        weights = WeightPair {
            lambda_s: weights.lambda_s,
            lambda_e: 0.0,
        };
    }
    if config.ablation.disable_stability {
        weights = WeightPair {
            lambda_s: 0.0,
            lambda_e: weights.lambda_e,
        };
    }

    let mut aligned = frozen.thaw();
    let lookup = |id: u32| -> crate::error::Result<Vec<u32>> { Ok(world.prompts[id as usize].canonical.clone()) };
    let mut stage3_final_loss = 0.0;
    let active = (weights.lambda_s > 0.0 && !stab.is_empty())
        || (weights.lambda_e > 0.0 && !expr.is_empty());
    if active {
        let mut state = OptimizerState::new(&aligned, config.dpo_learning_rate);
        for _ in 0..config.dpo_epochs {
            let (loss, grad) = dgsa_combined_loss(
                &aligned,
                frozen.params(),
                &stab,
                &expr,
                weights,
                config.beta,
                lookup,
            )?;
            optimizer_step(&mut state, &mut aligned, &grad)?;
            stage3_final_loss = loss;
        }
    }
    debug_assert!(frozen.verify_hash());

    let logs = DgsaStageLogs {
        alpha,
        weights,
        stage1_checkpoint_hash: frozen.hash(),
        stage1_final_loss: f64::NAN,
        dual_pairs: records.len(),
        skipped_prompts: skipped,
        stage3_final_loss,
    };
    Ok((aligned, logs))
}
