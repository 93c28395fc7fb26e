//! Method comparisons: the alignment bake-off at high synthetic ratio
//! and the self-improvement bake-off from a pure-synthetic start. All
//! systems in a comparison branch from one shared Stage-1 (SFT)
//! checkpoint and are evaluated under the identical protocol.

use serde::{Deserialize, Serialize};

use crate::align::freeze_reference;
use crate::dgsa::{align_from_checkpoint, train_sft, WeightPair};
use crate::diagnostics::{corpus_metrics, MetricsRecord};
use crate::error::Result;
use crate::lab::config::{ExperimentConfig, Method};
use crate::lab::sweep::eval_policy;
use crate::policy::{init_policy, sample_sequence, PolicyParams};
use crate::seeding::derive_stream;
use crate::tdsc::{judge_candidate, run_tdsc, TdscAblation, TdscIterationLog};
use crate::world::{build_mixed_corpus, build_world, Prompt, World};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub metrics: MetricsRecord,
    pub stage1_hash: u64,
    pub params_hash: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub rows: Vec<ComparisonRow>,
    /// Per-iteration logs for the iterative methods (TDSC and the
    /// self-training preset); empty for the alignment comparison.
    pub tdsc_logs: Vec<TdscIterationLog>,
    pub self_training_logs: Vec<TdscIterationLog>,
}

/// Inference-time best-of-N: sample `n` candidates per prompt, judge
/// them, keep the accepted one with the lowest WER (falling back to the
/// lowest-WER candidate overall). The policy itself is never touched.
fn eval_best_of_n(
    config: &ExperimentConfig,
    world: &World,
    params: &PolicyParams,
    label: &str,
) -> Result<MetricsRecord> {
    let n = config.best_of_n;
    let mut picked = Vec::with_capacity(world.prompts.len());
    for p in &world.prompts {
        let mut best: Option<(bool, f64, crate::world::Utterance)> = None;
        for i in 0..n {
            let mut rng =
                derive_stream(config.master_seed, label, &[p.id as u64, i as u64]);
            let utt = sample_sequence(params, p, &config.generation, &mut rng)?;
            let mut jrng = derive_stream(
                config.master_seed,
                "compare/rs-judge",
                &[p.id as u64, i as u64],
            );
            let verdict = judge_candidate(world, p, &utt, &config.judge, &mut jrng)?;
            // Accepted beats rejected; within a class, lower WER wins.
            let better = match &best {
                None => true,
                Some((acc, wer, _)) => {
                    if verdict.accepted != *acc {
                        verdict.accepted
                    } else {
                        verdict.wer < *wer
                    }
                }
            };
            if better {
                best = Some((verdict.accepted, verdict.wer, utt));
            }
        }
        picked.push(best.unwrap().2);
    }
    let mut jrng = derive_stream(config.master_seed, "compare/rs-metrics", &[]);
    corpus_metrics(world, &picked, &config.judge, &mut jrng)
}

/// SFT vs Standard DPO vs Rejection Sampling vs DGSA at
/// `config.comparison_alpha` (high-erosion regime by default).
pub fn run_alignment_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let world = build_world(&config.world)?;
    let alpha = config.comparison_alpha;
    let (n_real, n_syn) = config.corpus_counts(alpha)?;
    let mut crng = derive_stream(config.master_seed, "compare/corpus", &[]);
    let corpus = build_mixed_corpus(&world, n_real, n_syn, &mut crng)?;

    // Shared Stage-1 checkpoint.
    let mut stage1 = init_policy(&world.vocab);
    train_sft(
        &mut stage1,
        &world,
        &corpus,
        config.sft_epochs,
        config.sft_learning_rate,
    )?;
    let frozen = freeze_reference(&stage1);
    let stage1_hash = frozen.hash();

    let mut rows = Vec::with_capacity(4);

    // SFT baseline: the checkpoint itself.
    let sft_metrics = eval_policy(config, &world, frozen.params(), "compare/eval-sft", &[])?;
    rows.push(ComparisonRow {
        method: Method::Sft,
        metrics: sft_metrics,
        stage1_hash,
        params_hash: frozen.hash(),
    });

    // Standard DPO: the DGSA pipeline with the expressivity objective
    // alone, weights forced to (0, 1).
    let (dpo_params, _) = align_from_checkpoint(
        &frozen,
        &world,
        &corpus,
        &config.dgsa,
        &config.generation,
        config.master_seed,
        Some(WeightPair {
            lambda_s: 0.0,
            lambda_e: 1.0,
        }),
    )?;
    let dpo_metrics = eval_policy(config, &world, &dpo_params, "compare/eval-dpo", &[])?;
    rows.push(ComparisonRow {
        method: Method::StandardDpo,
        metrics: dpo_metrics,
        stage1_hash,
        params_hash: dpo_params.content_hash(),
    });

    // Rejection sampling: parameters bit-identical to the checkpoint.
    let rs_metrics = eval_best_of_n(config, &world, frozen.params(), "compare/rs")?;
    rows.push(ComparisonRow {
        method: Method::RejectionSampling,
        metrics: rs_metrics,
        stage1_hash,
        params_hash: frozen.params().content_hash(),
    });

    // Full DGSA with the dynamic weight schedule.
    let (dgsa_params, _) = align_from_checkpoint(
        &frozen,
        &world,
        &corpus,
        &config.dgsa,
        &config.generation,
        config.master_seed,
        None,
    )?;
    let dgsa_metrics = eval_policy(config, &world, &dgsa_params, "compare/eval-dgsa", &[])?;
    rows.push(ComparisonRow {
        method: Method::Dgsa,
        metrics: dgsa_metrics,
        stage1_hash,
        params_hash: dgsa_params.content_hash(),
    });

    debug_assert!(frozen.verify_hash());
    Ok(ComparisonReport {
        alpha,
        rows,
        tdsc_logs: Vec::new(),
        self_training_logs: Vec::new(),
    })
}

/// SFT vs Self-Training vs Rejection Sampling vs TDSC, all starting from
/// one SFT checkpoint trained purely on synthetic data (alpha = 1).
pub fn run_tdsc_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let world = build_world(&config.world)?;
    let (n_real, n_syn) = config.corpus_counts(1.0)?;
    debug_assert_eq!(n_real, 0);
    let mut crng = derive_stream(config.master_seed, "tdsc-compare/corpus", &[]);
    let corpus = build_mixed_corpus(&world, n_real, n_syn, &mut crng)?;
    debug_assert_eq!(corpus.real_count(), 0);

    let mut stage1 = init_policy(&world.vocab);
    train_sft(
        &mut stage1,
        &world,
        &corpus,
        config.sft_epochs,
        config.sft_learning_rate,
    )?;
    let frozen = freeze_reference(&stage1);
    let stage1_hash = frozen.hash();
    let prompts: Vec<&Prompt> = world.prompts.iter().collect();

    let mut rows = Vec::with_capacity(4);
    let sft_metrics = eval_policy(config, &world, frozen.params(), "tdsc-compare/eval-sft", &[])?;
    rows.push(ComparisonRow {
        method: Method::Sft,
        metrics: sft_metrics,
        stage1_hash,
        params_hash: frozen.hash(),
    });

    // Self-training: single temperature, SFT-only iterations.
    let mut st_params = frozen.thaw();
    let self_training_logs = run_tdsc(
        &mut st_params,
        &world,
        &prompts,
        &config.schedule,
        &config.judge,
        &config.tdsc_train,
        &TdscAblation::self_training(),
        &config.generation,
        config.tdsc_iterations,
        config.master_seed,
    )?;
    let st_metrics = eval_policy(config, &world, &st_params, "tdsc-compare/eval-st", &[])?;
    rows.push(ComparisonRow {
        method: Method::SelfTraining,
        metrics: st_metrics,
        stage1_hash,
        params_hash: st_params.content_hash(),
    });

    let rs_metrics = eval_best_of_n(config, &world, frozen.params(), "tdsc-compare/rs")?;
    rows.push(ComparisonRow {
        method: Method::RejectionSampling,
        metrics: rs_metrics,
        stage1_hash,
        params_hash: frozen.params().content_hash(),
    });

    let mut tdsc_params = frozen.thaw();
    let tdsc_logs = run_tdsc(
        &mut tdsc_params,
        &world,
        &prompts,
        &config.schedule,
        &config.judge,
        &config.tdsc_train,
        &TdscAblation::default(),
        &config.generation,
        config.tdsc_iterations,
        config.master_seed,
    )?;
    let tdsc_metrics = eval_policy(config, &world, &tdsc_params, "tdsc-compare/eval-tdsc", &[])?;
    rows.push(ComparisonRow {
        method: Method::Tdsc,
        metrics: tdsc_metrics,
        stage1_hash,
        params_hash: tdsc_params.content_hash(),
    });

    Ok(ComparisonReport {
        alpha: 1.0,
        rows,
        tdsc_logs,
        self_training_logs,
    })
}
