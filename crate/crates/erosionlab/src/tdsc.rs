//! Temperature-Driven Self-Critique.
//!
//! Each iteration: sample candidates across a temperature gradient,
//! judge them with the composite WER / repetition / length-ratio filter,
//! SFT on the accepted set, then DPO on mined (winner, loser) pairs where
//! losers must pass the length and repetition filters — the anti-
//! length-hack rule. The top temperature rises with the iteration index.

use serde::{Deserialize, Serialize};

use crate::align::{
    dpo_loss_and_grad, freeze_reference, mle_loss_and_grad, optimizer_step, ObjectiveTag,
    OptimizerState, PreferenceTriplet,
};
use crate::diagnostics::repetition_rate;
use crate::error::{Error, Result};
use crate::policy::{sample_sequence, GenerationConfig, PolicyParams};
use crate::seeding::derive_stream;
use crate::world::{corrupt_hypothesis, decode_tokens, wer_proxy, Prompt, Utterance, World};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    /// tau_w: accept only WER strictly below this.
    pub tau_w: f64,
    /// tau_r: accept only repetition strictly below this.
    pub tau_r: f64,
    /// Length-ratio bounds, inclusive.
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// eta: ASR corruption applied to the decoded hypothesis.
    pub asr_noise: f64,
    /// k of the repetition window.
    pub repetition_window: usize,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            tau_w: 0.40,
            tau_r: 0.10,
            gamma_min: 0.5,
            gamma_max: 2.0,
            asr_noise: 0.0,
            repetition_window: 4,
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0 && self.gamma_min < self.gamma_max) {
            return Err(Error::Config(
                "judge: require 0 < gamma_min < gamma_max".into(),
            ));
        }
        if !(self.tau_w > 0.0) || !(self.tau_r > 0.0) {
            return Err(Error::Config("judge: thresholds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.asr_noise) {
            return Err(Error::Config("judge.asr_noise: must be in [0,1]".into()));
        }
        if self.repetition_window < 1 {
            return Err(Error::Config("judge.repetition_window: must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Wer,
    Repetition,
    Length,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub accepted: bool,
    pub wer: f64,
    pub repetition: f64,
    pub length_ratio: f64,
    pub failure_reasons: Vec<FailureReason>,
}

impl JudgeVerdict {
    pub fn length_ok(&self) -> bool {
        !self.failure_reasons.contains(&FailureReason::Length)
    }

    pub fn repetition_ok(&self) -> bool {
        !self.failure_reasons.contains(&FailureReason::Repetition)
    }
}

/// Evaluate all three criteria; accepted iff every one holds.
pub fn judge_candidate(
    world: &World,
    prompt: &Prompt,
    candidate: &Utterance,
    config: &JudgeConfig,
    rng: &mut crate::seeding::Stream,
) -> Result<JudgeVerdict> {
    let mut hypothesis = decode_tokens(&world.vocab, &candidate.tokens)?;
    if config.asr_noise > 0.0 {
        hypothesis =
            corrupt_hypothesis(&hypothesis, config.asr_noise, world.vocab.base_count, rng);
    }
    let wer = wer_proxy(&prompt.canonical, &hypothesis)?;
    let repetition = repetition_rate(&candidate.tokens, config.repetition_window);
    let length_ratio = candidate.tokens.len() as f64 / prompt.len() as f64;

    let mut failure_reasons = Vec::new();
    if !(wer < config.tau_w) {
        failure_reasons.push(FailureReason::Wer);
    }
    if !(repetition < config.tau_r) {
        failure_reasons.push(FailureReason::Repetition);
    }
    if !(length_ratio >= config.gamma_min && length_ratio <= config.gamma_max) {
        failure_reasons.push(FailureReason::Length);
    }
    Ok(JudgeVerdict {
        accepted: failure_reasons.is_empty(),
        wer,
        repetition,
        length_ratio,
        failure_reasons,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TemperatureSchedule {
    pub t_low: f64,
    pub t_mid: f64,
    pub t_high_initial: f64,
    /// gamma: increment of the top temperature per iteration.
    pub curriculum_rate: f64,
    pub candidates_per_temperature: usize,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule {
            t_low: 0.7,
            t_mid: 1.0,
            t_high_initial: 0.8,
            curriculum_rate: 0.1,
            candidates_per_temperature: 4,
        }
    }
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_low > 0.0 && self.t_mid > 0.0 && self.t_high_initial > 0.0) {
            return Err(Error::Config("schedule: temperatures must be > 0".into()));
        }
        if self.curriculum_rate < 0.0 {
            return Err(Error::Config("schedule.curriculum_rate: must be >= 0".into()));
        }
        if self.candidates_per_temperature < 1 {
            return Err(Error::Config(
                "schedule.candidates_per_temperature: must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn t_high(&self, k: usize) -> f64 {
        self.t_high_initial + self.curriculum_rate * k as f64
    }
}

/// {t_low, t_mid, t_high^(0) + gamma * k}, in that order.
pub fn temperature_set_for_iteration(schedule: &TemperatureSchedule, k: usize) -> Vec<f64> {
    vec![schedule.t_low, schedule.t_mid, schedule.t_high(k)]
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub utterance: Utterance,
    pub temperature: f64,
    /// Generation order within the prompt's pool.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct JudgedCandidate {
    pub candidate: Candidate,
    pub verdict: JudgeVerdict,
}

/// Exactly candidates_per_temperature samples at each temperature in the
/// iteration's set; streams are keyed by (master seed, prompt, iteration,
/// candidate index) so prompt processing order is irrelevant.
pub fn generate_candidates(
    params: &PolicyParams,
    prompt: &Prompt,
    temperatures: &[f64],
    schedule: &TemperatureSchedule,
    gen: &GenerationConfig,
    iteration: usize,
    master_seed: u64,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(temperatures.len() * schedule.candidates_per_temperature);
    let mut index = 0usize;
    for &t in temperatures {
        for _ in 0..schedule.candidates_per_temperature {
            let mut rng = derive_stream(
                master_seed,
                "tdsc/candidate",
                &[prompt.id as u64, iteration as u64, index as u64],
            );
            let cfg = gen.with_temperature(t);
            let utterance = sample_sequence(params, prompt, &cfg, &mut rng)?;
            out.push(Candidate {
                utterance,
                temperature: t,
                index,
            });
            index += 1;
        }
    }
    Ok(out)
}

/// Disjoint, exhaustive split by the accepted flag.
pub fn partition_candidates(
    judged: Vec<JudgedCandidate>,
) -> (Vec<JudgedCandidate>, Vec<JudgedCandidate>) {
    judged.into_iter().partition(|j| j.verdict.accepted)
}

/// Winner: accepted candidate with minimal WER (ties: lower temperature,
/// then earlier index). Loser: maximal-WER candidate among those passing
/// the length AND repetition filters with wer >= tau_w. No pair when
/// either side is missing.
pub fn mine_preference_pairs(
    prompt: &Prompt,
    judged: &[JudgedCandidate],
    config: &JudgeConfig,
) -> Option<(PreferenceTriplet, JudgeVerdict)> {
    let winner = judged
        .iter()
        .filter(|j| j.verdict.accepted)
        .min_by(|a, b| {
            a.verdict
                .wer
                .partial_cmp(&b.verdict.wer)
                .unwrap()
                .then(a.candidate.temperature.partial_cmp(&b.candidate.temperature).unwrap())
                .then(a.candidate.index.cmp(&b.candidate.index))
        })?;
    let loser = judged
        .iter()
        .filter(|j| {
            j.verdict.length_ok() && j.verdict.repetition_ok() && j.verdict.wer >= config.tau_w
        })
        .max_by(|a, b| {
            a.verdict
                .wer
                .partial_cmp(&b.verdict.wer)
                .unwrap()
                .then(b.candidate.index.cmp(&a.candidate.index))
        })?;
    Some((
        PreferenceTriplet {
            prompt_id: prompt.id,
            preferred: winner.candidate.utterance.tokens.clone(),
            preferred_terminated: winner.candidate.utterance.terminated,
            dispreferred: loser.candidate.utterance.tokens.clone(),
            dispreferred_terminated: loser.candidate.utterance.terminated,
            objective_tag: ObjectiveTag::Tdsc,
            speaker_tag: prompt.speaker_tag,
        },
        loser.verdict.clone(),
    ))
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TdscAblation {
    /// "w/o DPO Loss": SFT-only iterations.
    pub disable_dpo: bool,
    /// "w/o Multi-Temperature": single temperature {t_mid}.
    pub single_temperature: bool,
    /// "w/o Temp. Curriculum": freeze T_high at its initial value.
    pub disable_curriculum: bool,
    /// "w/o Length Filter": length criterion always passes.
    pub disable_length_filter: bool,
    /// "w/o Repetition Filter": repetition criterion always passes.
    pub disable_repetition_filter: bool,
}

impl TdscAblation {
    /// The "Self-Training" baseline preset: iterative pseudo-labeling,
    /// i.e. single temperature and SFT only.
    pub fn self_training() -> Self {
        TdscAblation {
            disable_dpo: true,
            single_temperature: true,
            ..TdscAblation::default()
        }
    }

    pub fn effective_judge(&self, judge: &JudgeConfig) -> JudgeConfig {
        let mut j = *judge;
        if self.disable_length_filter {
            j.gamma_min = f64::MIN_POSITIVE;
            j.gamma_max = f64::INFINITY;
        }
        if self.disable_repetition_filter {
            j.tau_r = f64::INFINITY;
        }
        j
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TdscTrainConfig {
    pub sft_epochs: usize,
    pub sft_learning_rate: f64,
    pub dpo_epochs: usize,
    pub dpo_learning_rate: f64,
    pub beta: f64,
}

impl Default for TdscTrainConfig {
    fn default() -> Self {
        TdscTrainConfig {
            sft_epochs: 40,
            sft_learning_rate: 0.05,
            dpo_epochs: 30,
            dpo_learning_rate: 1e-2,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TdscIterationLog {
    pub iteration: usize,
    pub t_high: f64,
    pub pass_rate: f64,
    pub wer_before: f64,
    pub wer_after: f64,
    pub h_p_before: f64,
    pub h_p_after: f64,
    pub repetition_before: f64,
    pub repetition_after: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub mined_pairs: usize,
    /// Mined losers that would fail the unablated length/repetition
    /// filters; always 0 unless those filters were ablated.
    pub loser_filter_violations: usize,
}

fn eval_metrics(
    world: &World,
    params: &PolicyParams,
    prompts: &[&Prompt],
    judge: &JudgeConfig,
    master_seed: u64,
    label: &str,
    iteration: usize,
) -> Result<crate::diagnostics::MetricsRecord> {
    let gen = GenerationConfig::default();
    let mut utts = Vec::with_capacity(prompts.len());
    for p in prompts {
        let mut rng = derive_stream(master_seed, label, &[iteration as u64, p.id as u64]);
        utts.push(sample_sequence(params, p, &gen, &mut rng)?);
    }
    let mut jrng = derive_stream(master_seed, "tdsc/eval-judge", &[iteration as u64]);
    crate::diagnostics::corpus_metrics(world, &utts, judge, &mut jrng)
}

/// One closed-loop refinement round. The DPO reference is a snapshot of
/// the parameters at the start of this iteration, and both the SFT and
/// DPO phases use fresh optimizer state.
#[allow(clippy::too_many_arguments)]
pub fn tdsc_iteration(
    params: &mut PolicyParams,
    world: &World,
    prompts: &[&Prompt],
    schedule: &TemperatureSchedule,
    judge: &JudgeConfig,
    train: &TdscTrainConfig,
    ablation: &TdscAblation,
    gen: &GenerationConfig,
    iteration: usize,
    master_seed: u64,
) -> Result<TdscIterationLog> {
    schedule.validate()?;
    judge.validate()?;
    let effective_judge = ablation.effective_judge(judge);
    let k_for_schedule = if ablation.disable_curriculum { 0 } else { iteration };
    let temperatures = if ablation.single_temperature {
        vec![schedule.t_mid; 3]
    } else {
        temperature_set_for_iteration(schedule, k_for_schedule)
    };
    let t_high = *temperatures.last().unwrap();

    let before = eval_metrics(world, params, prompts, judge, master_seed, "tdsc/eval", iteration)?;

    let snapshot = freeze_reference(params);
    let mut accepted_all: Vec<(u32, Vec<u32>, bool)> = Vec::new();
    let mut pairs: Vec<PreferenceTriplet> = Vec::new();
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;
    let mut loser_filter_violations = 0usize;
    for prompt in prompts {
        let candidates = generate_candidates(
            snapshot.params(),
            prompt,
            &temperatures,
            schedule,
            gen,
            iteration,
            master_seed,
        )?;
        let judged: Vec<JudgedCandidate> = candidates
            .into_iter()
            .map(|candidate| {
                let mut jrng = derive_stream(
                    master_seed,
                    "tdsc/judge",
                    &[prompt.id as u64, iteration as u64, candidate.index as u64],
                );
                let verdict =
                    judge_candidate(world, prompt, &candidate.utterance, &effective_judge, &mut jrng)?;
                Ok(JudgedCandidate { candidate, verdict })
            })
            .collect::<Result<_>>()?;
        if !ablation.disable_dpo {
            if let Some((pair, loser_verdict)) =
                mine_preference_pairs(prompt, &judged, &effective_judge)
            {
                // Anti-length-hack audit against the unablated thresholds:
                // a mined loser must lose on transcription fidelity alone.
                let len_ok = loser_verdict.length_ratio >= judge.gamma_min
                    && loser_verdict.length_ratio <= judge.gamma_max;
                let rep_ok = loser_verdict.repetition < judge.tau_r;
                if !(len_ok && rep_ok) {
                    loser_filter_violations += 1;
                }
                pairs.push(pair);
            }
        }
        let (good, bad) = partition_candidates(judged);
        n_accepted += good.len();
        n_rejected += bad.len();
        for j in good {
            // Accepted candidates must carry at least one token to be
            // scorable under MLE; the length filter already enforces that
            // unless it was ablated away.
            if !j.candidate.utterance.tokens.is_empty() {
                accepted_all.push((
                    prompt.id,
                    j.candidate.utterance.tokens,
                    j.candidate.utterance.terminated,
                ));
            }
        }
    }

    if accepted_all.is_empty() {
        return Err(Error::Precondition(format!(
            "TDSC iteration {iteration}: accepted set is empty; the policy cannot \
             meet the judge thresholds at the current temperatures"
        )));
    }

    // SFT phase on the accepted set.
    let batch: Vec<(&[u32], &[u32], bool)> = accepted_all
        .iter()
        .map(|(pid, toks, term)| {
            (
                world.prompts[*pid as usize].canonical.as_slice(),
                toks.as_slice(),
                *term,
            )
        })
        .collect();
    let mut sft_state = OptimizerState::new(params, train.sft_learning_rate);
    for _ in 0..train.sft_epochs {
        let (_, grad) = mle_loss_and_grad(params, &batch)?;
        optimizer_step(&mut sft_state, params, &grad)?;
    }

    // DPO phase on mined pairs, referenced to the start-of-iteration snapshot.
    if !ablation.disable_dpo && !pairs.is_empty() {
        let mut dpo_state = OptimizerState::new(params, train.dpo_learning_rate);
        let lookup = |id: u32| -> crate::error::Result<Vec<u32>> { Ok(world.prompts[id as usize].canonical.clone()) };
        for _ in 0..train.dpo_epochs {
            let (_, grad) =
                dpo_loss_and_grad(params, snapshot.params(), &pairs, lookup, train.beta, 1.0)?;
            optimizer_step(&mut dpo_state, params, &grad)?;
        }
    }
    debug_assert!(snapshot.verify_hash());

    let after = eval_metrics(world, params, prompts, judge, master_seed, "tdsc/eval-after", iteration)?;
    let judged_total = n_accepted + n_rejected;
    Ok(TdscIterationLog {
        iteration,
        t_high,
        pass_rate: n_accepted as f64 / judged_total as f64,
        wer_before: before.wer,
        wer_after: after.wer,
        h_p_before: before.h_p,
        h_p_after: after.h_p,
        repetition_before: before.repetition,
        repetition_after: after.repetition,
        accepted: n_accepted,
        rejected: n_rejected,
        mined_pairs: pairs.len(),
        loser_filter_violations,
    })
}

/// Sequential refinement over k = 0..iterations-1.
#[allow(clippy::too_many_arguments)]
pub fn run_tdsc(
    params: &mut PolicyParams,
    world: &World,
    prompts: &[&Prompt],
    schedule: &TemperatureSchedule,
    judge: &JudgeConfig,
    train: &TdscTrainConfig,
    ablation: &TdscAblation,
    gen: &GenerationConfig,
    iterations: usize,
    master_seed: u64,
) -> Result<Vec<TdscIterationLog>> {
    if iterations < 1 {
        return Err(Error::Precondition("TDSC needs at least one iteration".into()));
    }
    let mut logs = Vec::with_capacity(iterations);
    for k in 0..iterations {
        let log = tdsc_iteration(
            params, world, prompts, schedule, judge, train, ablation, gen, k, master_seed,
        )?;
        log::info!(
            "tdsc iter {k}: pass_rate={:.3} wer {:.3}->{:.3} h_p {:.3}->{:.3} pairs={}",
            log.pass_rate,
            log.wer_before,
            log.wer_after,
            log.h_p_before,
            log.h_p_after,
            log.mined_pairs
        );
        logs.push(log);
    }
    Ok(logs)
}
