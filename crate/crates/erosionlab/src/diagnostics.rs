//! Measurement machinery: prosodic entropy, mixture-entropy analysis
//! (concavity, derivative, critical ratio), repetition rate, corpus WER
//! and pass rate.
//!
//! Entropy is base 2 throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::Stream;
use crate::tdsc::{judge_candidate, JudgeConfig};
use crate::world::{decode_tokens, edit_distance, TokenId, Utterance, World};

#[derive(Debug, Clone, Default)]
pub struct TokenHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl TokenHistogram {
    pub fn new(support: usize) -> Self {
        TokenHistogram {
            counts: vec![0; support],
            total: 0,
        }
    }

    pub fn add(&mut self, token: TokenId) {
        self.counts[token as usize] += 1;
        self.total += 1;
    }

    pub fn entropy_bits(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }
}

/// Plug-in Shannon entropy (bits) of the pooled unigram histogram of a
/// generated corpus. EOS never appears in stored tokens so it is
/// excluded by construction.
pub fn empirical_token_entropy(sequences: &[&[TokenId]], support: usize) -> Result<f64> {
    let mut hist = TokenHistogram::new(support);
    for seq in sequences {
        for &t in *seq {
            hist.add(t);
        }
    }
    if hist.total == 0 {
        return Err(Error::Precondition(
            "entropy undefined: no tokens in corpus".into(),
        ));
    }
    Ok(hist.entropy_bits())
}

/// A pair of categoricals over the same outcome set.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub p_real: Vec<f64>,
    pub p_syn: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(p_real: Vec<f64>, p_syn: Vec<f64>) -> Result<Self> {
        if p_real.len() != p_syn.len() {
            return Err(Error::Domain("mixture supports differ in size".into()));
        }
        for dist in [&p_real, &p_syn] {
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p < 0.0) {
                return Err(Error::Domain("not a valid categorical".into()));
            }
        }
        Ok(MixtureSpec { p_real, p_syn })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0,1]")));
    }
    Ok(())
}

/// p_alpha = (1 - alpha) p_real + alpha p_syn.
pub fn mixture_distribution(spec: &MixtureSpec, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok(spec
        .p_real
        .iter()
        .zip(&spec.p_syn)
        .map(|(&r, &s)| (1.0 - alpha) * r + alpha * s)
        .collect())
}

pub fn entropy_bits(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// H(alpha) := H(p_alpha), bits.
pub fn mixture_entropy(spec: &MixtureSpec, alpha: f64) -> Result<f64> {
    Ok(entropy_bits(&mixture_distribution(spec, alpha)?))
}

/// dH/dalpha = sum_v (p_syn(v) - p_real(v)) * log2(1 / p_alpha(v)).
///
/// Outcomes with p_real(v) = p_syn(v) = 0 never carry mass and are
/// skipped; any other zero of p_alpha at the evaluation point makes the
/// derivative singular.
pub fn mixture_entropy_derivative(spec: &MixtureSpec, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p_alpha = mixture_distribution(spec, alpha)?;
    let mut total = 0.0;
    for ((&r, &s), &pa) in spec.p_real.iter().zip(&spec.p_syn).zip(&p_alpha) {
        if r == 0.0 && s == 0.0 {
            continue;
        }
        if pa <= 0.0 {
            return Err(Error::Domain(format!(
                "derivative singular: p_alpha(v) = 0 at alpha = {alpha}"
            )));
        }
        total += (s - r) * (1.0 / pa).log2();
    }
    Ok(total)
}

/// Location of the entropy maximum of the mixture: interior values found
/// by bisection on the derivative, otherwise the maximizing endpoint.
pub fn find_alpha_star(spec: &MixtureSpec, tolerance: f64) -> Result<(f64, bool)> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain("tolerance must be > 0".into()));
    }
    // Evaluate just inside the endpoints; p_alpha is strictly positive on
    // the open interval wherever either component carries mass.
    let lo = 1e-12;
    let hi = 1.0 - 1e-12;
    let d_lo = mixture_entropy_derivative(spec, lo)?;
    let d_hi = mixture_entropy_derivative(spec, hi)?;
    if d_lo > 0.0 && d_hi < 0.0 {
        let (mut a, mut b) = (lo, hi);
        while b - a > tolerance {
            let mid = 0.5 * (a + b);
            if mixture_entropy_derivative(spec, mid)? > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok((0.5 * (a + b), true));
    }
    // Monotone (or constant): pick the better endpoint.
    let h0 = mixture_entropy(spec, 0.0)?;
    let h1 = mixture_entropy(spec, 1.0)?;
    Ok((if h1 > h0 { 1.0 } else { 0.0 }, false))
}

/// Fraction of length-(k+1) windows of identical consecutive tokens.
/// Sequences with N <= k have no loop window and score 0.
pub fn repetition_rate(tokens: &[TokenId], k: usize) -> f64 {
    assert!(k >= 1, "repetition window k must be >= 1");
    let n = tokens.len();
    if n <= k {
        return 0.0;
    }
    let windows = n - k;
    let mut hits = 0usize;
    for i in 0..windows {
        if tokens[i + 1..=i + k].iter().all(|&t| t == tokens[i]) {
            hits += 1;
        }
    }
    hits as f64 / windows as f64
}

/// One row of any report table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Micro-averaged WER: total edit distance / total reference length.
    pub wer: f64,
    /// Pooled unigram entropy of the corpus, bits.
    pub h_p: f64,
    /// Mean per-utterance repetition rate (k from the judge config).
    pub repetition: f64,
    /// Fraction of utterances accepted by the judge.
    pub pass_rate: f64,
    pub sample_count: usize,
}

/// Evaluate a generated corpus against its prompts' canonicals.
pub fn corpus_metrics(
    world: &World,
    utterances: &[Utterance],
    judge: &JudgeConfig,
    rng: &mut Stream,
) -> Result<MetricsRecord> {
    if utterances.is_empty() {
        return Err(Error::Precondition("metrics undefined on empty corpus".into()));
    }
    let mut total_edits = 0usize;
    let mut total_ref_len = 0usize;
    let mut rep_sum = 0.0;
    let mut passed = 0usize;
    let mut hist = TokenHistogram::new(world.vocab.size() as usize);
    for u in utterances {
        let prompt = world.prompt(u.prompt_id)?;
        let hyp = decode_tokens(&world.vocab, &u.tokens)?;
        total_edits += edit_distance(&prompt.canonical, &hyp);
        total_ref_len += prompt.len();
        rep_sum += repetition_rate(&u.tokens, judge.repetition_window);
        if judge_candidate(world, prompt, u, judge, rng)?.accepted {
            passed += 1;
        }
        for &t in &u.tokens {
            hist.add(t);
        }
    }
    Ok(MetricsRecord {
        wer: total_edits as f64 / total_ref_len as f64,
        h_p: hist.entropy_bits(),
        repetition: rep_sum / utterances.len() as f64,
        pass_rate: passed as f64 / utterances.len() as f64,
        sample_count: utterances.len(),
    })
}

/// Central finite difference of the mixture entropy, used as the
/// independent oracle for the analytic derivative.
pub fn mixture_entropy_fd(spec: &MixtureSpec, alpha: f64, step: f64) -> Result<f64> {
    let h_plus = mixture_entropy(spec, alpha + step)?;
    let h_minus = mixture_entropy(spec, alpha - step)?;
    Ok((h_plus - h_minus) / (2.0 * step))
}
