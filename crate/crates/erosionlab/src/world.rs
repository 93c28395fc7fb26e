//! The synthetic token-speech world.
//!
//! Tokens factor as base x variant: the base carries content (what the
//! decode oracle / WER proxy sees), the variant carries "prosody". The
//! real generator draws variants from per-(prompt, position) Dirichlet
//! distributions; the synthetic generator pins variant 0. That gap in
//! variant entropy is the delta between the two data sources, realized
//! by construction.

use rand::Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_stream, Stream};

pub type TokenId = u32;
pub type BaseId = u32;
pub type TokenSequence = Vec<TokenId>;

pub const WORLD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    /// P: number of base (content) symbols.
    pub base_symbol_count: u32,
    /// S: prosodic variants per base.
    pub variant_count: u32,
    /// M: number of prompts.
    pub prompt_count: u32,
    pub canonical_length_min: u32,
    pub canonical_length_max: u32,
    /// Fraction of prompts that have real recordings.
    pub real_prompt_coverage: f64,
    /// Dirichlet concentration for per-(prompt, position) real variant distributions.
    pub variant_concentration: f64,
    /// epsilon_syn: probability that a synthetic token uses a non-zero variant.
    pub synthetic_variant_noise: f64,
    /// epsilon_real: probability that a real token flips to a different base.
    pub real_base_noise: f64,
    pub master_seed: u64,
    /// Number of distinct speaker tags cycled across prompts.
    pub speaker_tag_count: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            base_symbol_count: 16,
            variant_count: 4,
            prompt_count: 200,
            canonical_length_min: 12,
            canonical_length_max: 32,
            real_prompt_coverage: 0.4,
            variant_concentration: 0.8,
            synthetic_variant_noise: 0.005,
            real_base_noise: 0.0,
            master_seed: 0,
            speaker_tag_count: 8,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &str, detail: &str) -> Error {
            Error::Config(format!("world.{field}: {detail}"))
        }
        if self.base_symbol_count < 2 {
            return Err(bad("base_symbol_count", "must be >= 2"));
        }
        if self.variant_count < 2 {
            return Err(bad("variant_count", "must be >= 2"));
        }
        if self.prompt_count < 1 {
            return Err(bad("prompt_count", "must be >= 1"));
        }
        if self.canonical_length_min < 1 {
            return Err(bad("canonical_length_min", "must be >= 1"));
        }
        if self.canonical_length_min > self.canonical_length_max {
            return Err(bad("canonical_length_max", "must be >= canonical_length_min"));
        }
        for (name, p) in [
            ("real_prompt_coverage", self.real_prompt_coverage),
            ("synthetic_variant_noise", self.synthetic_variant_noise),
            ("real_base_noise", self.real_base_noise),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(bad(name, "must be a probability in [0,1]"));
            }
        }
        if !(self.variant_concentration > 0.0) {
            return Err(bad("variant_concentration", "must be > 0"));
        }
        if self.speaker_tag_count < 1 {
            return Err(bad("speaker_tag_count", "must be >= 1"));
        }
        Ok(())
    }
}

/// Token id layout: token = base * S + variant for base < P, and one EOS
/// id at P*S. The mapping is a bijection on [0, P*S).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub base_count: u32,
    pub variant_count: u32,
}

impl Vocab {
    pub fn size(&self) -> u32 {
        self.base_count * self.variant_count
    }

    pub fn eos_id(&self) -> TokenId {
        self.size()
    }

    pub fn token(&self, base: BaseId, variant: u32) -> TokenId {
        debug_assert!(base < self.base_count && variant < self.variant_count);
        base * self.variant_count + variant
    }

    pub fn base_of(&self, token: TokenId) -> BaseId {
        debug_assert!(token < self.size());
        token / self.variant_count
    }

    pub fn variant_of(&self, token: TokenId) -> u32 {
        debug_assert!(token < self.size());
        token % self.variant_count
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prompt {
    pub id: u32,
    /// c(x): canonical base-symbol content.
    pub canonical: Vec<BaseId>,
    pub speaker_tag: u32,
    pub in_real_coverage: bool,
}

impl Prompt {
    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Synthetic,
    Generated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Utterance {
    pub prompt_id: u32,
    pub tokens: TokenSequence,
    /// True when the sequence ended with an explicit EOS (EOS itself is
    /// never stored in `tokens`).
    pub terminated: bool,
    pub source: Source,
    pub temperature_used: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub items: Vec<Utterance>,
}

impl Corpus {
    pub fn alpha(&self) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        let syn = self
            .items
            .iter()
            .filter(|u| u.source == Source::Synthetic)
            .count();
        syn as f64 / self.items.len() as f64
    }

    pub fn real_count(&self) -> usize {
        self.items.iter().filter(|u| u.source == Source::Real).count()
    }
}

/// Immutable world: vocab, prompts, and per-(prompt, position) real
/// variant distributions. Serializable for exact experiment replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct World {
    pub format_version: u32,
    pub config: WorldConfig,
    pub vocab: Vocab,
    pub prompts: Vec<Prompt>,
    /// variant_dists[prompt][position] is a categorical over S variants,
    /// all probabilities strictly positive.
    pub variant_dists: Vec<Vec<Vec<f64>>>,
}

pub fn build_world(config: &WorldConfig) -> Result<World> {
    config.validate()?;
    let p = config.base_symbol_count;
    let s = config.variant_count;
    let m = config.prompt_count;
    let vocab = Vocab {
        base_count: p,
        variant_count: s,
    };

    // Coverage: exactly round(coverage * M) prompts flagged, chosen by a
    // seeded shuffle of prompt ids.
    let covered_count = (config.real_prompt_coverage * m as f64).round() as usize;
    let mut ids: Vec<u32> = (0..m).collect();
    let mut cov_rng = derive_stream(config.master_seed, "world/coverage", &[]);
    for i in (1..ids.len()).rev() {
        let j = cov_rng.gen_range(0..=i);
        ids.swap(i, j);
    }
    let mut covered = vec![false; m as usize];
    for &id in ids.iter().take(covered_count) {
        covered[id as usize] = true;
    }

    let mut prompts = Vec::with_capacity(m as usize);
    let mut variant_dists = Vec::with_capacity(m as usize);
    for id in 0..m {
        let mut rng = derive_stream(config.master_seed, "world/canonical", &[id as u64]);
        let len =
            rng.gen_range(config.canonical_length_min..=config.canonical_length_max) as usize;
        let canonical: Vec<BaseId> = (0..len).map(|_| rng.gen_range(0..p)).collect();
        prompts.push(Prompt {
            id,
            canonical,
            speaker_tag: id % config.speaker_tag_count,
            in_real_coverage: covered[id as usize],
        });

        let mut drng = derive_stream(config.master_seed, "world/variant_dist", &[id as u64]);
        let dirichlet = Dirichlet::new_with_size(config.variant_concentration, s as usize)
            .map_err(|e| Error::Config(format!("world.variant_concentration: {e}")))?;
        let dists: Vec<Vec<f64>> = (0..len)
            .map(|_| {
                let mut d = dirichlet.sample(&mut drng);
                // Dirichlet draws can underflow to exact zero at small
                // concentrations; the contract requires strictly positive.
                let floor = 1e-9;
                let mut total = 0.0;
                for x in d.iter_mut() {
                    if *x < floor {
                        *x = floor;
                    }
                    total += *x;
                }
                for x in d.iter_mut() {
                    *x /= total;
                }
                d
            })
            .collect();
        variant_dists.push(dists);
    }

    Ok(World {
        format_version: WORLD_FORMAT_VERSION,
        config: config.clone(),
        vocab,
        prompts,
        variant_dists,
    })
}

impl World {
    pub fn prompt(&self, id: u32) -> Result<&Prompt> {
        self.prompts
            .get(id as usize)
            .ok_or_else(|| Error::Domain(format!("unknown prompt id {id}")))
    }

    pub fn covered_prompts(&self) -> impl Iterator<Item = &Prompt> {
        self.prompts.iter().filter(|p| p.in_real_coverage)
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &std::path::Path) -> Result<World> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let world: World =
            serde_json::from_str(&text).map_err(|e| Error::Serialize(e.to_string()))?;
        if world.format_version != WORLD_FORMAT_VERSION {
            return Err(Error::Serialize(format!(
                "unsupported world format version {}",
                world.format_version
            )));
        }
        Ok(world)
    }
}

fn sample_categorical(probs: &[f64], rng: &mut Stream) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draw a "real recording": base follows the canonical (up to
/// epsilon_real flips), variant follows the world's per-position
/// distribution for this prompt.
pub fn sample_real_utterance(world: &World, prompt: &Prompt, rng: &mut Stream) -> Utterance {
    let cfg = &world.config;
    let p = cfg.base_symbol_count;
    let tokens = prompt
        .canonical
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let base = if cfg.real_base_noise > 0.0 && rng.gen::<f64>() < cfg.real_base_noise {
                let other = rng.gen_range(0..p - 1);
                if other >= c {
                    other + 1
                } else {
                    other
                }
            } else {
                c
            };
            let dist = &world.variant_dists[prompt.id as usize][i];
            let variant = sample_categorical(dist, rng) as u32;
            world.vocab.token(base, variant)
        })
        .collect();
    Utterance {
        prompt_id: prompt.id,
        tokens,
        terminated: true,
        source: Source::Real,
        temperature_used: None,
    }
}

/// Draw a "TTS output": base always canonical, variant 0 except for
/// epsilon_syn noise.
pub fn sample_synthetic_utterance(world: &World, prompt: &Prompt, rng: &mut Stream) -> Utterance {
    let cfg = &world.config;
    let s = cfg.variant_count;
    let tokens = prompt
        .canonical
        .iter()
        .map(|&c| {
            let variant = if cfg.synthetic_variant_noise > 0.0
                && rng.gen::<f64>() < cfg.synthetic_variant_noise
            {
                rng.gen_range(0..s)
            } else {
                0
            };
            world.vocab.token(c, variant)
        })
        .collect();
    Utterance {
        prompt_id: prompt.id,
        tokens,
        terminated: true,
        source: Source::Synthetic,
        temperature_used: None,
    }
}

/// Mix n_real real draws (covered prompts only, round-robin) with
/// n_synthetic synthetic draws (all prompts, round-robin), shuffled
/// deterministically by `rng`.
pub fn build_mixed_corpus(
    world: &World,
    n_real: usize,
    n_synthetic: usize,
    rng: &mut Stream,
) -> Result<Corpus> {
    if n_real + n_synthetic == 0 {
        return Err(Error::Precondition(
            "empty corpus: n_real and n_synthetic are both zero".into(),
        ));
    }
    let covered: Vec<&Prompt> = world.covered_prompts().collect();
    if n_real > 0 && covered.is_empty() {
        return Err(Error::Precondition(
            "n_real > 0 but the world has no prompts in real coverage".into(),
        ));
    }
    let mut items = Vec::with_capacity(n_real + n_synthetic);
    for i in 0..n_real {
        let prompt = covered[i % covered.len()];
        items.push(sample_real_utterance(world, prompt, rng));
    }
    for i in 0..n_synthetic {
        let prompt = &world.prompts[i % world.prompts.len()];
        items.push(sample_synthetic_utterance(world, prompt, rng));
    }
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
    Ok(Corpus { items })
}

/// The decode oracle: token -> base symbol, discarding the variant the
/// way ASR transcription discards prosody.
pub fn decode_tokens(vocab: &Vocab, tokens: &[TokenId]) -> Result<Vec<BaseId>> {
    tokens
        .iter()
        .map(|&t| {
            if t >= vocab.size() {
                Err(Error::Domain(format!(
                    "token {t} out of range for vocab size {}",
                    vocab.size()
                )))
            } else {
                Ok(vocab.base_of(t))
            }
        })
        .collect()
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance(a: &[BaseId], b: &[BaseId]) -> usize {
    let n = b.len();
    let mut prev: Vec<usize> = (0..=n).collect();
    let mut cur = vec![0usize; n + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Edit distance divided by reference length; can exceed 1.
pub fn wer_proxy(reference: &[BaseId], hypothesis: &[BaseId]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Domain("WER undefined for empty reference".into()));
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Imperfect-ASR model: each symbol flips to a uniform different base
/// with probability eta.
pub fn corrupt_hypothesis(
    hypothesis: &[BaseId],
    noise_rate: f64,
    base_count: u32,
    rng: &mut Stream,
) -> Vec<BaseId> {
    hypothesis
        .iter()
        .map(|&b| {
            if noise_rate > 0.0 && rng.gen::<f64>() < noise_rate {
                let other = rng.gen_range(0..base_count - 1);
                if other >= b {
                    other + 1
                } else {
                    other
                }
            } else {
                b
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> WorldConfig {
        WorldConfig {
            prompt_count: 10,
            master_seed: 1,
            ..WorldConfig::default()
        }
    }

    #[test]
    fn seeded_determinism() {
        let cfg = tiny_config();
        let a = build_world(&cfg).unwrap();
        let b = build_world(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn coverage_counts() {
        let mut cfg = tiny_config();
        cfg.real_prompt_coverage = 1.0;
        let w = build_world(&cfg).unwrap();
        assert_eq!(w.covered_prompts().count(), 10);

        let cfg = WorldConfig {
            master_seed: 3,
            ..WorldConfig::default()
        };
        let w = build_world(&cfg).unwrap();
        assert_eq!(w.covered_prompts().count(), 80); // round(0.4 * 200)
    }

    #[test]
    fn invalid_config_names_field() {
        let mut cfg = tiny_config();
        cfg.variant_concentration = 0.0;
        let err = build_world(&cfg).unwrap_err();
        assert!(err.to_string().contains("variant_concentration"), "{err}");
    }

    #[test]
    fn real_utterance_decodes_to_canonical_when_noise_free() {
        let cfg = tiny_config();
        let w = build_world(&cfg).unwrap();
        let prompt = &w.prompts[2];
        let mut rng = derive_stream(9, "test/real", &[2]);
        let u = sample_real_utterance(&w, prompt, &mut rng);
        assert_eq!(u.tokens.len(), prompt.len());
        let decoded = decode_tokens(&w.vocab, &u.tokens).unwrap();
        assert_eq!(decoded, prompt.canonical);

        let mut rng2 = derive_stream(9, "test/real", &[2]);
        let u2 = sample_real_utterance(&w, prompt, &mut rng2);
        assert_eq!(u.tokens, u2.tokens);
    }

    #[test]
    fn real_variant_entropy_is_high() {
        // Monte-Carlo check of the Dirichlet-drawn per-position spread.
        let cfg = tiny_config();
        let w = build_world(&cfg).unwrap();
        let prompt = &w.prompts[0];
        let mut rng = derive_stream(11, "test/real-entropy", &[]);
        let len = prompt.len();
        let mut counts = vec![vec![0u32; w.vocab.variant_count as usize]; len];
        let n = 10_000;
        for _ in 0..n {
            let u = sample_real_utterance(&w, prompt, &mut rng);
            for (i, &t) in u.tokens.iter().enumerate() {
                counts[i][w.vocab.variant_of(t) as usize] += 1;
            }
        }
        let mean_entropy: f64 = counts
            .iter()
            .map(|c| {
                c.iter()
                    .filter(|&&k| k > 0)
                    .map(|&k| {
                        let p = k as f64 / n as f64;
                        -p * p.log2()
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            / len as f64;
        assert!(mean_entropy > 0.8, "mean variant entropy {mean_entropy}");
    }

    #[test]
    fn synthetic_utterance_is_variant_zero_without_noise() {
        let mut cfg = tiny_config();
        cfg.synthetic_variant_noise = 0.0;
        let w = build_world(&cfg).unwrap();
        let prompt = &w.prompts[1];
        let mut rng = derive_stream(5, "test/syn", &[]);
        let u = sample_synthetic_utterance(&w, prompt, &mut rng);
        assert!(u.tokens.iter().all(|&t| w.vocab.variant_of(t) == 0));
        assert_eq!(decode_tokens(&w.vocab, &u.tokens).unwrap(), prompt.canonical);
    }

    #[test]
    fn synthetic_noise_binomial_bound() {
        let cfg = tiny_config(); // eps_syn = 0.005
        let w = build_world(&cfg).unwrap();
        let mut rng = derive_stream(17, "test/syn-noise", &[]);
        let mut total = 0usize;
        let mut noisy = 0usize;
        while total < 10_000 {
            for prompt in &w.prompts {
                let u = sample_synthetic_utterance(&w, prompt, &mut rng);
                for &t in &u.tokens {
                    total += 1;
                    if w.vocab.variant_of(t) != 0 {
                        noisy += 1;
                    }
                }
            }
        }
        // Note: noise draws a uniform variant which can itself be 0, so the
        // observable rate is eps * (S-1)/S.
        let p = 0.005 * 3.0 / 4.0;
        let mean = p * total as f64;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (noisy as f64 - mean).abs() <= 3.0 * sigma,
            "noisy={noisy} expected {mean}±{}",
            3.0 * sigma
        );
    }

    #[test]
    fn mixed_corpus_alpha_bookkeeping() {
        let cfg = tiny_config();
        let w = build_world(&cfg).unwrap();
        let mut rng = derive_stream(2, "test/corpus", &[]);
        let c = build_mixed_corpus(&w, 300, 300, &mut rng).unwrap();
        assert!((c.alpha() - 0.5).abs() < 1e-15);

        let mut rng = derive_stream(2, "test/corpus", &[1]);
        let c = build_mixed_corpus(&w, 300, 1200, &mut rng).unwrap();
        assert!((c.alpha() - 0.8).abs() < 1e-15);

        let mut rng = derive_stream(2, "test/corpus", &[2]);
        let c = build_mixed_corpus(&w, 0, 100, &mut rng).unwrap();
        assert!((c.alpha() - 1.0).abs() < 1e-15);
        assert!(c.items.iter().all(|u| u.source == Source::Synthetic));

        let mut rng = derive_stream(2, "test/corpus", &[3]);
        assert!(build_mixed_corpus(&w, 0, 0, &mut rng).is_err());
    }

    #[test]
    fn corpus_coverage_error() {
        let mut cfg = tiny_config();
        cfg.real_prompt_coverage = 0.0;
        let w = build_world(&cfg).unwrap();
        let mut rng = derive_stream(2, "test/corpus", &[4]);
        assert!(build_mixed_corpus(&w, 10, 0, &mut rng).is_err());
    }

    #[test]
    fn decode_examples() {
        let vocab = Vocab {
            base_count: 16,
            variant_count: 4,
        };
        assert_eq!(decode_tokens(&vocab, &[13]).unwrap(), vec![3]);
        assert_eq!(decode_tokens(&vocab, &[]).unwrap(), Vec::<BaseId>::new());
        assert_eq!(decode_tokens(&vocab, &[0, 1, 2, 3]).unwrap(), vec![0, 0, 0, 0]);
        assert!(decode_tokens(&vocab, &[64]).is_err());
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer_proxy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        let w = wer_proxy(&[1, 2, 3], &[1, 2]).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-12);
        let w = wer_proxy(&[1, 2, 3, 4], &[1, 9, 3, 4]).unwrap();
        assert!((w - 0.25).abs() < 1e-12);
        assert!(wer_proxy(&[], &[1]).is_err());
    }

    #[test]
    fn corrupt_hypothesis_examples() {
        let mut rng = derive_stream(3, "test/corrupt", &[]);
        let h: Vec<BaseId> = (0..100).map(|i| i % 7).collect();
        assert_eq!(corrupt_hypothesis(&h, 0.0, 16, &mut rng), h);

        // eta = 1 with two bases forces every symbol to flip.
        let h2 = vec![0, 1, 0, 1];
        let flipped = corrupt_hypothesis(&h2, 1.0, 2, &mut rng);
        assert_eq!(flipped, vec![1, 0, 1, 0]);

        let big: Vec<BaseId> = vec![0; 10_000];
        let noisy = corrupt_hypothesis(&big, 0.1, 16, &mut rng);
        let subs = noisy.iter().filter(|&&b| b != 0).count() as f64;
        let sigma = (10_000.0f64 * 0.1 * 0.9).sqrt();
        assert!((subs - 1000.0).abs() <= 3.0 * sigma, "subs={subs}");
    }

    #[test]
    fn entropy_gap_between_real_and_synthetic() {
        // The delta of the erosion analysis: real per-token entropy beats
        // synthetic by at least 0.5 bits with defaults.
        let cfg = WorldConfig {
            master_seed: 21,
            ..WorldConfig::default()
        };
        let w = build_world(&cfg).unwrap();
        let mut rng = derive_stream(21, "test/gap", &[]);
        let mut real_tokens = Vec::new();
        let mut syn_tokens = Vec::new();
        let covered: Vec<&Prompt> = w.covered_prompts().collect();
        for i in 0..1000usize {
            let rp = covered[i % covered.len()];
            real_tokens.extend(sample_real_utterance(&w, rp, &mut rng).tokens);
            let sp = &w.prompts[i % w.prompts.len()];
            syn_tokens.extend(sample_synthetic_utterance(&w, sp, &mut rng).tokens);
        }
        let h = |toks: &[TokenId]| {
            let mut counts = vec![0usize; w.vocab.size() as usize];
            for &t in toks {
                counts[t as usize] += 1;
            }
            let n = toks.len() as f64;
            counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.log2()
                })
                .sum::<f64>()
        };
        let gap = h(&real_tokens) - h(&syn_tokens);
        assert!(gap >= 0.5, "entropy gap {gap}");
    }

    #[test]
    fn world_json_roundtrip() {
        let cfg = tiny_config();
        let w = build_world(&cfg).unwrap();
        let dir = std::env::temp_dir().join("erosionlab-world-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("world.json");
        w.save_json(&path).unwrap();
        let w2 = World::load_json(&path).unwrap();
        assert_eq!(serde_json::to_string(&w).unwrap(), serde_json::to_string(&w2).unwrap());
    }
}
