//! Experiment configuration: one TOML document addresses every knob by
//! dotted key (e.g. `world.prompt_count = 64`, `judge.tau_w = 0.35`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgsa::DgsaConfig;
use crate::error::{Error, Result};
use crate::policy::GenerationConfig;
use crate::tdsc::{JudgeConfig, TdscAblation, TdscTrainConfig, TemperatureSchedule};
use crate::world::WorldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sft,
    Dgsa,
    StandardDpo,
    RejectionSampling,
    SelfTraining,
    Tdsc,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Sft => "sft",
            Method::Dgsa => "dgsa",
            Method::StandardDpo => "standard_dpo",
            Method::RejectionSampling => "rejection_sampling",
            Method::SelfTraining => "self_training",
            Method::Tdsc => "tdsc",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub alpha_grid: Vec<f64>,
    /// Fixed real-utterance anchor; synthetic counts scale off it.
    pub n_real: usize,
    pub master_seed: u64,
    pub replicates: usize,
    pub method: Method,
    pub sft_epochs: usize,
    pub sft_learning_rate: f64,
    pub generation: GenerationConfig,
    pub judge: JudgeConfig,
    pub schedule: TemperatureSchedule,
    pub dgsa: DgsaConfig,
    pub tdsc_train: TdscTrainConfig,
    pub tdsc_ablation: TdscAblation,
    pub tdsc_iterations: usize,
    /// Candidate count for the rejection-sampling baseline.
    pub best_of_n: usize,
    /// Synthetic ratio at which alignment methods are compared.
    pub comparison_alpha: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: WorldConfig::default(),
            alpha_grid: vec![0.03, 0.09, 0.15, 0.25, 0.40, 0.50, 0.60, 0.67, 0.80, 1.00],
            n_real: 200,
            master_seed: 0,
            replicates: 3,
            method: Method::Sft,
            sft_epochs: 90,
            sft_learning_rate: 0.03,
            generation: GenerationConfig::default(),
            judge: JudgeConfig::default(),
            schedule: TemperatureSchedule::default(),
            dgsa: DgsaConfig::default(),
            tdsc_train: TdscTrainConfig::default(),
            tdsc_ablation: TdscAblation::default(),
            tdsc_iterations: 5,
            best_of_n: 12,
            comparison_alpha: 0.8,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.judge.validate()?;
        self.schedule.validate()?;
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid is empty".into()));
        }
        for pair in self.alpha_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config(format!(
                    "alpha_grid must be strictly ascending: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &a in &self.alpha_grid {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("alpha_grid value {a} outside [0,1]")));
            }
        }
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.comparison_alpha) {
            return Err(Error::Config(format!(
                "comparison_alpha {} outside [0,1]",
                self.comparison_alpha
            )));
        }
        if self.best_of_n < 1 {
            return Err(Error::Config("best_of_n must be >= 1".into()));
        }
        if self.n_real == 0 && self.alpha_grid.iter().any(|&a| a < 1.0) {
            return Err(Error::Config(
                "n_real = 0 only makes sense with a pure-synthetic grid".into(),
            ));
        }
        Ok(())
    }

    pub fn load_toml(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Synthetic draw count for ratio `alpha` against the fixed real
    /// anchor: round(n_real * alpha / (1 - alpha)). Pure-synthetic alpha=1
    /// keeps the total sample budget at five anchors' worth.
    pub fn corpus_counts(&self, alpha: f64) -> Result<(usize, usize)> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha {alpha} outside [0,1]")));
        }
        if (alpha - 1.0).abs() < 1e-12 {
            return Ok((0, self.n_real.max(1) * 5));
        }
        let n_syn = (self.n_real as f64 * alpha / (1.0 - alpha)).round() as usize;
        Ok((self.n_real, n_syn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_count_examples() {
        let c = ExperimentConfig::default();
        assert_eq!(c.corpus_counts(0.5).unwrap(), (200, 200));
        assert_eq!(c.corpus_counts(0.8).unwrap(), (200, 800));
        let (r, s) = c.corpus_counts(1.0).unwrap();
        assert_eq!(r, 0);
        assert!(s > 0);
        // Realized ratios match the requested alpha.
        for &a in &c.alpha_grid {
            let (r, s) = c.corpus_counts(a).unwrap();
            let realized = s as f64 / (r + s) as f64;
            assert!((realized - a).abs() < 0.01, "alpha {a} realized {realized}");
        }
    }

    #[test]
    fn default_validates() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn grid_must_ascend() {
        let mut c = ExperimentConfig::default();
        c.alpha_grid = vec![0.5, 0.5];
        assert!(c.validate().is_err());
        c.alpha_grid = vec![0.8, 0.3];
        assert!(c.validate().is_err());
        c.alpha_grid = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_dotted_keys_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "master_seed = 7\nreplicates = 2\nmethod = \"tdsc\"\n\
             world.prompt_count = 32\njudge.tau_w = 0.35\n\
             schedule.curriculum_rate = 0.05\ndgsa.alpha_star = 0.4\n\
             alpha_grid = [0.1, 0.9]\n",
        )
        .unwrap();
        let c = ExperimentConfig::load_toml(&path).unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.method, Method::Tdsc);
        assert_eq!(c.world.prompt_count, 32);
        assert!((c.judge.tau_w - 0.35).abs() < 1e-12);
        assert!((c.schedule.curriculum_rate - 0.05).abs() < 1e-12);
        assert!((c.dgsa.alpha_star - 0.4).abs() < 1e-12);
        // Unknown keys are config errors, not silent typo sinks.
        std::fs::write(&path, "master_sed = 7\n").unwrap();
        let err = ExperimentConfig::load_toml(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
