//! Line-oriented `key = value` configuration.
//!
//! `#` starts a comment. Every key has a default; unknown or repeated keys
//! are errors. The config hash covers every key except `output_dir`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::beatgrid::INPUT_SIZE;
use crate::datasets::{FinetuneSetConfig, SelectionConfig, SynthConfig};
use crate::gan::{FinetuneConfig, GanTrainConfig};
use crate::normpool::EstimatorConfig;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}` = `{value}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
}

/// Size of the synthetic cohort written by `synth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub train_beats: usize,
    pub s_bearing_records: usize,
    pub test_records: usize,
    pub test_beats: usize,
    pub noise_mv: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            train_beats: 600,
            s_bearing_records: 16,
            test_records: 22,
            test_beats: 1000,
            noise_mv: 0.01,
        }
    }
}

impl SynthSettings {
    pub fn cohort(&self) -> SynthConfig {
        let mut c = SynthConfig::split_cohort(self.train_beats, self.s_bearing_records, self.test_records, self.test_beats);
        c.noise_mv = self.noise_mv;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub channel_index: usize,
    pub matrix_size: usize,
    pub gan: GanTrainConfig,
    pub finetune: FinetuneConfig,
    pub estimator: EstimatorConfig,
    pub selection: SelectionConfig,
    pub finetune_set: FinetuneSetConfig,
    pub synth: SynthSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            seed: 0,
            channel_index: 0,
            matrix_size: INPUT_SIZE,
            gan: GanTrainConfig::default(),
            finetune: FinetuneConfig::default(),
            estimator: EstimatorConfig::default(),
            selection: SelectionConfig::default(),
            finetune_set: FinetuneSetConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

/// Every accepted key, in canonical order.
pub const KEYS: [&str; 37] = [
    "data_dir",
    "output_dir",
    "seed",
    "channel_index",
    "matrix_size",
    "gan.iterations",
    "gan.per_class",
    "gan.g_updates",
    "gan.telemetry_every",
    "gan.fd_per_class",
    "gan.fd_reference_steps",
    "gan.learning_rate",
    "finetune.batch",
    "finetune.target_accuracy",
    "finetune.plateau_epochs",
    "finetune.plateau_delta",
    "finetune.max_epochs",
    "finetune.learning_rate",
    "estimator.base_threshold",
    "estimator.max_pool",
    "selection.repetitions",
    "selection.n_draw",
    "selection.s_draw",
    "selection.n_test",
    "selection.min_s_records",
    "selection.epochs",
    "selection.batch",
    "selection.learning_rate",
    "selection.keep",
    "finetune_set.real_per_class",
    "generated_per_class",
    "finetune_set.estimated_max",
    "synth.train_beats",
    "synth.s_bearing_records",
    "synth.test_records",
    "synth.test_beats",
    "synth.noise_mv",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn check(ok: bool, key: &str, value: &str, reason: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        })
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply(text)?;
        Ok(config)
    }

    /// Applies the keys of a config file on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: n + 1,
                    key: key.to_string(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line: n + 1,
                    key: key.to_string(),
                });
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        match key {
            "data_dir" => self.data_dir = PathBuf::from(v),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "seed" => self.seed = parse(key, v)?,
            "channel_index" => self.channel_index = parse(key, v)?,
            "matrix_size" => {
                self.matrix_size = parse(key, v)?;
                check(self.matrix_size == INPUT_SIZE, key, v, "the network topology requires 73")?;
            }
            "gan.iterations" => self.gan.iterations = parse(key, v)?,
            "gan.per_class" => {
                self.gan.per_class = parse(key, v)?;
                check(self.gan.per_class >= 1, key, v, "must be at least 1")?;
            }
            "gan.g_updates" => self.gan.g_updates = parse(key, v)?,
            "gan.telemetry_every" => {
                self.gan.telemetry_every = parse(key, v)?;
                check(self.gan.telemetry_every >= 1, key, v, "must be at least 1")?;
            }
            "gan.fd_per_class" => {
                self.gan.fd_per_class = parse(key, v)?;
                check(self.gan.fd_per_class >= 1, key, v, "must be at least 1")?;
            }
            "gan.fd_reference_steps" => self.gan.fd_reference_steps = parse(key, v)?,
            "gan.learning_rate" => self.gan.learning_rate = positive(key, v)?,
            "finetune.batch" => {
                self.finetune.batch = parse(key, v)?;
                check(self.finetune.batch >= 1, key, v, "must be at least 1")?;
            }
            "finetune.target_accuracy" => self.finetune.target_accuracy = parse(key, v)?,
            "finetune.plateau_epochs" => self.finetune.plateau_epochs = parse(key, v)?,
            "finetune.plateau_delta" => self.finetune.plateau_delta = parse(key, v)?,
            "finetune.max_epochs" => {
                self.finetune.max_epochs = parse(key, v)?;
                check(self.finetune.max_epochs >= 1, key, v, "must be at least 1")?;
            }
            "finetune.learning_rate" => self.finetune.learning_rate = positive(key, v)?,
            "estimator.base_threshold" => {
                self.estimator.base_threshold = parse(key, v)?;
                check((0.0..=1.0).contains(&self.estimator.base_threshold), key, v, "must lie in [0, 1]")?;
            }
            "estimator.max_pool" => self.estimator.max_pool = parse(key, v)?,
            "selection.repetitions" => self.selection.repetitions = parse(key, v)?,
            "selection.n_draw" => self.selection.n_draw = parse(key, v)?,
            "selection.s_draw" => self.selection.s_draw = parse(key, v)?,
            "selection.n_test" => self.selection.n_test = parse(key, v)?,
            "selection.min_s_records" => self.selection.min_s_records = parse(key, v)?,
            "selection.epochs" => self.selection.epochs = parse(key, v)?,
            "selection.batch" => {
                self.selection.batch = parse(key, v)?;
                check(self.selection.batch >= 1, key, v, "must be at least 1")?;
            }
            "selection.learning_rate" => self.selection.learning_rate = positive(key, v)?,
            "selection.keep" => self.selection.keep = parse(key, v)?,
            "finetune_set.real_per_class" => self.finetune_set.real_per_class = parse(key, v)?,
            "generated_per_class" => {
                self.finetune_set.generated_per_class = parse(key, v)?;
                check(self.finetune_set.generated_per_class <= 4000, key, v, "must lie in 0..=4000")?;
            }
            "finetune_set.estimated_max" => self.finetune_set.estimated_max = parse(key, v)?,
            "synth.train_beats" => self.synth.train_beats = parse(key, v)?,
            "synth.s_bearing_records" => {
                self.synth.s_bearing_records = parse(key, v)?;
                check(self.synth.s_bearing_records <= 22, key, v, "at most 22 training records")?;
            }
            "synth.test_records" => {
                self.synth.test_records = parse(key, v)?;
                check(self.synth.test_records <= 22, key, v, "at most 22 test records")?;
            }
            "synth.test_beats" => self.synth.test_beats = parse(key, v)?,
            "synth.noise_mv" => {
                self.synth.noise_mv = parse(key, v)?;
                check(self.synth.noise_mv >= 0.0, key, v, "must be non-negative")?;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// `(key, value)` for every key, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = &self.gan;
        let f = &self.finetune;
        let s = &self.selection;
        let values = [
            self.data_dir.display().to_string(),
            self.output_dir.display().to_string(),
            self.seed.to_string(),
            self.channel_index.to_string(),
            self.matrix_size.to_string(),
            g.iterations.to_string(),
            g.per_class.to_string(),
            g.g_updates.to_string(),
            g.telemetry_every.to_string(),
            g.fd_per_class.to_string(),
            g.fd_reference_steps.to_string(),
            g.learning_rate.to_string(),
            f.batch.to_string(),
            f.target_accuracy.to_string(),
            f.plateau_epochs.to_string(),
            f.plateau_delta.to_string(),
            f.max_epochs.to_string(),
            f.learning_rate.to_string(),
            self.estimator.base_threshold.to_string(),
            self.estimator.max_pool.to_string(),
            s.repetitions.to_string(),
            s.n_draw.to_string(),
            s.s_draw.to_string(),
            s.n_test.to_string(),
            s.min_s_records.to_string(),
            s.epochs.to_string(),
            s.batch.to_string(),
            s.learning_rate.to_string(),
            s.keep.to_string(),
            self.finetune_set.real_per_class.to_string(),
            self.finetune_set.generated_per_class.to_string(),
            self.finetune_set.estimated_max.to_string(),
            self.synth.train_beats.to_string(),
            self.synth.s_bearing_records.to_string(),
            self.synth.test_records.to_string(),
            self.synth.test_beats.to_string(),
            self.synth.noise_mv.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    /// The config as a file that parses back to the same value.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 over the canonical entries, `output_dir` excluded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if k != "output_dir" {
                h.update(format!("{k}={v}\n").as_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse(key, value)?;
    check(v > 0.0 && v.is_finite(), key, value, "must be positive")?;
    Ok(v)
}
