//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineKind, BaselineSpec};
use crate::error::{Error, Result};
use crate::selector::SelectorConfig;
use crate::synth::SynthConfig;
use crate::teacher::SimulatedTeacherConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Llkd,
    LlkdW,
    Random,
    NoDs,
    EntropyScore,
    TopUncertainty,
    FixedConfThreshold,
    LlkdWoTc,
    LlkdWoSu,
    LlkdWoTcSu,
}

impl MethodKind {
    pub fn baseline_kind(self) -> Option<BaselineKind> {
        Some(match self {
            Self::Llkd | Self::LlkdW => return None,
            Self::Random => BaselineKind::Random,
            Self::NoDs => BaselineKind::NoDs,
            Self::EntropyScore => BaselineKind::EntropyScore,
            Self::TopUncertainty => BaselineKind::TopUncertainty,
            Self::FixedConfThreshold => BaselineKind::FixedConfThreshold,
            Self::LlkdWoTc => BaselineKind::LlkdWoTc,
            Self::LlkdWoSu => BaselineKind::LlkdWoSu,
            Self::LlkdWoTcSu => BaselineKind::LlkdWoTcSu,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Llkd => "llkd",
            Self::LlkdW => "llkd_w",
            Self::Random => "random",
            Self::NoDs => "no_ds",
            Self::EntropyScore => "entropy_score",
            Self::TopUncertainty => "top_uncertainty",
            Self::FixedConfThreshold => "fixed_conf_threshold",
            Self::LlkdWoTc => "llkd_wo_tc",
            Self::LlkdWoSu => "llkd_wo_su",
            Self::LlkdWoTcSu => "llkd_wo_tc_su",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_METHODS
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ALL_METHODS.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

pub const ALL_METHODS: [MethodKind; 10] = [
    MethodKind::Llkd,
    MethodKind::LlkdW,
    MethodKind::Random,
    MethodKind::NoDs,
    MethodKind::EntropyScore,
    MethodKind::TopUncertainty,
    MethodKind::FixedConfThreshold,
    MethodKind::LlkdWoTc,
    MethodKind::LlkdWoSu,
    MethodKind::LlkdWoTcSu,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl MethodConfig {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            kind,
            ratio: None,
            threshold: None,
        }
    }

    /// Baseline spec for the non-adaptive kinds, seeded with the run seed.
    pub fn baseline(&self, seed: u64) -> Option<BaselineSpec> {
        self.kind.baseline_kind().map(|kind| BaselineSpec {
            kind,
            ratio: self.ratio,
            threshold: self.threshold,
            rng_seed: seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.baseline(0) {
            Some(spec) => spec.validate(),
            None if self.ratio.is_some() || self.threshold.is_some() => Err(Error::Config(format!(
                "{} takes neither ratio nor threshold",
                self.kind.name()
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        if let Some(r) = self.ratio {
            write!(f, "_r{r}")?;
        }
        if let Some(t) = self.threshold {
            write!(f, "_t{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthConfig>,
    /// Dataset dump written by `gen-data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulated: Option<SimulatedTeacherConfig>,
    /// Newline-delimited JSON teacher outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    6
}
fn default_batch() -> usize {
    32
}

impl Default for StudentConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_lr(),
            epochs: default_epochs(),
            batch_size: default_batch(),
        }
    }
}

/// Value lists for `sweep`. Absent fields keep the base config's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub lambda_s: Vec<f64>,
    #[serde(default)]
    pub lambda_t: Vec<f64>,
    #[serde(default)]
    pub beta_s1: Vec<f64>,
    #[serde(default)]
    pub beta_s2: Vec<f64>,
    #[serde(default)]
    pub beta_t1: Vec<f64>,
    #[serde(default)]
    pub beta_t2: Vec<f64>,
    #[serde(default)]
    pub ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Steps between validation / threshold-evaluation records.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_bins")]
    pub calibration_bins: usize,
    pub method: MethodConfig,
    pub data: DataConfig,
    pub teacher: TeacherConfig,
    #[serde(default)]
    pub student: StudentConfig,
    #[serde(default)]
    pub selector: SelectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_eval_every() -> usize {
    100
}
fn default_bins() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses and validates a config file. Relative data, teacher and output
    /// paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data.path, &mut cfg.teacher.path, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be >= 1".into());
        }
        if self.calibration_bins < 2 {
            return bad("calibration_bins must be >= 2".into());
        }
        if self.student.batch_size == 0 || self.student.epochs == 0 {
            return bad("batch_size and epochs must be >= 1".into());
        }
        if !(self.student.learning_rate > 0.0 && self.student.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.student.learning_rate));
        }
        let s = &self.selector;
        for (name, v) in [("lambda_s", s.lambda_s), ("lambda_t", s.lambda_t)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        for (name, v) in [("beta_s1", s.beta_s1), ("beta_s2", s.beta_s2), ("beta_t1", s.beta_t1), ("beta_t2", s.beta_t2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        self.method.validate()?;
        match (&self.data.synthetic, &self.data.path) {
            (Some(syn), None) => syn.validate()?,
            (None, Some(_)) => {}
            _ => return bad("data needs exactly one of `synthetic` or `path`".into()),
        }
        match (&self.teacher.simulated, &self.teacher.path) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("teacher needs exactly one of `simulated` or `path`".into()),
        }
        Ok(())
    }

    /// The reference desk benchmark: K = 5, d = 20, 5000/500/2000 samples,
    /// separation 2, simulated teacher at 70% accuracy with calibration
    /// strength 2, B = 32, 6 epochs, lr 0.1, all momenta 0.9, all exponents 1.
    pub fn reference_benchmark(method: MethodConfig, seeds: Vec<u64>) -> Self {
        Self {
            output_dir: None,
            seeds,
            eval_every: default_eval_every(),
            calibration_bins: default_bins(),
            method,
            data: DataConfig {
                synthetic: Some(SynthConfig {
                    k: 5,
                    d: 20,
                    n_train: 5000,
                    n_val: 500,
                    n_test: 2000,
                    class_separation: 2.0,
                    rng_seed: 0,
                    class_proportions: None,
                }),
                path: None,
            },
            teacher: TeacherConfig {
                simulated: Some(SimulatedTeacherConfig {
                    base_accuracy: 0.7,
                    calibration_strength: 2.0,
                    confidence_shape: (4.0, 2.0),
                    rng_seed: 0,
                }),
                path: None,
            },
            student: StudentConfig::default(),
            selector: SelectorConfig::default(),
            sweep: None,
        }
    }
}
