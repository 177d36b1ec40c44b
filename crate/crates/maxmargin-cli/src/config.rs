//! TOML experiment configuration.
//!
//! One file describes a full experiment: data pipeline, kernel, penalty
//! schedule, and a list of algorithms to run on the shared instance. Every
//! knob that affects randomness takes a seed, so a config file pins its
//! outputs exactly.
//!
//! ```toml
//! seed = 7
//! iterations = 500
//! gamma = "auto"            # or a positive number
//! output_dir = "runs/demo"
//! compute_oracle = true
//!
//! [data]
//! source = "support_anchor" # or "gaussian_blobs", "file"
//! n_total = 80
//! noise_p = 0.0
//! split = 1.0
//! standardize = false
//!
//! [kernel]
//! kind = "linear"           # or "gaussian" with sigma2 = ...
//!
//! [schedule]
//! family = "linear"         # constant | log | sqrt | linear | quadratic | exponential
//! lambda0 = 4.0
//!
//! [[algorithms]]
//! kind = "alg1"
//!
//! [[algorithms]]
//! kind = "alg2"
//! alpha = 10.0
//! ```

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use maxmargin::data::{DataConfig, DataSource, FileFormat};
use maxmargin::model::Kernel;
use maxmargin::solvers::{Schedule, ScheduleFamily};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read config file: {0}")]
    Read(#[from] std::io::Error),
    #[error("could not parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Step size setting: a literal positive number or the string `"auto"`,
/// which resolves to `0.999 / op_norm` at run time.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Value(f64),
    Named(String),
}

impl Default for GammaSetting {
    fn default() -> Self {
        GammaSetting::Named("auto".to_string())
    }
}

impl GammaSetting {
    /// `None` means automatic; `Some` is a validated explicit step.
    pub fn resolve(&self) -> Result<Option<f64>, ConfigError> {
        match self {
            GammaSetting::Value(v) => {
                if *v > 0.0 && v.is_finite() {
                    Ok(Some(*v))
                } else {
                    Err(invalid(format!(
                        "gamma must be positive and finite, got {v}"
                    )))
                }
            }
            GammaSetting::Named(s) if s == "auto" => Ok(None),
            GammaSetting::Named(s) => Err(invalid(format!(
                "gamma must be a positive number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    SupportAnchor,
    GaussianBlobs,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub source: SourceKind,
    pub n_total: Option<usize>,
    pub std: Option<f64>,
    pub path: Option<PathBuf>,
    pub format: Option<FormatKind>,
    #[serde(default)]
    pub noise_p: f64,
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default)]
    pub standardize: bool,
    /// Defaults to the top-level seed.
    pub seed: Option<u64>,
}

fn default_split() -> f64 {
    1.0
}

impl DataSection {
    pub fn to_data_config(&self, default_seed: u64) -> Result<DataConfig, ConfigError> {
        let source = match self.source {
            SourceKind::SupportAnchor => DataSource::SupportAnchor {
                n_total: self
                    .n_total
                    .ok_or_else(|| invalid("support_anchor needs n_total"))?,
            },
            SourceKind::GaussianBlobs => DataSource::GaussianBlobs {
                n_total: self
                    .n_total
                    .ok_or_else(|| invalid("gaussian_blobs needs n_total"))?,
                std: self.std.ok_or_else(|| invalid("gaussian_blobs needs std"))?,
            },
            SourceKind::File => DataSource::File {
                path: self
                    .path
                    .clone()
                    .ok_or_else(|| invalid("file source needs path"))?,
                format: match self.format.ok_or_else(|| invalid("file source needs format"))? {
                    FormatKind::Csv => FileFormat::Csv,
                    FormatKind::Libsvm => FileFormat::Libsvm,
                },
            },
        };
        Ok(DataConfig {
            source,
            noise_p: self.noise_p,
            split: self.split,
            standardize: self.standardize,
            seed: self.seed.unwrap_or(default_seed),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    pub sigma2: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: KernelKind::Linear,
            sigma2: None,
        }
    }
}

impl KernelSection {
    pub fn to_kernel(&self) -> Result<Kernel, ConfigError> {
        match self.kind {
            KernelKind::Linear => Ok(Kernel::Linear),
            KernelKind::Gaussian => {
                let sigma2 = self
                    .sigma2
                    .ok_or_else(|| invalid("gaussian kernel needs sigma2"))?;
                let kernel = Kernel::Gaussian { sigma2 };
                kernel
                    .validate()
                    .map_err(|e| invalid(format!("bad kernel: {e}")))?;
                Ok(kernel)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Constant,
    Log,
    Sqrt,
    Linear,
    Quadratic,
    Exponential,
}

impl From<FamilyKind> for ScheduleFamily {
    fn from(f: FamilyKind) -> Self {
        match f {
            FamilyKind::Constant => ScheduleFamily::Constant,
            FamilyKind::Log => ScheduleFamily::Log,
            FamilyKind::Sqrt => ScheduleFamily::Sqrt,
            FamilyKind::Linear => ScheduleFamily::Linear,
            FamilyKind::Quadratic => ScheduleFamily::Quadratic,
            FamilyKind::Exponential => ScheduleFamily::Exponential,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub family: FamilyKind,
    pub lambda0: f64,
}

impl ScheduleSection {
    pub fn to_schedule(&self) -> Result<Schedule, ConfigError> {
        Schedule::new(self.family.into(), self.lambda0)
            .map_err(|e| invalid(format!("bad schedule: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Exponential,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Constant,
    InvSqrt,
}

/// One algorithm entry; an experiment runs each on the shared instance.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSection {
    /// Plain iteratively regularized proximal gradient.
    Alg1,
    /// Inertial variant.
    Alg2 {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Classical path following: one converged dual solve per penalty.
    TikhonovPath {
        lambdas: Vec<f64>,
        #[serde(default = "default_tik_tol")]
        tol: f64,
        #[serde(default = "default_tik_iter")]
        max_iter: usize,
    },
    /// Gradient descent on a smooth margin loss.
    GdMargin {
        loss: LossKind,
        step: f64,
        iterations: Option<u64>,
        w0: Option<Vec<f64>>,
    },
    /// Subgradient descent on the hinge loss.
    SubgradHinge {
        rule: RuleKind,
        step: f64,
        iterations: Option<u64>,
        w0: Option<Vec<f64>>,
    },
}

fn default_alpha() -> f64 {
    10.0
}

fn default_tik_tol() -> f64 {
    1e-10
}

fn default_tik_iter() -> usize {
    1_000_000
}

impl AlgorithmSection {
    /// File-name stem for this entry's trace.
    pub fn name(&self) -> String {
        match self {
            AlgorithmSection::Alg1 => "alg1".to_string(),
            AlgorithmSection::Alg2 { alpha } => format!("alg2_alpha{alpha}"),
            AlgorithmSection::TikhonovPath { .. } => "tikhonov_path".to_string(),
            AlgorithmSection::GdMargin { loss, .. } => match loss {
                LossKind::Exponential => "gd_exponential".to_string(),
                LossKind::Logistic => "gd_logistic".to_string(),
            },
            AlgorithmSection::SubgradHinge { .. } => "subgrad_hinge".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            AlgorithmSection::Alg1 => Ok(()),
            AlgorithmSection::Alg2 { alpha } => {
                if *alpha >= 3.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("alg2 needs alpha >= 3, got {alpha}")))
                }
            }
            AlgorithmSection::TikhonovPath {
                lambdas,
                tol,
                max_iter,
            } => {
                if lambdas.is_empty() {
                    return Err(invalid("tikhonov_path needs at least one lambda"));
                }
                for &l in lambdas {
                    if !(l.is_finite() && l >= 1e-300) {
                        return Err(invalid(format!(
                            "tikhonov_path lambdas must be finite and >= 1e-300, got {l}"
                        )));
                    }
                }
                if !(*tol > 0.0 && tol.is_finite()) {
                    return Err(invalid(format!("tikhonov_path tol must be positive, got {tol}")));
                }
                if *max_iter == 0 {
                    return Err(invalid("tikhonov_path max_iter must be positive"));
                }
                Ok(())
            }
            AlgorithmSection::GdMargin { step, .. }
            | AlgorithmSection::SubgradHinge { step, .. } => {
                if *step > 0.0 && step.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("step must be positive and finite, got {step}")))
                }
            }
        }
    }
}

/// Top-level experiment description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub iterations: u64,
    #[serde(default)]
    pub gamma: GammaSetting,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub compute_oracle: bool,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    pub data: DataSection,
    #[serde(default)]
    pub kernel: KernelSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub algorithms: Vec<AlgorithmSection>,
}

fn default_oracle_tol() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gamma.resolve()?;
        if self.algorithms.is_empty() {
            return Err(invalid("at least one [[algorithms]] entry is required"));
        }
        for section in &self.algorithms {
            section.validate()?;
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol.is_finite()) {
            return Err(invalid(format!(
                "oracle_tol must be positive and finite, got {}",
                self.oracle_tol
            )));
        }
        self.schedule.to_schedule()?;
        self.kernel.to_kernel()?;
        self.data.to_data_config(self.seed)?;
        Ok(())
    }
}
