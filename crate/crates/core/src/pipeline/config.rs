use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{CodebookConfig, EmbeddingKind};
use crate::error::{Error, Result};
use crate::learn::TrainConfig;
use crate::ranker::Ranker;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorSource {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub kind: EmbeddingKind,
    #[serde(flatten)]
    pub codebook: CodebookConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            kind: EmbeddingKind::V,
            codebook: CodebookConfig::default(),
        }
    }
}

/// Either a stratified split of the labeled samples or explicit id lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitConfig {
    Stratified {
        train_fraction: f64,
    },
    Explicit {
        train_ids: PathBuf,
        test_ids: PathBuf,
    },
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig::Stratified {
            train_fraction: 0.8,
        }
    }
}

fn default_cutoff() -> usize {
    10
}

/// Declarative description of one experiment. Relative paths resolve
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub descriptors: Vec<DescriptorSource>,
    pub rankers: Vec<Ranker>,
    #[serde(rename = "L", default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub include_self: bool,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub labels: PathBuf,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// AP@K cutoffs for ranking-style evaluation.
    #[serde(default)]
    pub cutoffs: Vec<usize>,
    /// Class whose probability ranks the test samples for AP@K. Defaults
    /// to the second class of a binary task.
    #[serde(default)]
    pub positive_class: Option<String>,
    /// L values for `sweep-l`.
    #[serde(default = "default_sweep")]
    pub sweep_l: Vec<usize>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_sweep() -> Vec<usize> {
    vec![1, 3, 5, 10]
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rankers.is_empty() {
            return Err(Error::Config("at least one ranker is required".into()));
        }
        if self.cutoff == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for d in &self.descriptors {
            if !names.insert(d.name.as_str()) {
                return Err(Error::Config(format!(
                    "descriptor `{}` declared twice",
                    d.name
                )));
            }
        }
        for r in &self.rankers {
            if !names.contains(r.descriptor.as_str()) {
                return Err(Error::Config(format!(
                    "ranker references unknown descriptor `{}`",
                    r.descriptor
                )));
            }
        }
        if let SplitConfig::Stratified { train_fraction } = self.split {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::Config(format!(
                    "train_fraction {train_fraction} outside (0, 1)"
                )));
            }
        }
        if self.sweep_l.contains(&0) {
            return Err(Error::Config("sweep_l values must be at least 1".into()));
        }
        self.train.validate()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Effective estimator config: the pipeline seed drives fold assignment.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
