//! Experiment configuration: dataset sources, the model matrix, training and
//! sampling settings, seeds, and the noise grid.

use crate::digest::{fnv1a64, hex64};
use crate::error::{Error, Result};
use crate::gbrbm::GbrbmTrainConfig;
use crate::math::AdamConfig;
use crate::mdrbm::SampleConfig;
use crate::training::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Drbm,
    #[serde(rename = "drbm+elm")]
    DrbmElm,
    Mdrbm,
    #[serde(rename = "4nn")]
    Nn4,
}

impl ModelKind {
    pub fn needs_theta0(&self) -> bool {
        matches!(self, ModelKind::DrbmElm | ModelKind::Mdrbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta0Source {
    Random,
    Gbrbm,
}

/// Where the dataset files live, relative to the data directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// IDX image/label file pairs (train and test distributed separately).
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    /// CIFAR-10 binary batches (train and test distributed separately).
    Cifar10 {
        train_batches: Vec<PathBuf>,
        test_batches: Vec<PathBuf>,
    },
    /// CSV files pooled together; the train/test split is drawn by seeded
    /// shuffle of the pool at the configured sizes.
    Csv {
        files: Vec<PathBuf>,
        label_column: String,
        #[serde(default = "default_delimiter")]
        delimiter: char,
    },
}

fn default_delimiter() -> char {
    ','
}

impl DatasetSource {
    pub fn paths(&self) -> Vec<&PathBuf> {
        match self {
            DatasetSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => vec![train_images, train_labels, test_images, test_labels],
            DatasetSource::Cifar10 {
                train_batches,
                test_batches,
            } => train_batches.iter().chain(test_batches).collect(),
            DatasetSource::Csv { files, .. } => files.iter().collect(),
        }
    }
}

// `flatten` below is incompatible with deny_unknown_fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default)]
    pub stratified: bool,
}

/// Widths of the two hidden layers. For the stacked models `pelm_hidden` is
/// the frozen-layer width and `drbm_hidden` the classifier's hidden width;
/// the four-layer network uses them as its two hidden widths; the plain
/// classifier uses only `drbm_hidden`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LayerConfig {
    pub pelm_hidden: usize,
    pub drbm_hidden: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbrbmSettings {
    #[serde(default = "default_gbrbm_epochs")]
    pub epochs: usize,
    /// Mini-batch size for pretraining; defaults to the training batch size.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_cd_k")]
    pub cd_k: usize,
    #[serde(default)]
    pub adam: AdamConfig,
}

fn default_gbrbm_epochs() -> usize {
    100
}

fn default_cd_k() -> usize {
    1
}

impl Default for GbrbmSettings {
    fn default() -> Self {
        GbrbmSettings {
            epochs: default_gbrbm_epochs(),
            batch_size: None,
            cd_k: default_cd_k(),
            adam: AdamConfig::default(),
        }
    }
}

impl GbrbmSettings {
    pub fn resolve(&self, train_batch_size: usize) -> GbrbmTrainConfig {
        GbrbmTrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size.unwrap_or(train_batch_size),
            cd_k: self.cd_k,
            adam: self.adam,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelKind,
    #[serde(default)]
    pub theta0: Option<Theta0Source>,
    pub layers: LayerConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub sampling: SampleConfig,
    #[serde(default)]
    pub gbrbm: GbrbmSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_noise_grid")]
    pub noise_grid: Vec<f64>,
    /// Independent noise redraws per (sigma, trained repeat).
    #[serde(default = "default_noise_repeats")]
    pub noise_repeats: usize,
    /// Inject noise into raw inputs and re-standardize, instead of adding it
    /// to the standardized inputs.
    #[serde(default)]
    pub noise_before_standardize: bool,
}

fn default_seed() -> u64 {
    1
}

fn default_repeats() -> usize {
    5
}

fn default_noise_repeats() -> usize {
    1
}

fn default_noise_grid() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::config(format!("config encode: {e}")))
    }

    /// Stable fingerprint of the full configuration.
    pub fn digest(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)
            .map_err(|e| Error::config(format!("config encode: {e}")))?;
        Ok(hex64(fnv1a64(canonical.as_bytes())))
    }

    /// Human-readable model label, e.g. `MDRBM(G)` or `4NN`.
    pub fn model_label(&self) -> String {
        let suffix = match self.theta0 {
            Some(Theta0Source::Random) => "(R)",
            Some(Theta0Source::Gbrbm) => "(G)",
            None => "",
        };
        match self.model {
            ModelKind::Drbm => "DRBM".to_string(),
            ModelKind::DrbmElm => format!("DRBM+ELM{suffix}"),
            ModelKind::Mdrbm => format!("MDRBM{suffix}"),
            ModelKind::Nn4 => "4NN".to_string(),
        }
    }

    /// Validate internal consistency and that every referenced file exists
    /// under `data_dir`.
    pub fn validate(&self, data_dir: &Path) -> Result<()> {
        match (self.model.needs_theta0(), self.theta0.is_some()) {
            (true, false) => {
                return Err(Error::config(format!(
                    "model {:?} requires a theta0 source (random or gbrbm)",
                    self.model
                )))
            }
            (false, true) => {
                return Err(Error::config(format!(
                    "model {:?} does not take a theta0 source",
                    self.model
                )))
            }
            _ => {}
        }
        if self.layers.pelm_hidden == 0 || self.layers.drbm_hidden == 0 {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.dataset.n_train == 0 || self.dataset.n_test == 0 {
            return Err(Error::config("dataset sizes must be positive"));
        }
        if self.repeats == 0 || self.noise_repeats == 0 {
            return Err(Error::config("repeats must be positive"));
        }
        if self.train.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        self.sampling
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        if self.noise_grid.is_empty() {
            return Err(Error::config("noise grid must not be empty"));
        }
        if self.noise_grid[0] != 0.0 {
            return Err(Error::config("noise grid must start at 0"));
        }
        for w in self.noise_grid.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::config("noise grid must be strictly ascending"));
            }
        }
        if self.noise_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::config("noise grid entries must be finite and nonnegative"));
        }
        for path in self.dataset.source.paths() {
            let full = data_dir.join(path);
            if !full.exists() {
                return Err(Error::config(format!(
                    "dataset file not found: {}",
                    full.display()
                )));
            }
        }
        Ok(())
    }

    /// Built-in dataset presets with the benchmark layouts and sizes:
    /// `mnist`, `fmnist`, `ulc`, `cifar10`. Paths are relative to the data
    /// directory.
    pub fn preset(dataset: &str, model: ModelKind, theta0: Option<Theta0Source>) -> Result<Self> {
        let (dataset_config, hidden, batch_size) = match dataset {
            "mnist" => (
                DatasetConfig {
                    name: "mnist".into(),
                    source: DatasetSource::Idx {
                        train_images: "mnist/train-images-idx3-ubyte".into(),
                        train_labels: "mnist/train-labels-idx1-ubyte".into(),
                        test_images: "mnist/t10k-images-idx3-ubyte".into(),
                        test_labels: "mnist/t10k-labels-idx1-ubyte".into(),
                    },
                    n_train: 3000,
                    n_test: 10000,
                    stratified: false,
                },
                500,
                100,
            ),
            "fmnist" => (
                DatasetConfig {
                    name: "fmnist".into(),
                    source: DatasetSource::Idx {
                        train_images: "fmnist/train-images-idx3-ubyte".into(),
                        train_labels: "fmnist/train-labels-idx1-ubyte".into(),
                        test_images: "fmnist/t10k-images-idx3-ubyte".into(),
                        test_labels: "fmnist/t10k-labels-idx1-ubyte".into(),
                    },
                    n_train: 6000,
                    n_test: 10000,
                    stratified: false,
                },
                500,
                100,
            ),
            "ulc" => (
                DatasetConfig {
                    name: "ulc".into(),
                    source: DatasetSource::Csv {
                        files: vec!["ulc/training.csv".into(), "ulc/testing.csv".into()],
                        label_column: "class".into(),
                        delimiter: ',',
                    },
                    n_train: 472,
                    n_test: 203,
                    stratified: false,
                },
                100,
                20,
            ),
            "cifar10" => (
                DatasetConfig {
                    name: "cifar10".into(),
                    source: DatasetSource::Cifar10 {
                        train_batches: (1..=5)
                            .map(|i| PathBuf::from(format!("cifar10/data_batch_{i}.bin")))
                            .collect(),
                        test_batches: vec!["cifar10/test_batch.bin".into()],
                    },
                    n_train: 3000,
                    n_test: 10000,
                    stratified: false,
                },
                500,
                100,
            ),
            other => {
                return Err(Error::config(format!(
                    "unknown dataset preset {other:?} (expected mnist, fmnist, ulc, or cifar10)"
                )))
            }
        };
        Ok(ExperimentConfig {
            dataset: dataset_config,
            model,
            theta0,
            layers: LayerConfig {
                pelm_hidden: hidden,
                drbm_hidden: hidden,
            },
            train: TrainConfig {
                epochs: 300,
                batch_size,
                adam: AdamConfig::default(),
                eval_every: 1,
            },
            sampling: SampleConfig::default(),
            gbrbm: GbrbmSettings::default(),
            seed: default_seed(),
            repeats: default_repeats(),
            noise_grid: default_noise_grid(),
            noise_repeats: default_noise_repeats(),
            noise_before_standardize: false,
        })
    }
}
