//! Run configuration: a single TOML file mirroring the pipeline, data and
//! training knobs, validated with field-level messages.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, normalize, split, synth_classification, synth_regression, ClassSynthKind,
    CsvSchema, CsvTask, Dataset, NormalizeMethod, SynthKind, TargetColumn,
};
use crate::error::{Error, Result};
use crate::nn::{Loss, Optimizer, TaskKind, TrainConfig};
use crate::pruning::CompensationMode;
use crate::refine::RefineConfig;
use crate::sizing::SizingMode;

fn cfg_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub prune: PruneSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// "csv", "synth_regression" or "synth_classification".
    pub source: String,
    #[serde(default)]
    pub path: Option<String>,
    /// "classification" or "regression"; required for csv.
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub target_column: Option<String>,
    #[serde(default)]
    pub target_index: Option<usize>,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// "zscore", "minmax" or "none".
    #[serde(default = "default_normalize")]
    pub normalize: String,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_true")]
    pub stratified: bool,
    // synthetic generators
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub noise_sd: Option<f64>,
    #[serde(default)]
    pub features: Option<usize>,
    #[serde(default)]
    pub classes: Option<usize>,
    #[serde(default)]
    pub relevant: Option<usize>,
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_true() -> bool {
    true
}

fn default_normalize() -> String {
    "zscore".into()
}

fn default_split() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_layers: usize,
    #[serde(default = "default_sizing")]
    pub sizing_mode: SizingMode,
}

fn default_sizing() -> SizingMode {
    SizingMode::Paper
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub patience: Option<usize>,
    /// "cross_entropy" or "mse"; defaults by task.
    #[serde(default)]
    pub loss: Option<String>,
}

fn default_optimizer() -> String {
    "adam".into()
}

fn default_lr() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneSection {
    pub epsilon: f64,
    #[serde(default = "default_retrain_fraction")]
    pub retrain_fraction: f64,
    #[serde(default = "default_compensation")]
    pub compensation: CompensationMode,
}

fn default_retrain_fraction() -> f64 {
    0.15
}

fn default_compensation() -> CompensationMode {
    CompensationMode::Weighted
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| cfg_err("<config>", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prune.epsilon > 0.0) {
            return Err(cfg_err("prune.epsilon", "must be > 0"));
        }
        if !(self.prune.retrain_fraction > 0.0 && self.prune.retrain_fraction <= 1.0) {
            return Err(cfg_err("prune.retrain_fraction", "must be in (0, 1]"));
        }
        if self.train.epochs == 0 {
            return Err(cfg_err("train.epochs", "must be >= 1"));
        }
        if self.train.batch_size == 0 {
            return Err(cfg_err("train.batch_size", "must be >= 1"));
        }
        if self.train.learning_rate <= 0.0 {
            return Err(cfg_err("train.learning_rate", "must be > 0"));
        }
        if let Some(p) = self.train.patience {
            if p == 0 || p > self.train.epochs {
                return Err(cfg_err("train.patience", "must be in 1..=epochs"));
            }
        }
        if self.model.hidden_layers == 0 {
            return Err(cfg_err("model.hidden_layers", "must be >= 1"));
        }
        match self.train.optimizer.as_str() {
            "adam" | "sgd" => {}
            other => return Err(cfg_err("train.optimizer", format!("unknown `{other}`"))),
        }
        match self.data.source.as_str() {
            "csv" => {
                if self.data.path.is_none() {
                    return Err(cfg_err("data.path", "required for csv source"));
                }
                match self.data.task.as_deref() {
                    Some("classification") | Some("regression") => {}
                    Some(other) => {
                        return Err(cfg_err("data.task", format!("unknown `{other}`")))
                    }
                    None => return Err(cfg_err("data.task", "required for csv source")),
                }
                if self.data.target_column.is_none() && self.data.target_index.is_none() {
                    return Err(cfg_err(
                        "data.target_column",
                        "set target_column or target_index",
                    ));
                }
                if self.data.delimiter.len() != 1 {
                    return Err(cfg_err("data.delimiter", "must be a single character"));
                }
            }
            "synth_regression" | "synth_classification" => {
                if self.data.kind.is_none() {
                    return Err(cfg_err("data.kind", "required for synthetic source"));
                }
                if self.data.n.is_none() {
                    return Err(cfg_err("data.n", "required for synthetic source"));
                }
            }
            other => return Err(cfg_err("data.source", format!("unknown `{other}`"))),
        }
        match self.data.normalize.as_str() {
            "zscore" | "minmax" | "none" => {}
            other => return Err(cfg_err("data.normalize", format!("unknown `{other}`"))),
        }
        let total: f64 = self.data.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(cfg_err("data.split", "fractions must sum to 1"));
        }
        Ok(())
    }

    /// Builds, splits and normalizes the dataset described by [data].
    pub fn build_dataset(&self) -> Result<Dataset> {
        let d = &self.data;
        let ds = match d.source.as_str() {
            "csv" => {
                let target = match (&d.target_column, d.target_index) {
                    (Some(name), _) => TargetColumn::Name(name.clone()),
                    (None, Some(i)) => TargetColumn::Index(i),
                    _ => unreachable!("validated"),
                };
                let task = if d.task.as_deref() == Some("classification") {
                    CsvTask::Classification
                } else {
                    CsvTask::Regression
                };
                let mut schema = CsvSchema::new(target, task);
                schema.delimiter = d.delimiter.as_bytes()[0];
                schema.has_header = d.has_header;
                load_csv(d.path.as_ref().unwrap(), &schema)?
            }
            "synth_regression" => {
                let kind = match d.kind.as_deref().unwrap() {
                    "linear" => SynthKind::Linear,
                    "piecewise" => SynthKind::Piecewise,
                    "friedman" => SynthKind::FriedmanLike,
                    other => return Err(cfg_err("data.kind", format!("unknown `{other}`"))),
                };
                synth_regression(kind, d.n.unwrap(), d.noise_sd.unwrap_or(0.0), self.seed)?
            }
            "synth_classification" => {
                let kind = match d.kind.as_deref().unwrap() {
                    "blobs" => ClassSynthKind::Blobs {
                        classes: d.classes.unwrap_or(2),
                    },
                    "sign_parity" => ClassSynthKind::SignParity {
                        relevant: d.relevant.unwrap_or(3),
                    },
                    "prototypes" => ClassSynthKind::Prototypes {
                        classes: d.classes.unwrap_or(10),
                    },
                    other => return Err(cfg_err("data.kind", format!("unknown `{other}`"))),
                };
                synth_classification(
                    kind,
                    d.n.unwrap(),
                    d.features.unwrap_or(10),
                    d.noise_sd.unwrap_or(0.0),
                    self.seed,
                )?
            }
            _ => unreachable!("validated"),
        };
        let ds = split(
            &ds,
            (d.split[0], d.split[1], d.split[2]),
            d.stratified,
            crate::refine::derive_seed(self.seed, 100),
        )?;
        Ok(match d.normalize.as_str() {
            "zscore" => normalize(&ds, NormalizeMethod::Zscore)?.0,
            "minmax" => normalize(&ds, NormalizeMethod::Minmax)?.0,
            _ => ds,
        })
    }

    pub fn train_config(&self, task: TaskKind) -> TrainConfig {
        let loss = match self.train.loss.as_deref() {
            Some("mse") => Loss::Mse,
            Some("cross_entropy") => Loss::CrossEntropy,
            _ => {
                if task.is_classification() {
                    Loss::CrossEntropy
                } else {
                    Loss::Mse
                }
            }
        };
        let optimizer = match self.train.optimizer.as_str() {
            "sgd" => Optimizer::Sgd {
                lr: self.train.learning_rate,
            },
            _ => Optimizer::adam(self.train.learning_rate),
        };
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            optimizer,
            loss,
            early_stopping_patience: self.train.patience,
            seed: self.seed,
        }
    }

    pub fn refine_config(&self, task: TaskKind) -> RefineConfig {
        RefineConfig {
            epsilon: self.prune.epsilon,
            retrain_fraction: self.prune.retrain_fraction,
            compensation: self.prune.compensation,
            train: self.train_config(task),
            hidden_layers: self.model.hidden_layers,
            sizing_mode: self.model.sizing_mode,
            seed: self.seed,
        }
    }

    /// Fingerprint of the dataset source: file contents for csv, generator
    /// parameters for synthetic data.
    pub fn dataset_fingerprint(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        if self.data.source == "csv" {
            let path = self.data.path.as_ref().unwrap();
            let bytes =
                std::fs::read(path).map_err(|e| Error::io(path.clone(), e))?;
            hasher.update(&bytes);
        } else {
            hasher.update(
                serde_json::to_vec(&self.data).expect("data section serializes"),
            );
            hasher.update(self.seed.to_le_bytes());
        }
        let digest = hasher.finalize();
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
