//! Run configuration files (TOML).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kfusion::{CombinerConfig, CsvSchema, EnsembleConfig, ExperimentConfig, ProtocolConfig};
use serde::{Deserialize, Serialize};

/// Where the dataset lives and how to parse it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Relative paths are resolved against the directory of the config file.
    pub path: PathBuf,
    /// Dataset name used in reports; defaults to the file stem.
    pub name: Option<String>,
    /// Free-form lines copied into the report notes.
    pub notes: Vec<String>,
    pub schema: CsvSchema,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data.csv"),
            name: None,
            notes: Vec::new(),
            schema: CsvSchema::default(),
        }
    }
}

/// One experiment: a dataset plus every hyperparameter of the pipeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces the protocol, ensemble and combiner seeds.
    pub seed: Option<u64>,
    pub fit_on_train: bool,
    pub data: DataConfig,
    pub protocol: ProtocolConfig,
    pub ensemble: EnsembleConfig,
    pub combiner: CombinerConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file and makes its data path absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.data.path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.data.path = base.join(&cfg.data.path);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Applies a global seed override and folds it into the section seeds,
    /// so the written config reproduces the run on its own.
    pub fn resolved(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed.or(self.seed) {
            let exp = self.experiment().with_seed(s);
            self.protocol = exp.protocol;
            self.ensemble = exp.ensemble;
            self.combiner = exp.combiner;
            self.seed = Some(s);
        }
        self
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let exp = ExperimentConfig {
            protocol: self.protocol.clone(),
            fit_on_train: self.fit_on_train,
            ensemble: self.ensemble.clone(),
            combiner: self.combiner,
        };
        match self.seed {
            Some(s) => exp.with_seed(s),
            None => exp,
        }
    }
}

/// The `bench` command's list of runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Run config files, relative to the bench file.
    pub runs: Vec<PathBuf>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for run in &mut cfg.runs {
            if run.is_relative() {
                *run = base.join(&*run);
            }
        }
        Ok(cfg)
    }
}

/// Default configuration as TOML, with the optional fields that the
/// serializer omits listed as comments.
pub fn documented_defaults() -> String {
    let body = RunConfig::default().to_toml().expect("default config serializes");
    format!(
        "# Optional fields (unset by default):\n\
         #   seed = <u64>          overrides protocol, ensemble and combiner seeds\n\
         #   data.name = <string>  report name, defaults to the file stem\n\
         #   combiner.cap = <n>    dictionary size limit, unbounded by default\n\
         # Kernels: {{ kind = \"gaussian\", sigma = 1.0 }}, {{ kind = \"polynomial\", degree = 2, offset = 1.0 }}, \
         {{ kind = \"linear\" }}\n\
         # protocol.kind: auto | holdout | window_cv | loo; data.schema.missing: drop | impute-mean\n\
         # ensemble.hidden_sizes = [] cycles FN, ceil(1.5 FN), 2 FN\n\n{body}"
    )
}
